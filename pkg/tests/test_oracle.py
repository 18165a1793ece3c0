import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bindeblur.errors import TooLarge
from bindeblur.oracle import (Exhaustive, Sampled, audit_uniqueness, brute_force_recover,
                              counterexample_pair, decode, encode, interchange_neighbors)
from bindeblur.spectral import Band, BinaryMatrix, dft_forward, dft_on


@given(st.integers(1, 4), st.integers(1, 5), st.data())
def test_encode_decode_round_trip(n1, n2, data):
    code = data.draw(st.integers(0, 2 ** (n1 * n2) - 1))
    x = decode(code, n1, n2)
    assert encode(x) == code
    assert x.bits.ravel()[0] == code & 1


@pytest.mark.parametrize("seed", range(5))
def test_brute_force_finds_exactly_the_model(seed):
    x = BinaryMatrix.random(3, 5, 6, seed)
    assert brute_force_recover(dft_on(x, Band.four_coefficient())) == {x}


def test_brute_force_lists_all_matches_of_weak_band():
    x = BinaryMatrix.random(2, 3, 3, 0)
    spec = dft_on(x, Band.from_indexes([]))
    found = brute_force_recover(spec)
    assert len(found) == 20 and x in found  # every matrix with three ones


def test_brute_force_size_limit():
    spec = dft_on(BinaryMatrix.zeros(5, 6), Band.square(1))
    with pytest.raises(TooLarge):
        brute_force_recover(spec)


def test_exhaustive_audit_four_coefficients_3x5():
    audit = audit_uniqueness((3, 5), Band.four_coefficient())
    assert audit.examined == 2 ** 15 and audit.unique and audit.collision_count == 0


def test_exhaustive_audit_square_3():
    assert audit_uniqueness((3, 3), Band.square(1)).unique


def test_audit_detects_weak_band_collisions():
    audit = audit_uniqueness((3, 5), Band.from_indexes([(0, 1), (1, 0)]))
    assert audit.collision_count > 0
    for x, y in itertools.islice(audit.pairs(), 50):
        assert x != y
        band = audit.band
        assert dft_on(x, band).max_deviation(dft_on(y, band)) < 1e-9


def test_checkerboards_collide_in_audit():
    audit = audit_uniqueness((4, 4), Band.square(1))
    x, y = counterexample_pair(2, 2)
    assert audit.contains_pair(x, y)


def test_sampled_audit():
    audit = audit_uniqueness((5, 5), Band.square(2), Sampled(5000, seed=3))
    assert audit.unique and 4900 <= audit.examined <= 5000
    with pytest.raises(ValueError):
        Sampled(1)


def test_sampled_audit_finds_planted_weakness():
    audit = audit_uniqueness((3, 3), Band.from_indexes([]), Sampled(200, seed=0))
    assert audit.collision_count > 0


def test_checkerboard_pair():
    x, y = counterexample_pair(2, 2)
    assert x.popcount == y.popcount == 8
    fx, fy = dft_forward(x), dft_forward(y)
    differ = [kl for kl in fx.values if abs(fx[kl] - fy[kl]) > 1e-9]
    assert differ == [(2, 2)]
    assert abs(fx[2, 2] - 8) < 1e-9 and abs(fy[2, 2] + 8) < 1e-9


def test_stripe_pair_agrees_on_band():
    x, y = counterexample_pair(3, 2)
    band = Band.square(2)
    assert dft_on(x, band).max_deviation(dft_on(y, band)) < 1e-9
    assert dft_on(x, Band.square(3)).max_deviation(dft_on(y, Band.square(3))) > 1


def test_counterexample_validation():
    with pytest.raises(ValueError):
        counterexample_pair(4, 2)
    with pytest.raises(ValueError):
        counterexample_pair(3, 1)


def test_interchange_neighbors_keep_margins():
    x = BinaryMatrix.random(4, 5, 9, 1)
    count = 0
    for y in interchange_neighbors(x):
        count += 1
        assert np.array_equal(y.row_sums(), x.row_sums())
        assert np.array_equal(y.col_sums(), x.col_sums())
        assert (y.bits != x.bits).sum() == 4
    assert count > 0
