import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bindeblur.stability import (count_bounded_compositions, count_matrices_given_sums,
                                 digits_estimate, nu, round_half_up, stability)


def brute_compositions(s, boxes, cap):
    return sum(1 for v in itertools.product(range(cap + 1), repeat=boxes) if sum(v) == s)


def test_search_space_counts():
    assert count_bounded_compositions(38, 7, 11) == 1_528_688
    assert count_bounded_compositions(38, 11, 7) == 443_658_688
    assert count_bounded_compositions(0, 5, 3) == 1
    assert count_bounded_compositions(-1, 5, 3) == 0
    assert count_bounded_compositions(16, 5, 3) == 0


@given(st.integers(0, 5), st.integers(0, 4), st.integers(0, 25))
def test_compositions_match_brute_force(boxes, cap, s):
    assert count_bounded_compositions(s, boxes, cap) == brute_compositions(s, boxes, cap)


@given(st.integers(1, 12), st.integers(0, 9))
def test_composition_symmetry_and_total(boxes, cap):
    total = sum(count_bounded_compositions(s, boxes, cap) for s in range(boxes * cap + 1))
    assert total == (cap + 1) ** boxes
    s = (boxes * cap) // 3
    assert count_bounded_compositions(s, boxes, cap) == count_bounded_compositions(boxes * cap - s,
                                                                                   boxes, cap)


def test_matrices_given_sums():
    assert count_matrices_given_sums([3] * 11, 7) == 35 ** 11
    assert count_matrices_given_sums([0] * 4, 7) == 1
    assert count_matrices_given_sums([7] * 4, 7) == 1
    with pytest.raises(ValueError):
        count_matrices_given_sums([8], 7)


@pytest.mark.parametrize("p", range(1, 7))
@pytest.mark.parametrize("k", range(0, 4))
def test_nu_brute_force(p, k):
    brute = sum(1 for e in itertools.product(range(-k, k + 1), repeat=p) if sum(e) == 0)
    assert nu(p, k) == brute


def test_nu_small_values_and_dp_cross_check():
    assert nu(2, 1) == 3 and nu(3, 1) == 7
    counts = np.zeros(2 * 13 * 11 + 1, dtype=object)
    counts[13 * 11] = 1
    for _ in range(13):
        new = np.zeros_like(counts)
        for e in range(-11, 12):
            new[max(e, 0):len(counts) + min(e, 0)] += counts[max(-e, 0):len(counts) - max(e, 0)]
        counts = new
    assert nu(13, 11) == counts[13 * 11]


@pytest.mark.parametrize("args,want", [((13, 11, 1), 7), ((29, 29, 2), 11), ((17, 17, 2), 5)])
def test_digits_table_values(args, want):
    assert abs(round_half_up(digits_estimate(*args)) - want) <= 1


def test_digits_monotonicity():
    for k in (3, 7, 11):
        for p in (5, 7, 11, 13):
            vals = [digits_estimate(p, k, m) for m in range(1, 6)]
            assert all(a > b for a, b in zip(vals, vals[1:]))
        ps = [digits_estimate(p, k, 2) for p in (5, 7, 11, 13, 17)]
        assert all(a < b for a, b in zip(ps, ps[1:]))


def test_degenerate_capacity():
    est = stability(2, 0, 1)
    assert est.nu == 1
    assert est.digits == pytest.approx(np.log10(2) - np.log10(np.sqrt(2)))
    with pytest.raises(ValueError):
        digits_estimate(3, 1, 0)


def test_round_half_up():
    assert round_half_up(6.5) == 7 and round_half_up(6.49) == 6
