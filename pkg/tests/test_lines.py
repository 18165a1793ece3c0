import itertools

import numpy as np
import pytest

from bindeblur.errors import ZeroDirection
from bindeblur.lines import (canonical_directions, direction_classes, is_prime, line_partition,
                             prime_power, prime_power_partition, slope_equivalent)
from bindeblur.spectral import Band, BinaryMatrix, dft_on


def test_prime_helpers():
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]
    assert prime_power(25) == (5, 2) and prime_power(8) == (2, 3) and prime_power(12) is None


def test_diagonal_line_of_five():
    part = line_partition(5, 1, 1)
    assert sorted(part.cells(3)) == [(1, 2), (2, 1), (3, 5), (4, 4), (5, 3)]


def test_axis_partitions_are_columns_and_rows():
    cols = line_partition(5, 0, 1).labels
    assert all(len(set(cols[:, c])) == 1 for c in range(5))
    rows = line_partition(5, 1, 0).labels
    assert all(len(set(rows[r, :])) == 1 for r in range(5))


def test_nine_by_nine_direction_has_equal_lines():
    assert list(line_partition(9, 1, 2).sizes()) == [9] * 9


def test_zero_direction_rejected():
    with pytest.raises(ZeroDirection):
        line_partition(7, 7, 0)
    with pytest.raises(ZeroDirection):
        prime_power_partition(3, 2, 9, 0)


def test_slope_equivalence_examples():
    assert slope_equivalent(23, (7, 5), (1, 4))
    assert slope_equivalent(17, (2, 0), (1, 0))
    assert not slope_equivalent(5, (1, 1), (1, 2))


@pytest.mark.parametrize("n", [5, 7, 11, 13, 17])
def test_line_sums_reproduce_coefficients(n):
    x = BinaryMatrix.random(n, n, n * n // 2, n)
    spec = dft_on(x, Band.square(int(np.sqrt(n))))
    for dc in canonical_directions(n, spec.band):
        sums = dc.partition().line_sums(x.bits)
        j = np.arange(1, n + 1)
        for kl in dc.members:
            t = dc.multipliers[kl]
            pred = np.sum(sums * np.exp(2j * np.pi * t * j / n))
            assert abs(pred - spec[kl]) < 1e-9


def test_class_counts_from_experiments():
    c17 = canonical_directions(17, Band.square(4))
    assert len(c17) == 18 and sum(c.m_count == 1 for c in c17) == 4
    assert sum(c.m_count > 1 for c in canonical_directions(23, Band.square(4))) == 8
    assert len(canonical_directions(5, Band.square(2))) == 6


def test_classes_are_disjoint_cover_and_ordered():
    classes = canonical_directions(13, Band.square(3))
    seen = [kl for c in classes for kl in c.members]
    assert len(seen) == len(set(seen)) == (49 - 1) // 2
    for a, b in itertools.combinations(classes, 2):
        assert not slope_equivalent(13, a.canonical, b.canonical)
    for c in classes:
        assert all(slope_equivalent(13, c.canonical, kl) for kl in c.members)
    counts = [c.m_count for c in classes]
    assert counts == sorted(counts, reverse=True)


def test_canonical_tie_break_prefers_nonnegative():
    for c in canonical_directions(11, Band.square(3)):
        k, l = c.canonical
        assert k > 0 or (k == 0 and l > 0)


@pytest.mark.parametrize("n", [p for p in range(2, 32) if is_prime(p)])
def test_every_index_has_small_equivalent(n):
    r = int(np.floor(np.sqrt(n)))
    small = [(k, l) for k in range(-r, r + 1) for l in range(-r, r + 1) if (k, l) != (0, 0)]
    for k in range(n):
        for l in range(n):
            if (k, l) == (0, 0):
                continue
            assert any(slope_equivalent(n, (k, l), s) for s in small), (n, k, l)


def test_equivalent_directions_share_partition():
    a = line_partition(13, 1, 4).labels
    b = line_partition(13, 3, 12).labels
    mapping = {}
    for la, lb in zip(a.ravel(), b.ravel()):
        assert mapping.setdefault(la, lb) == lb


def test_prime_power_partitions():
    cols = prime_power_partition(3, 2, 0, 3)
    assert cols.direction == (0, 1)
    coarse = cols.coarse_labels()
    assert all(coarse[0, c] == (c + 1) % 3 or (coarse[0, c] == 3 and (c + 1) % 3 == 0)
               for c in range(9))
    d = prime_power_partition(2, 2, 1, 1)
    assert list(np.bincount(d.fine.ravel())[1:]) == [4, 4, 4, 4]
    e = prime_power_partition(3, 2, 1, 2)
    assert e.coarse_groups == ((1, 4, 7), (2, 5, 8), (3, 6, 9))


def test_prime_square_classes_attach_coarse_members():
    classes = direction_classes(9, Band.square(3).reduced(9, 9).indexes)
    col = next(c for c in classes if c.canonical == (0, 1))
    assert (0, 3) in col.coarse_members
    assert col.multipliers[(0, 3)] == 3
