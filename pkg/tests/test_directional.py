import cmath

import numpy as np
import pytest

from bindeblur.directional import (AXES, DataKind, describe_block, extract_constraint_block,
                                   line_sum_system, recover_coarse_then_fine,
                                   recover_direction_sums)
from bindeblur.errors import UnstableCoarseSolve
from bindeblur.lines import canonical_directions, direction_classes, prime_power_partition
from bindeblur.spectral import Band, BandedSpectrum, BinaryMatrix, dft_on


def true_sums(x: BinaryMatrix, d) -> np.ndarray:
    return d.partition().line_sums(x.bits)


def fine_sums(x: BinaryMatrix, p: int, canon) -> np.ndarray:
    labels = prime_power_partition(p, 2, *canon).fine
    return np.bincount(labels.ravel() - 1, weights=x.bits.ravel(), minlength=p * p).astype(int)


def classes(n, band):
    if n in (4, 9, 25, 49):
        return direction_classes(n, band.indexes)
    return canonical_directions(n, band)


def direction(n, band, kl):
    return next(d for d in classes(n, band) if kl in d.members)


@pytest.mark.parametrize("seed", range(5))
def test_diagonal_sums_17x17(seed):
    x = BinaryMatrix.random(17, 17, 144, seed)
    spec = dft_on(x, Band.square(4))
    d = direction(17, spec.band, (1, 1))
    assert d.m_count == 4
    out = recover_direction_sums(spec, d)
    assert out.kind is DataKind.EXACT_SUMS
    assert np.array_equal(out.sums, true_sums(x, d))
    assert out.sums.sum() == 144


@pytest.mark.parametrize("n,band,popcount", [(7, 2, 20), (11, 3, 50), (13, 3, 70), (19, 4, 150),
                                             (23, 4, 220), (29, 5, 420)])
def test_exact_sums_always_true(n, band, popcount):
    x = BinaryMatrix.random(n, n, popcount, n)
    spec = dft_on(x, Band.square(band))
    for d in canonical_directions(n, spec.band):
        out = recover_direction_sums(spec, d)
        if out.kind is DataKind.EXACT_SUMS:
            assert np.array_equal(out.sums, true_sums(x, d)), d
            assert out.sums.sum() == popcount


def test_single_member_direction_is_skipped():
    x = BinaryMatrix.random(17, 17, 144, 0)
    spec = dft_on(x, Band.square(4))
    d = next(d for d in canonical_directions(17, spec.band) if d.m_count == 1)
    out = recover_direction_sums(spec, d)
    assert out.kind is DataKind.SKIPPED and not out.recovered
    assert set(out.raw) == set(d.members)


def test_line_sum_system_rows():
    x = BinaryMatrix.random(11, 11, 40, 2)
    spec = dft_on(x, Band.square(3))
    d = direction(11, spec.band, (0, 1))
    sys = line_sum_system(spec, d)
    assert sys.row_count == 2 * d.m_count + 1
    assert sys.max_residual(true_sums(x, d)) < 1e-9
    assert np.all(sys.upper == 11)


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("axis", AXES)
def test_coarse_then_fine_9x9(seed, axis):
    x = BinaryMatrix.random(9, 9, 30, seed)
    spec = dft_on(x, Band.square(3))
    d = direction(9, spec.band, axis)
    out = recover_coarse_then_fine(spec, 3, d)
    assert out.kind is DataKind.EXACT_SUMS
    assert np.array_equal(out.sums, fine_sums(x, 3, axis))


def test_coarse_then_fine_all_zero():
    spec = dft_on(BinaryMatrix.zeros(9, 9), Band.square(3))
    out = recover_coarse_then_fine(spec, 3, direction(9, spec.band, (0, 1)))
    assert out.kind is DataKind.EXACT_SUMS and not out.sums.any()


def test_coarse_then_fine_needs_coarse_member():
    x = BinaryMatrix.random(9, 9, 30, 0)
    spec = dft_on(x, Band.square(2))
    with pytest.raises(UnstableCoarseSolve):
        recover_coarse_then_fine(spec, 3, direction(9, spec.band, (0, 1)))


def test_coarse_then_fine_rejects_non_axis():
    spec = dft_on(BinaryMatrix.random(9, 9, 30, 0), Band.square(3))
    with pytest.raises(ValueError):
        recover_coarse_then_fine(spec, 3, direction(9, spec.band, (1, 2)))


def test_worked_constraint_block():
    z = cmath.exp(2j * cmath.pi / 9)
    spec = BandedSpectrum(9, 9, Band.from_indexes([(1, 2)]),
                          {(0, 0): 40, (1, 2): z, (-1, -2): z.conjugate()})
    d = direction_classes(9, [(1, 2)])[0]
    out = extract_constraint_block(spec, 3, d, min_members=1)
    assert out.kind is DataKind.CONSTRAINT_BLOCK
    assert describe_block(out.constraints) == [
        "s1 - s4 = 1", "s1 - s7 = 1", "s2 - s5 = 0", "s2 - s8 = 0",
        "s3 - s6 = 0", "s3 - s9 = 0",
        "s1 + s2 + s3 + s4 + s5 + s6 + s7 + s8 + s9 = 40"]


def test_zero_coefficients_give_uniform_block():
    spec = BandedSpectrum(9, 9, Band.from_indexes([(1, 2)]),
                          {(0, 0): 18, (1, 2): 0j, (-1, -2): 0j})
    d = direction_classes(9, [(1, 2)])[0]
    out = extract_constraint_block(spec, 3, d, min_members=1)
    assert np.all(out.constraints.b[:-1] == 0)


@pytest.mark.parametrize("seed", range(3))
def test_constraint_blocks_hold_for_model_25x25(seed):
    x = BinaryMatrix.random(25, 25, 312, seed)
    spec = dft_on(x, Band.square(5))
    blocks = 0
    for d in classes(25, spec.band):
        if d.canonical in AXES or d.m_count < 2:
            continue
        out = extract_constraint_block(spec, 5, d)
        if out.kind is DataKind.CONSTRAINT_BLOCK:
            blocks += 1
            sums = fine_sums(x, 5, d.canonical)
            assert out.constraints.max_residual(sums) < 1e-9
    assert blocks > 0


def test_constraint_block_skips_short_directions():
    spec = dft_on(BinaryMatrix.random(9, 9, 30, 0), Band.square(3))
    d = next(d for d in classes(9, spec.band)
             if d.canonical not in AXES and d.m_count < 2)
    assert extract_constraint_block(spec, 3, d).kind is DataKind.SKIPPED
