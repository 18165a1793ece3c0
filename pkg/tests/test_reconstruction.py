import numpy as np
import pytest

from bindeblur.errors import IncompleteBand, UnsupportedDims
from bindeblur.feasibility import SearchBudget, solve_feasibility
from bindeblur.lattice import SolverConfig
from bindeblur.oracle import brute_force_recover
from bindeblur.reconstruction import (BandPolicy, BandShape, NoiseModel, RecoveryStatus,
                                      _margin_system, classify_dims, minimal_band, recover,
                                      recover_prime_power, recover_rect, recover_square_prime)
from bindeblur.spectral import Band, BandedSpectrum, BinaryMatrix, dft_on

SHORT = SearchBudget(time_limit=60)


def check_report(report, x, spec):
    assert report.status is RecoveryStatus.RECOVERED
    assert report.matrix == x
    assert report.band_residual < SolverConfig().epsilon
    assert spec.max_deviation(dft_on(report.matrix, spec.band)) < 1e-3


@pytest.mark.parametrize("dims,kind", [((11, 13), "rect"), ((3, 5), "rect"), ((17, 17), "square_prime"),
                                       ((2, 2), "square_prime"), ((9, 9), "prime_power"),
                                       ((25, 25), "prime_power"), ((8, 8), "prime_power")])
def test_classify_dims(dims, kind):
    assert classify_dims(*dims) == kind


@pytest.mark.parametrize("dims", [(6, 6), (15, 15), (4, 6), (5, 9), (1, 1), (7, 7 * 7)])
def test_unsupported_dims(dims):
    with pytest.raises(UnsupportedDims):
        classify_dims(*dims)


def test_minimal_bands():
    assert minimal_band(11, 13) == Band.four_coefficient()
    assert minimal_band(17, 17) == Band.square(4)
    assert minimal_band(29, 29) == Band.square(5)
    assert minimal_band(25, 25) == Band.square(5)
    assert minimal_band(9, 9) == Band.square(3)
    assert BandPolicy.minimal(7, 11).shape is BandShape.FOUR_COEFFICIENT
    with pytest.raises(ValueError):
        BandPolicy(BandShape.SQUARE)


@pytest.mark.parametrize("dims,band", [((3, 5), Band.four_coefficient()),
                                       ((17, 17), Band.square(4)), ((9, 9), Band.square(3))])
def test_zero_matrix(dims, band):
    x = BinaryMatrix.zeros(*dims)
    spec = dft_on(x, band)
    check_report(recover(spec, budget=SHORT), x, spec)


@pytest.mark.parametrize("seed", range(10))
def test_rect_3x5_matches_oracle(seed):
    x = BinaryMatrix.random(3, 5, 1 + seed % 13, seed)
    spec = dft_on(x, Band.four_coefficient())
    report = recover_rect(spec, SHORT)
    check_report(report, x, spec)
    assert brute_force_recover(spec) == {report.matrix}


@pytest.mark.parametrize("seed", range(3))
def test_rect_5x7(seed):
    x = BinaryMatrix.random(5, 7, 17, seed)
    spec = dft_on(x, Band.four_coefficient())
    report = recover_rect(spec, SHORT)
    check_report(report, x, spec)
    assert [o.outcome for o in report.per_direction] == ["exact_sums", "exact_sums"]


def test_rect_engines_agree():
    x = BinaryMatrix.random(5, 7, 15, 8)
    spec = dft_on(x, Band.four_coefficient())
    for engine in ("margin", "lp"):
        check_report(recover_rect(spec, SHORT, engine=engine), x, spec)


def test_rect_skip_rule():
    x = BinaryMatrix.random(2, 5, 4, 3)
    spec = dft_on(x, Band.four_coefficient())
    report = recover_rect(spec, SHORT)
    check_report(report, x, spec)
    assert report.per_direction[0].outcome == "skipped"


def test_rect_needs_coefficients():
    x = BinaryMatrix.random(3, 5, 7, 0)
    spec = dft_on(x, Band.from_indexes([(0, 1), (1, 0)]))
    with pytest.raises(IncompleteBand):
        recover_rect(spec)


def test_rect_inconsistent_data():
    x = BinaryMatrix.random(3, 5, 7, 0)
    spec = dft_on(x, Band.four_coefficient())
    vals = dict(spec.values)
    vals[(1, 1)] += 0.5
    vals[(-1, -1)] = vals[(1, 1)].conjugate()
    bad = BandedSpectrum(3, 5, spec.band, vals)
    report = recover_rect(bad, SHORT)
    assert report.status is RecoveryStatus.INCONSISTENT and report.matrix is None


@pytest.mark.slow
def test_rect_11x13_column_sums():
    x = BinaryMatrix.random(11, 13, 71, 0)
    spec = dft_on(x, Band.four_coefficient())
    res = solve_feasibility(_margin_system(13, 11, spec[0, 1], 71), SHORT)
    assert res.feasible and np.array_equal(res.x, x.col_sums())


def test_rect_11x13_reports_budget_not_a_wrong_matrix():
    x = BinaryMatrix.random(11, 13, 71, 0)
    spec = dft_on(x, Band.four_coefficient())
    report = recover_rect(spec, SearchBudget(time_limit=3))
    assert report.status in (RecoveryStatus.BUDGET_EXHAUSTED, RecoveryStatus.RECOVERED)
    if report.recovered:
        assert report.matrix == x


@pytest.mark.parametrize("seed", range(4))
def test_square_prime_17(seed):
    x = BinaryMatrix.random(17, 17, 144, seed)
    spec = dft_on(x, Band.square(4))
    report = recover_square_prime(spec, budget=SHORT)
    check_report(report, x, spec)
    assert report.directions_recovered == 14


@pytest.mark.parametrize("seed", range(3))
def test_prime_power_9(seed):
    x = BinaryMatrix.random(9, 9, 30, seed)
    spec = dft_on(x, Band.square(3))
    check_report(recover_prime_power(spec, budget=SHORT), x, spec)


def test_prime_power_25():
    x = BinaryMatrix.random(25, 25, 312, 1)
    spec = dft_on(x, Band.square(5))
    check_report(recover_prime_power(spec, budget=SHORT), x, spec)


def test_wrong_direction_inconsistency_and_retry():
    # one slope class of this model admits a short wrong vector at L=5
    x = BinaryMatrix.random(29, 29, 420, 9)
    spec = dft_on(x, Band.square(5))
    plain = recover(spec, budget=SHORT)
    assert plain.status is RecoveryStatus.INCONSISTENT and plain.matrix is None
    assert plain.retry_candidates[0] == (4, 3)
    fixed = recover(spec, budget=SHORT, retry=True)
    assert fixed.retries == 1
    check_report(fixed, x, spec)


def test_retry_leaves_success_alone():
    x = BinaryMatrix.random(17, 17, 144, 0)
    spec = dft_on(x, Band.square(4))
    report = recover(spec, budget=SHORT, retry=True)
    assert report.recovered and report.retries == 0


def test_band_monotonicity_on_small_corpus():
    for seed in range(4):
        x = BinaryMatrix.random(17, 17, 144, seed)
        before = recover(dft_on(x, Band.square(4)), budget=SHORT)
        after = recover(dft_on(x, Band.square(5)), budget=SHORT)
        if before.recovered:
            assert after.status is not RecoveryStatus.INCONSISTENT


def test_noise_model():
    nm = NoiseModel.from_variance(1e-4)
    assert nm.sigma == pytest.approx(0.01)
    assert nm.tolerance == pytest.approx(0.06)
    cfg = nm.config(SolverConfig())
    assert cfg.beta == pytest.approx(300) and cfg.epsilon == pytest.approx(0.06)
    assert nm.min_members(29) == 6
    assert NoiseModel(1e-12).min_members(29) == 2
    with pytest.raises(ValueError):
        NoiseModel(0.0)


def test_small_noise_is_tolerated():
    from bindeblur.spectral import add_noise
    x = BinaryMatrix.random(17, 17, 144, 2)
    spec = add_noise(dft_on(x, Band.square(4)), 1e-10, 5)
    report = recover(spec, budget=SHORT, noise=NoiseModel.from_variance(1e-10))
    check_report(report, x, spec)


def test_recover_rejects_unsupported():
    spec = dft_on(BinaryMatrix.zeros(6, 6), Band.square(1))
    with pytest.raises(UnsupportedDims):
        recover(spec)
