import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bindeblur.feasibility import (FeasibilityStatus, IntegerSystem, SearchBudget, solve_dfs,
                                   solve_feasibility, solve_lp, solve_mitm, solve_with_margins)
from bindeblur.spectral import Band, BinaryMatrix, coefficient_weights, dft_on

ENGINES = ["dfs", "mitm", "lp"]


def brute(sys, tol=1e-6):
    ranges = [range(l, h + 1) for l, h in zip(sys.lower, sys.upper)]
    return [np.array(v) for v in itertools.product(*ranges) if sys.max_residual(v) <= tol]


def random_system(rng, n, rows, feasible):
    a = rng.integers(-3, 4, size=(rows, n)).astype(float)
    x = rng.integers(0, 2, size=n)
    b = a @ x + (0 if feasible else rng.integers(0, 2, size=rows) * 0.5)
    return IntegerSystem.binary(a, b)


def test_system_validation():
    with pytest.raises(ValueError):
        IntegerSystem(np.ones((2, 3)), np.ones(3), np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        IntegerSystem(np.ones((1, 2)), [1], [1, 0], [0, 0])
    with pytest.raises(ValueError):
        IntegerSystem(np.array([[np.nan]]), [1], [0], [1])
    with pytest.raises(ValueError):
        SearchBudget(node_limit=0)


@pytest.mark.parametrize("engine", ENGINES)
def test_zero_sum_gives_zero_vector(engine):
    sys = IntegerSystem.binary(np.ones((1, 5)), [0])
    res = solve_feasibility(sys, method=engine)
    assert res.feasible and not res.x.any()


@pytest.mark.parametrize("engine", ENGINES)
def test_contradictory_popcount_is_infeasible(engine):
    # column sums force two ones, the popcount row says three
    a = np.vstack([np.eye(4)[[0, 1]] + np.eye(4)[[2, 3]], np.ones((1, 4))])
    sys = IntegerSystem.binary(a, [1, 1, 3])
    assert solve_feasibility(sys, method=engine).status is FeasibilityStatus.INFEASIBLE


@pytest.mark.parametrize("engine", ENGINES)
def test_stacked_rect_system_returns_model(engine):
    x = BinaryMatrix.random(5, 7, 17, 4)
    cells = np.arange(35)
    cols = (cells[None, :] % 7 == np.arange(7)[:, None]).astype(float)
    rows = (cells[None, :] // 7 == np.arange(5)[:, None]).astype(float)
    w = coefficient_weights(5, 7, [(1, 1)])[0]
    v = dft_on(x, Band.four_coefficient())[(1, 1)]
    a = np.vstack([cols, rows, w.real, w.imag])
    b = np.concatenate([x.col_sums(), x.row_sums(), [v.real, v.imag]])
    sys = IntegerSystem.binary(a, b)
    if engine == "mitm":
        pytest.skip("35 binary variables exceed the meet-in-the-middle split")
    res = solve_feasibility(sys, SearchBudget(time_limit=120), method=engine)
    assert res.feasible
    assert np.array_equal(res.x.reshape(5, 7), x.bits)


def test_agreement_with_enumeration_on_100_systems():
    rng = np.random.default_rng(2024)
    for trial in range(100):
        n = int(rng.integers(1, 21))
        rows = int(rng.integers(1, 4))
        sys = random_system(rng, n, rows, feasible=bool(trial % 2))
        truth = brute(sys) if n <= 14 else None
        for engine in ENGINES:
            res = solve_feasibility(sys, method=engine)
            assert res.status is not FeasibilityStatus.BUDGET_EXHAUSTED
            if res.feasible:
                assert sys.within_bounds(res.x) and sys.max_residual(res.x) <= 1e-6
            if truth is not None:
                assert res.feasible == bool(truth), (trial, engine)
            elif trial % 2:
                assert res.feasible


@given(st.integers(1, 8), st.integers(1, 3), st.integers(0, 3), st.integers(0, 10**6))
def test_boxed_integers_agree(n, rows, cap, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(-2, 3, size=(rows, n)).astype(float)
    x = rng.integers(0, cap + 1, size=n)
    b = a @ x + (rng.integers(0, 2) * 0.5)
    sys = IntegerSystem(a, b, np.zeros(n, np.int64), np.full(n, cap, np.int64))
    truth = bool(brute(sys))
    for engine in ENGINES:
        assert solve_feasibility(sys, method=engine).feasible == truth


def test_budget_exhaustion_is_reported():
    rng = np.random.default_rng(1)
    w = rng.normal(size=(2, 40))
    x = rng.integers(0, 2, size=40)
    sys = IntegerSystem.binary(w, w @ x)
    res = solve_dfs(sys, SearchBudget(node_limit=50))
    assert res.status is FeasibilityStatus.BUDGET_EXHAUSTED
    res = solve_lp(sys, SearchBudget(node_limit=2))
    assert res.status in (FeasibilityStatus.BUDGET_EXHAUSTED, FeasibilityStatus.FEASIBLE)


def test_row_tolerances_are_per_row():
    sys = IntegerSystem.binary([[1.0, 1.0], [1.0, -1.0]], [1.05, 0.0])
    tight = solve_dfs(sys, row_tol=[1e-6, 1e-6])
    loose = solve_dfs(sys, row_tol=[0.1, 1.5])
    assert not tight.feasible and loose.feasible
    with pytest.raises(ValueError):
        solve_dfs(sys, row_tol=[0.1])


def test_mitm_large_box():
    x = np.array([3, 0, 7, 5, 1, 2, 6])
    w = np.exp(2j * np.pi * np.arange(1, 8) / 7)
    a = np.vstack([w.real, w.imag, np.ones(7)])
    sys = IntegerSystem(a, a @ x, np.zeros(7, np.int64), np.full(7, 11, np.int64))
    res = solve_mitm(sys)
    assert res.feasible and np.array_equal(res.x, x)


@pytest.mark.parametrize("seed", range(5))
def test_margins_against_enumeration(seed):
    x = BinaryMatrix.random(3, 5, 7, seed)
    w = coefficient_weights(3, 5, [(1, 1)])[0]
    a = np.vstack([w.real, w.imag])
    v = a @ x.bits.ravel()
    res = solve_with_margins(3, 5, x.row_sums(), x.col_sums(), a, v, row_tol=np.full(2, 1e-6))
    assert res.feasible and np.array_equal(res.x.reshape(3, 5), x.bits)
    bad = solve_with_margins(3, 5, x.row_sums(), x.col_sums(), a, v + 0.3,
                             row_tol=np.full(2, 1e-6))
    assert bad.status is FeasibilityStatus.INFEASIBLE


def test_determinism():
    rng = np.random.default_rng(9)
    sys = random_system(rng, 16, 2, True)
    r1, r2 = solve_dfs(sys), solve_dfs(sys)
    assert np.array_equal(r1.x, r2.x) and r1.nodes == r2.nodes


def test_lp_gcd_presolve_refutes_parity_conflicts():
    sys = IntegerSystem.binary(np.full((1, 30), 2.0), [7.0])
    res = solve_lp(sys)
    assert res.status is FeasibilityStatus.INFEASIBLE and res.nodes == 0
