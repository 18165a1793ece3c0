"""End-to-end recovery of a binary matrix from a banded spectrum.

Three routes, chosen from the matrix dims:

* distinct primes ``N1 x N2`` (:func:`recover_rect`): exact column and
  row sums from one coefficient each, then a search over matrices with
  those margins matching ``F[1, 1]``;
* square prime ``N x N`` (:func:`recover_square_prime`): exact line sums
  for every direction with at least two coefficients, via lattice
  reduction, then one stacked feasibility solve;
* square prime power ``p^2 x p^2`` (:func:`recover_prime_power`): exact
  sums on the four axes (coarse, then fine), equality blocks on the other
  directions, then one stacked feasibility solve.
"""
from __future__ import annotations

import math
import time
from math import isqrt
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .directional import (DataKind, DirectionalData, extract_constraint_block,
                          recover_coarse_then_fine, recover_direction_sums)
from .errors import IncompleteBand, UnstableCoarseSolve, UnsupportedDims
from .feasibility import (FeasibilityResult, FeasibilityStatus, IntegerSystem, SearchBudget,
                          solve_feasibility, solve_with_margins)
from .lattice import SolverConfig
from .lines import canonical_directions, direction_classes, is_prime, prime_power
from .spectral import Band, BandedSpectrum, BinaryMatrix, coefficient_weights, dft_on
from .stability import digits_estimate


class RecoveryStatus(Enum):
    RECOVERED = "recovered"
    INCONSISTENT = "inconsistent"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass
class DirectionOutcome:
    """Diagnostics for one direction (or margin subproblem)."""

    direction: tuple[int, int]
    m_count: int
    outcome: str
    residual: float
    elapsed: float
    reason: str = ""


@dataclass
class RecoveryReport:
    """Outcome of a reconstruction run.

    ``retry_candidates`` lists recovered directions by decreasing solve
    residual; dropping one of them is the suggested remedy when the
    stacked system comes out inconsistent.
    """

    status: RecoveryStatus
    matrix: BinaryMatrix | None
    per_direction: list[DirectionOutcome]
    stacked_nodes: int
    total_elapsed: float
    algorithm: str
    stacked_method: str = ""
    band_residual: float = float("nan")
    retry_candidates: list[tuple[int, int]] = field(default_factory=list)
    retries: int = 0

    @property
    def recovered(self) -> bool:
        return self.status is RecoveryStatus.RECOVERED

    @property
    def directions_recovered(self) -> int:
        return sum(1 for d in self.per_direction if d.outcome in ("exact_sums", "constraint_block"))


class BandShape(Enum):
    FOUR_COEFFICIENT = "four_coefficient"
    SQUARE = "square"


@dataclass(frozen=True)
class BandPolicy:
    """How a pass band is chosen: the four-coefficient set or a square ``|k|, |l| <= L``."""

    shape: BandShape
    L: int | None = None

    def __post_init__(self):
        if self.shape is BandShape.SQUARE and (self.L is None or self.L < 0):
            raise ValueError("a square band needs L >= 0")

    def band(self) -> Band:
        if self.shape is BandShape.FOUR_COEFFICIENT:
            return Band.four_coefficient()
        return Band.square(self.L)

    @classmethod
    def minimal(cls, n1: int, n2: int) -> "BandPolicy":
        kind = classify_dims(n1, n2)
        if kind == "rect":
            return cls(BandShape.FOUR_COEFFICIENT)
        if kind == "square_prime":
            return cls(BandShape.SQUARE, isqrt(n1))
        p, alpha = prime_power(n1)
        return cls(BandShape.SQUARE, p ** (alpha - 1))


@dataclass(frozen=True)
class NoiseModel:
    """Known Gaussian noise level ``sigma`` (per real and imaginary part) of the data.

    It rescales the solver to the noise: the embedding weight becomes
    ``beta_factor / sigma`` and both the lattice acceptance threshold and
    the tolerance of raw coefficient rows become ``tolerance_factor *
    sigma``.  A direction is solved for exact sums only when the
    precision heuristic says its member count needs at most
    ``-log10(sigma) + digit_margin`` digits; other directions enter as raw
    rows.
    """

    sigma: float
    tolerance_factor: float = 6.0
    beta_factor: float = 3.0
    digit_margin: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def from_variance(cls, variance: float, **kw) -> "NoiseModel":
        return cls(math.sqrt(variance), **kw)

    @property
    def tolerance(self) -> float:
        return self.tolerance_factor * self.sigma

    def config(self, cfg: SolverConfig) -> SolverConfig:
        return replace(cfg, beta=self.beta_factor / self.sigma, epsilon=self.tolerance)

    def min_members(self, n: int, *, floor: int = 2, ceiling: int = 64) -> int:
        """Smallest member count whose required digits fit the available precision."""
        available = -math.log10(self.sigma) + self.digit_margin
        for m in range(floor, ceiling + 1):
            if digits_estimate(n, n, m) <= available:
                return m
        return ceiling + 1


def classify_dims(n1: int, n2: int) -> str:
    """``"rect"``, ``"square_prime"`` or ``"prime_power"``; raises UnsupportedDims otherwise."""
    if n1 != n2 and is_prime(n1) and is_prime(n2):
        return "rect"
    if n1 == n2 and is_prime(n1):
        return "square_prime"
    if n1 == n2:
        pp = prime_power(n1)
        if pp is not None and pp[1] >= 2:
            return "prime_power"
    raise UnsupportedDims(f"{n1}x{n2} is neither distinct primes, a square prime, "
                          f"nor a square prime power")


def minimal_band(n1: int, n2: int) -> Band:
    """Smallest band for which recovery is unique: four coefficients, ``L = isqrt(N)`` or ``L = p^(a-1)``."""
    return BandPolicy.minimal(n1, n2).band()


# ----------------------------------------------------------------------------
# stacked-system assembly


def _indicator(labels: np.ndarray) -> np.ndarray:
    """``P[j-1, cell] = 1`` when the row-major cell lies on line ``j``."""
    lab = np.asarray(labels).ravel()
    n = int(lab.max())
    return (lab[None, :] == np.arange(1, n + 1)[:, None]).astype(float)


def _raw_rows(n1: int, n2: int, coeffs: dict) -> tuple[np.ndarray, np.ndarray]:
    idx = list(coeffs)
    if not idx:
        return np.zeros((0, n1 * n2)), np.zeros(0)
    w = coefficient_weights(n1, n2, idx)
    v = np.array([coeffs[kl] for kl in idx])
    return np.vstack([w.real, w.imag]), np.concatenate([v.real, v.imag])


@dataclass
class _Stack:
    """Rows of the final cell-level system, tagged exact (integer) or raw (measured)."""

    cells: int
    rows: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    exact: list = field(default_factory=list)

    def add(self, a, b, exact: bool):
        a = np.atleast_2d(a)
        if a.shape[0] == 0:
            return
        self.rows.append(a)
        self.rhs.append(np.ravel(b))
        self.exact.append(np.full(a.shape[0], exact))

    def system(self) -> tuple[IntegerSystem, np.ndarray]:
        a = np.vstack(self.rows) if self.rows else np.zeros((0, self.cells))
        b = np.concatenate(self.rhs) if self.rhs else np.zeros(0)
        exact = np.concatenate(self.exact) if self.exact else np.zeros(0, bool)
        sys = IntegerSystem(a, b, np.zeros(self.cells, np.int64), np.ones(self.cells, np.int64))
        return sys, exact


def _add_directional(stack: _Stack, d: DirectionalData, n: int, use: bool = True):
    if use and d.kind is DataKind.EXACT_SUMS:
        stack.add(_indicator(d.labels), d.sums.astype(float), True)
    elif use and d.kind is DataKind.CONSTRAINT_BLOCK:
        stack.add(d.constraints.a @ _indicator(d.labels), d.constraints.b, True)
    else:
        a, b = _raw_rows(n, n, d.raw)
        stack.add(a, b, False)


def _tolerances(exact: np.ndarray, budget: SearchBudget, raw_tolerance: float | None) -> np.ndarray:
    raw = budget.tolerance if raw_tolerance is None else raw_tolerance
    return np.where(exact, budget.tolerance, raw)


def _band_residual(spec: BandedSpectrum, bits: np.ndarray) -> float:
    model = dft_on(bits, spec.band)
    return spec.max_deviation(model)


def _finish(spec: BandedSpectrum, res: FeasibilityResult, shape, outcomes, t0, algorithm,
            cfg: SolverConfig, raw_tolerance, candidates, retries=0) -> RecoveryReport:
    if res.status is FeasibilityStatus.FEASIBLE:
        bits = np.asarray(res.x, dtype=np.uint8).reshape(shape)
        resid = _band_residual(spec, bits)
        limit = max(cfg.epsilon, raw_tolerance or 0.0)
        if resid < limit:
            return RecoveryReport(RecoveryStatus.RECOVERED, BinaryMatrix(bits), outcomes, res.nodes,
                                  time.perf_counter() - t0, algorithm, res.method, resid,
                                  candidates, retries)
        status = RecoveryStatus.INCONSISTENT
    elif res.status is FeasibilityStatus.INFEASIBLE:
        status = RecoveryStatus.INCONSISTENT
    else:
        status = RecoveryStatus.BUDGET_EXHAUSTED
    return RecoveryReport(status, None, outcomes, res.nodes, time.perf_counter() - t0, algorithm,
                          res.method, float("nan"), candidates, retries)


def _outcome(d: DirectionalData) -> DirectionOutcome:
    return DirectionOutcome(d.direction.canonical, d.direction.m_count, d.kind.value,
                            d.residual, d.elapsed, d.reason)


def _retry_order(data: list[DirectionalData]) -> list[int]:
    rec = [i for i, d in enumerate(data) if d.recovered]
    return sorted(rec, key=lambda i: -data[i].residual)


def _stacked_solve(spec, data, budget, raw_tolerance, engine, dropped=()):
    n = spec.n1
    stack = _Stack(n * n)
    for i, d in enumerate(data):
        _add_directional(stack, d, n, use=i not in dropped)
    if not any(d.recovered for i, d in enumerate(data) if i not in dropped):
        stack.add(np.ones((1, n * n)), [float(spec.popcount)], True)
    sys, exact = stack.system()
    tol = _tolerances(exact, budget, raw_tolerance)
    return solve_feasibility(sys, budget, method=engine, row_tol=tol,
                             branch_rows=exact if engine == "dfs" else None)


def _run_stacked(spec, data, outcomes, budget, cfg, raw_tolerance, engine, retry, t0, algorithm):
    order = _retry_order(data)
    candidates = [data[i].direction.canonical for i in order]
    res = _stacked_solve(spec, data, budget, raw_tolerance, engine)
    report = _finish(spec, res, spec.dims, outcomes, t0, algorithm, cfg, raw_tolerance, candidates)
    if not retry or report.status is not RecoveryStatus.INCONSISTENT:
        return report
    nodes = report.stacked_nodes
    for attempt, i in enumerate(order[:spec.n1], start=1):
        res = _stacked_solve(spec, data, budget, raw_tolerance, engine, dropped={i})
        nodes += res.nodes
        report = _finish(spec, res, spec.dims, outcomes, t0, algorithm, cfg, raw_tolerance,
                         candidates, attempt)
        if report.status is not RecoveryStatus.INCONSISTENT:
            break
    report.stacked_nodes = nodes
    return report


# ----------------------------------------------------------------------------
# the three routes


def _margin_system(n_lines: int, capacity: int, value: complex, popcount: int) -> IntegerSystem:
    j = np.arange(1, n_lines + 1)
    z = np.exp(2j * np.pi * j / n_lines)
    a = np.vstack([z.real, z.imag, np.ones(n_lines)])
    b = np.array([value.real, value.imag, float(popcount)])
    return IntegerSystem(a, b, np.zeros(n_lines, np.int64), np.full(n_lines, capacity, np.int64))


def recover_rect(spec: BandedSpectrum, budget: SearchBudget = SearchBudget(), *,
                 cfg: SolverConfig = SolverConfig(), raw_tolerance: float | None = None,
                 skip_factor: float = 2.0, engine: str = "auto") -> RecoveryReport:
    """Recover an ``N1 x N2`` matrix (distinct primes) from ``F`` at (0,0), (0,1), (1,0), (1,1).

    Column sums (``N2`` values in ``[0, N1]``) come from ``F[0, 1]`` and
    the popcount; row sums likewise from ``F[1, 0]``.  A margin problem is
    skipped when its length exceeds ``skip_factor`` times the other one,
    its coefficient then entering the final system as raw rows.  The final
    search matches ``F[1, 1]`` over matrices with the recovered margins.
    """
    t0 = time.perf_counter()
    n1, n2 = spec.dims
    if classify_dims(n1, n2) != "rect":
        raise UnsupportedDims(f"{n1}x{n2} is not a pair of distinct primes")
    need = [(0, 1), (1, 0), (1, 1)]
    missing = [kl for kl in need if kl not in spec]
    if missing:
        raise IncompleteBand(f"recovery of {n1}x{n2} needs coefficients {missing}")
    s = spec.popcount
    tol_raw = budget.tolerance if raw_tolerance is None else raw_tolerance
    outcomes: list[DirectionOutcome] = []
    sums = {}
    for kl, lines, cap, other in (((0, 1), n2, n1, n1), ((1, 0), n1, n2, n2)):
        if lines > skip_factor * other:
            outcomes.append(DirectionOutcome(kl, 1, "skipped", float("nan"), 0.0,
                                             "margin problem skipped by size rule"))
            continue
        t1 = time.perf_counter()
        sub = _margin_system(lines, cap, spec[kl], s)
        res = solve_feasibility(sub, budget, row_tol=np.array([tol_raw, tol_raw, budget.tolerance]))
        if not res.feasible:
            status = (RecoveryStatus.INCONSISTENT if res.status is FeasibilityStatus.INFEASIBLE
                      else RecoveryStatus.BUDGET_EXHAUSTED)
            outcomes.append(DirectionOutcome(kl, 1, "skipped", float("inf"),
                                             time.perf_counter() - t1, res.status.value))
            return RecoveryReport(status, None, outcomes, res.nodes, time.perf_counter() - t0,
                                  "rect", res.method)
        sums[kl] = res.x
        outcomes.append(DirectionOutcome(kl, 1, "exact_sums", sub.max_residual(res.x),
                                         time.perf_counter() - t1))
    w11 = coefficient_weights(n1, n2, [(1, 1)])[0]
    extra_a = np.vstack([w11.real, w11.imag])
    extra_b = np.array([spec[(1, 1)].real, spec[(1, 1)].imag])
    if engine == "auto":
        engine = "margin" if len(sums) == 2 and min(n1, n2) <= 13 else "lp"
    if engine == "margin":
        if len(sums) != 2:
            raise ValueError("the margin engine needs both row and column sums")
        res = solve_with_margins(n1, n2, sums[(1, 0)], sums[(0, 1)], extra_a, extra_b, budget,
                                 row_tol=np.full(2, tol_raw))
    else:
        stack = _Stack(n1 * n2)
        cells = np.arange(n1 * n2)
        if (0, 1) in sums:
            stack.add((cells[None, :] % n2 == np.arange(n2)[:, None]).astype(float),
                      sums[(0, 1)].astype(float), True)
        else:
            stack.add(*_raw_rows(n1, n2, {(0, 1): spec[(0, 1)]}), False)
        if (1, 0) in sums:
            stack.add((cells[None, :] // n2 == np.arange(n1)[:, None]).astype(float),
                      sums[(1, 0)].astype(float), True)
        else:
            stack.add(*_raw_rows(n1, n2, {(1, 0): spec[(1, 0)]}), False)
        stack.add(extra_a, extra_b, False)
        sys, exact = stack.system()
        res = solve_feasibility(sys, budget, method=engine,
                                row_tol=_tolerances(exact, budget, raw_tolerance))
    return _finish(spec, res, (n1, n2), outcomes, t0, "rect", cfg, raw_tolerance, [])


def recover_square_prime(spec: BandedSpectrum, cfg: SolverConfig = SolverConfig(),
                         budget: SearchBudget = SearchBudget(), *, retry: bool = False,
                         raw_tolerance: float | None = None, engine: str = "lp",
                         min_members: int = 2) -> RecoveryReport:
    """Recover an ``N x N`` matrix, ``N`` prime, from a square band.

    Every slope class with at least two member coefficients is solved for
    its exact line sums by lattice reduction; the rest enter the final
    system as raw coefficient rows.  With ``retry`` an inconsistent final
    system is re-solved with one recovered direction demoted to raw rows
    at a time (largest residual first, at most ``N`` attempts).
    ``min_members`` raises the member count needed for a lattice solve.
    """
    t0 = time.perf_counter()
    n1, n2 = spec.dims
    if classify_dims(n1, n2) != "square_prime":
        raise UnsupportedDims(f"{n1}x{n2} is not a square prime grid")
    data = [recover_direction_sums(spec, dc, cfg, min_members=min_members)
            for dc in canonical_directions(n1, spec.band)]
    outcomes = [_outcome(d) for d in data]
    return _run_stacked(spec, data, outcomes, budget, cfg, raw_tolerance, engine, retry, t0,
                        "square_prime")


def recover_prime_power(spec: BandedSpectrum, cfg: SolverConfig = SolverConfig(),
                        budget: SearchBudget = SearchBudget(), *, retry: bool = False,
                        raw_tolerance: float | None = None, engine: str = "lp") -> RecoveryReport:
    """Recover a ``p^2 x p^2`` matrix from a square band with ``L >= p``.

    The four axes get exact line sums (coarse sums from the coefficient at
    ``p`` times the axis, then fine sums); other directions with at least
    two coefficients contribute equality blocks between line sums; all
    remaining coefficients enter as raw rows.
    """
    t0 = time.perf_counter()
    n1, n2 = spec.dims
    if classify_dims(n1, n2) != "prime_power":
        raise UnsupportedDims(f"{n1}x{n2} is not a square prime power grid")
    p, alpha = prime_power(n1)
    if alpha != 2:
        raise UnsupportedDims(f"only p^2 grids are implemented, got {p}^{alpha}")
    data = []
    for dc in direction_classes(n1, spec.band.indexes):
        if dc.is_axis:
            try:
                d = recover_coarse_then_fine(spec, p, dc, cfg)
            except UnstableCoarseSolve as exc:
                d = DirectionalData(dc, DataKind.SKIPPED, dc.partition().labels,
                                    raw={kl: spec[kl] for kl in dc.members + dc.coarse_members},
                                    reason=str(exc))
        else:
            d = extract_constraint_block(spec, p, dc, cfg)
        data.append(d)
    outcomes = [_outcome(d) for d in data]
    return _run_stacked(spec, data, outcomes, budget, cfg, raw_tolerance, engine, retry, t0,
                        "prime_power")


def recover(spec: BandedSpectrum, cfg: SolverConfig = SolverConfig(),
            budget: SearchBudget = SearchBudget(), *, retry: bool = False,
            raw_tolerance: float | None = None, noise: NoiseModel | None = None) -> RecoveryReport:
    """Dispatch on the dims of ``spec``; raises UnsupportedDims for other shapes.

    With ``noise`` the solver configuration, the raw-row tolerance and
    (square prime grids) the member count gate follow the noise level;
    an explicit ``raw_tolerance`` still wins.
    """
    kind = classify_dims(*spec.dims)
    min_members = 2
    if noise is not None:
        cfg = noise.config(cfg)
        raw_tolerance = noise.tolerance if raw_tolerance is None else raw_tolerance
        min_members = noise.min_members(spec.n1)
    if kind == "rect":
        return recover_rect(spec, budget, cfg=cfg, raw_tolerance=raw_tolerance)
    if kind == "square_prime":
        return recover_square_prime(spec, cfg, budget, retry=retry, raw_tolerance=raw_tolerance,
                                    min_members=min_members)
    return recover_prime_power(spec, cfg, budget, retry=retry, raw_tolerance=raw_tolerance)
