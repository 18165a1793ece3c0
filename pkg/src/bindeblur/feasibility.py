"""Exact feasibility for bounded-integer linear equality systems.

Three engines share one result type:

``dfs``
    depth-first branch and bound with interval propagation on every row
    (compiled kernel when available);
``mitm``
    meet in the middle over two halves of the variables, vectorised with
    numpy, for small systems with a large box (column-sum subproblems);
``lp``
    depth-first branch and bound whose nodes are pruned by the linear
    relaxation (solved with HiGHS); on the over-determined stacked systems
    of square grids the relaxation is usually already integral;
``margin``
    meet in the middle over binary matrices whose row and column sums
    are known exactly, matching the remaining rows (see
    :func:`solve_with_margins`).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_array

from . import _core


@dataclass(frozen=True, eq=False)
class IntegerSystem:
    """Rows ``a @ x == b`` (real rows) with ``lower <= x <= upper`` integer bounds."""

    a: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=np.float64))
        b = np.asarray(self.b, dtype=np.float64).ravel()
        lo = np.asarray(self.lower, dtype=np.int64).ravel()
        hi = np.asarray(self.upper, dtype=np.int64).ravel()
        if a.size == 0:
            a = a.reshape(len(b), len(lo))
        if a.shape[0] != b.shape[0]:
            raise ValueError(f"{a.shape[0]} rows but {b.shape[0]} right-hand values")
        if a.shape[1] != lo.shape[0] or lo.shape != hi.shape:
            raise ValueError("bounds must have one entry per column of a")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("system has non-finite entries")
        for name, v in (("a", a), ("b", b), ("lower", lo), ("upper", hi)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def binary(cls, a, b) -> "IntegerSystem":
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        n = a.shape[1]
        return cls(a, b, np.zeros(n, np.int64), np.ones(n, np.int64))

    @property
    def var_count(self) -> int:
        return self.a.shape[1]

    @property
    def row_count(self) -> int:
        return self.a.shape[0]

    def residual(self, x) -> np.ndarray:
        return self.a @ np.asarray(x, dtype=np.float64) - self.b

    def max_residual(self, x) -> float:
        r = self.residual(x)
        return float(np.max(np.abs(r))) if r.size else 0.0

    def within_bounds(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def with_rows(self, a, b) -> "IntegerSystem":
        """Same variables and bounds with extra rows appended."""
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        if a.size == 0:
            return self
        return IntegerSystem(np.vstack([self.a, a]), np.concatenate([self.b, np.ravel(b)]),
                             self.lower, self.upper)

    def box_size(self) -> int:
        return math.prod(int(h - l + 1) for l, h in zip(self.lower, self.upper))


@dataclass(frozen=True)
class SearchBudget:
    """Stopping rules for the exact solvers.

    ``node_limit`` counts value assignments in the depth-first search and
    relaxations solved by the LP-bounded search.  ``enumeration_limit``
    caps the partial fillings produced by the meet-in-the-middle engines,
    which do far cheaper work per step.  ``time_limit`` (seconds) bounds
    the LP-bounded search, whose nodes are expensive.
    """

    node_limit: int = 10**7
    tolerance: float = 1e-6
    enumeration_limit: int = 4 * 10**9
    time_limit: float | None = None

    def __post_init__(self):
        if self.node_limit <= 0:
            raise ValueError("node_limit must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.enumeration_limit <= 0:
            raise ValueError("enumeration_limit must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


class FeasibilityStatus(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    BUDGET_EXHAUSTED = "budget_exhausted"


_STATUS = {
    _core.FEASIBLE: FeasibilityStatus.FEASIBLE,
    _core.INFEASIBLE: FeasibilityStatus.INFEASIBLE,
    _core.BUDGET: FeasibilityStatus.BUDGET_EXHAUSTED,
}


@dataclass
class FeasibilityResult:
    status: FeasibilityStatus
    x: np.ndarray | None
    nodes: int
    method: str
    elapsed: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status is FeasibilityStatus.FEASIBLE


def _csr(a: np.ndarray):
    mask = np.abs(a) > 0
    indptr = np.concatenate([[0], np.cumsum(mask.sum(axis=1))]).astype(np.int64)
    rows, cols = np.nonzero(mask)
    return indptr, cols.astype(np.int64), a[rows, cols].astype(np.float64)


def _row_tolerances(sys: IntegerSystem, budget: SearchBudget, row_tol) -> np.ndarray:
    if row_tol is None:
        return np.full(sys.row_count, budget.tolerance)
    tol = np.asarray(row_tol, dtype=np.float64).ravel()
    if tol.shape != (sys.row_count,):
        raise ValueError("row_tol needs one entry per row")
    return tol


def solve_dfs(sys: IntegerSystem, budget: SearchBudget = SearchBudget(), *,
              row_tol=None, hint=None, branch_rows=None) -> FeasibilityResult:
    """Depth-first search with interval propagation.

    Variables are chosen by smallest remaining domain, ties broken by the
    largest total absolute coefficient.  ``branch_rows`` (boolean per row)
    switches to branching inside the flagged row with fewest free
    variables, which suits exact line-sum rows.  ``hint`` orders values
    nearest first.
    """
    t0 = time.perf_counter()
    n = sys.var_count
    tol = _row_tolerances(sys, budget, row_tol)
    indptr, indices, coefs = _csr(sys.a)
    if hint is None:
        hint = sys.lower.astype(np.float64)
    hint = np.asarray(hint, dtype=np.float64)
    score = np.abs(sys.a).sum(axis=0) if sys.row_count else np.zeros(n)
    flags = np.zeros(sys.row_count, dtype=np.uint8)
    if branch_rows is not None:
        flags[np.asarray(branch_rows, dtype=bool)] = 1
    status, x, nodes = _core.kernels.dfs_solve(
        sys.lower, sys.upper, indptr, indices, coefs, sys.b, tol, hint, score,
        int(budget.node_limit), flags)
    st = _STATUS[status]
    if st is FeasibilityStatus.FEASIBLE:
        x = np.asarray(x, dtype=np.int64)
        if not _verify(sys, x, tol):  # pragma: no cover - kernel soundness guard
            raise AssertionError("search returned a point violating the system")
    else:
        x = None
    return FeasibilityResult(st, x, int(nodes), "dfs", time.perf_counter() - t0)


def _verify(sys: IntegerSystem, x: np.ndarray, tol: np.ndarray) -> bool:
    return sys.within_bounds(x) and bool(np.all(np.abs(sys.residual(x)) <= tol))


def _grid(lo: np.ndarray, hi: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the mixed-radix enumeration of the box."""
    radix = (hi - lo + 1).astype(np.int64)
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((len(idx), len(lo)), dtype=np.int64)
    for i in range(len(lo) - 1, -1, -1):
        out[:, i] = lo[i] + idx % radix[i]
        idx //= radix[i]
    return out


def solve_mitm(sys: IntegerSystem, budget: SearchBudget = SearchBudget(), *,
               row_tol=None, chunk: int = 1 << 18) -> FeasibilityResult:
    """Meet in the middle over a split of the variables.

    The smaller half is tabulated and sorted on a combined key: the exact
    partial value of the first all-integer row (if any) and the partial
    value of the most spread-out real row.  The larger half is streamed
    in chunks and joined by binary search; every row is then re-checked.
    """
    t0 = time.perf_counter()
    n = sys.var_count
    tol = _row_tolerances(sys, budget, row_tol)
    lo, hi = sys.lower, sys.upper
    if n == 0 or sys.row_count == 0:
        if n > 0:
            return FeasibilityResult(FeasibilityStatus.FEASIBLE, lo.copy(), 1, "mitm")
        ok = bool(np.all(np.abs(sys.b) <= tol))
        st = FeasibilityStatus.FEASIBLE if ok else FeasibilityStatus.INFEASIBLE
        return FeasibilityResult(st, np.zeros(0, np.int64) if ok else None, 1, "mitm")
    logs = np.log(hi - lo + 1.0)
    cum = np.cumsum(logs)
    # tabulate a prefix of at most half the log-volume and at most 2**24 points
    cap = min(cum[-1] / 2, 24 * math.log(2))
    h = max(1, int(np.searchsorted(cum, cap + 1e-9, side="right")))
    h = min(h, n)
    sizes = [math.prod(int(v) for v in (hi[:h] - lo[:h] + 1)),
             math.prod(int(v) for v in (hi[h:] - lo[h:] + 1))]
    if sizes[0] + sizes[1] > budget.enumeration_limit:
        return FeasibilityResult(FeasibilityStatus.BUDGET_EXHAUSTED, None, 0, "mitm",
                                 time.perf_counter() - t0)
    if sizes[0] > 1 << 24:
        return FeasibilityResult(FeasibilityStatus.BUDGET_EXHAUSTED, None, 0, "mitm",
                                 time.perf_counter() - t0)
    a = sys.a
    int_rows = [r for r in range(sys.row_count)
                if np.all(a[r] == np.round(a[r])) and tol[r] < 0.5]
    real_rows = [r for r in range(sys.row_count) if r not in int_rows]
    left = _grid(lo[:h], hi[:h], 0, sizes[0])
    vl = left @ a[:, :h].T
    key_int = int_rows[0] if int_rows else None
    if real_rows:
        spread = [np.ptp(vl[:, r]) for r in real_rows]
        key_real = real_rows[int(np.argmax(spread))]
    else:
        key_real = None

    def combined(v, target_shift):
        k = np.zeros(len(v))
        if key_real is not None:
            k = v[:, key_real] - target_shift[key_real]
        if key_int is not None:
            k = k + np.round(v[:, key_int] - target_shift[key_int]) * scale
        return k

    total_abs = np.abs(a).sum(axis=1) * np.maximum(np.abs(lo), np.abs(hi)).max()
    scale = 4.0 * (float(total_abs[key_real]) + 1.0) + 1.0 if key_real is not None else 1.0
    zero = np.zeros(sys.row_count)
    lkey = combined(vl, zero)
    order = np.argsort(lkey, kind="stable")
    lkey = lkey[order]
    left = left[order]
    vl = vl[order]
    win = tol[key_real] if key_real is not None else 0.25
    done = 0
    for start in range(0, sizes[1], chunk):
        if budget.time_limit is not None and time.perf_counter() - t0 > budget.time_limit:
            return FeasibilityResult(FeasibilityStatus.BUDGET_EXHAUSTED, None, sizes[0] + done,
                                     "mitm", time.perf_counter() - t0)
        stop = min(start + chunk, sizes[1])
        right = _grid(lo[h:], hi[h:], start, stop)
        vr = right @ a[:, h:].T
        need = combined(-vr, -sys.b)
        first = np.searchsorted(lkey, need - win, side="left")
        last = np.searchsorted(lkey, need + win, side="right")
        done += stop - start
        cand = np.nonzero(last > first)[0]
        for ci in cand:
            for li in range(first[ci], last[ci]):
                dev = np.abs(vl[li] + vr[ci] - sys.b)
                if np.all(dev <= tol):
                    x = np.concatenate([left[li], right[ci]])
                    return FeasibilityResult(FeasibilityStatus.FEASIBLE, x, sizes[0] + done,
                                             "mitm", time.perf_counter() - t0)
    return FeasibilityResult(FeasibilityStatus.INFEASIBLE, None, sizes[0] + done, "mitm",
                             time.perf_counter() - t0)


def _integrality_conflict(sys: IntegerSystem, tol: np.ndarray) -> bool:
    """True if some integer-coefficient row cannot reach its target window.

    Such a row only takes multiples of the gcd of its coefficients, a fact
    the linear relaxation cannot see.
    """
    for a_row, b, t in zip(sys.a, sys.b, tol):
        r = np.rint(a_row)
        if np.any(np.abs(a_row - r) > 1e-12):
            continue
        g = math.gcd(*(int(abs(v)) for v in r))
        if g == 0:
            if abs(b) > t:
                return True
            continue
        if math.floor((b + t) / g) < math.ceil((b - t) / g):
            return True
    return False


def solve_lp(sys: IntegerSystem, budget: SearchBudget = SearchBudget(), *,
             row_tol=None) -> FeasibilityResult:
    """Branch and bound with the linear relaxation as the pruning test.

    Each node solves the relaxation ``b - tol <= A x <= b + tol`` within the
    node's variable bounds.  An infeasible relaxation prunes the node.
    Otherwise the relaxed point is rounded and re-verified against the raw
    system (the tolerance slab lets vertices sit slightly off the integer
    point); if that fails the most fractional variable is branched on, the
    side nearer its relaxed value first.  Every relaxation solved counts as one node.
    Rows with integer coefficients are first checked for a gcd conflict.
    """
    t0 = time.perf_counter()
    n = sys.var_count
    tol = _row_tolerances(sys, budget, row_tol)
    if n == 0:
        return solve_mitm(sys, budget, row_tol=row_tol)
    if _integrality_conflict(sys, tol):
        return FeasibilityResult(FeasibilityStatus.INFEASIBLE, None, 0, "lp",
                                 time.perf_counter() - t0)
    cons = []
    if sys.row_count:
        cons.append(LinearConstraint(csr_array(sys.a), sys.b - tol, sys.b + tol))
    c = np.zeros(n)
    stack = [(sys.lower.astype(float), sys.upper.astype(float))]
    nodes = 0
    time_limit = budget.time_limit
    while stack:
        if nodes >= budget.node_limit or (
                time_limit is not None and time.perf_counter() - t0 > time_limit):
            return FeasibilityResult(FeasibilityStatus.BUDGET_EXHAUSTED, None, nodes, "lp",
                                     time.perf_counter() - t0)
        lo, hi = stack.pop()
        nodes += 1
        res = milp(c, constraints=cons, bounds=Bounds(lo, hi))
        if res.status == 2 or res.x is None:
            continue
        x = res.x
        frac = np.abs(x - np.round(x))
        xi = np.round(x).astype(np.int64)
        if _verify(sys, xi, tol):
            return FeasibilityResult(FeasibilityStatus.FEASIBLE, xi, nodes, "lp",
                                     time.perf_counter() - t0)
        free = np.nonzero(lo < hi)[0]
        if free.size == 0:
            continue
        i = free[np.argmax(frac[free])]

        def child(new_lo, new_hi):
            cl, ch = lo.copy(), hi.copy()
            cl[i], ch[i] = new_lo, new_hi
            return (cl, ch) if new_lo <= new_hi else None

        if frac[i] > 1e-6:
            f = math.floor(x[i])
            down, up = child(lo[i], f), child(f + 1, hi[i])
            # the child nearer the relaxed value is pushed last, so explored first
            children = [down, up] if x[i] - f > 0.5 else [up, down]
        else:
            # rounded point failed verification with no fractional variable left
            v = round(x[i])
            children = [child(lo[i], v - 1), child(v + 1, hi[i]), child(v, v)]
        children = [ch for ch in children if ch is not None]
        stack.extend(children)
    return FeasibilityResult(FeasibilityStatus.INFEASIBLE, None, nodes, "lp",
                             time.perf_counter() - t0)


MITM_BOX_LIMIT = 1 << 56


def solve_feasibility(sys: IntegerSystem, budget: SearchBudget = SearchBudget(), *,
                      method: str = "auto", row_tol=None, hint=None,
                      branch_rows=None) -> FeasibilityResult:
    """Solve ``sys`` exactly.

    ``method="auto"`` picks the meet-in-the-middle engine for systems of at
    most 24 variables whose box has at most ``2**56`` points (the smaller
    half fits in memory and the larger one streams) and depth-first search otherwise.

    Returns
    -------
    FeasibilityResult
        ``FEASIBLE`` with ``x`` satisfying bounds exactly and every row within
        tolerance, ``INFEASIBLE`` after an exhaustive search, or
        ``BUDGET_EXHAUSTED``.
    """
    if method == "auto":
        box = sys.box_size()
        method = "mitm" if sys.var_count <= 24 and box <= MITM_BOX_LIMIT else "dfs"
    if method == "dfs":
        return solve_dfs(sys, budget, row_tol=row_tol, hint=hint, branch_rows=branch_rows)
    if method == "mitm":
        return solve_mitm(sys, budget, row_tol=row_tol)
    if method == "lp":
        return solve_lp(sys, budget, row_tol=row_tol)
    raise ValueError(f"unknown method {method!r}")


def solve_with_margins(n1: int, n2: int, row_sums: Sequence[int], col_sums: Sequence[int],
                       a, b, budget: SearchBudget = SearchBudget(), *,
                       row_tol=None, early_tol: float = 1e-9) -> FeasibilityResult:
    """Binary ``n1 x n2`` matrix with exact margins satisfying ``a @ vec(X) == b``.

    ``a`` has one column per cell in row-major order.  The grid is split
    into two halves of whole columns plus one shared column; both halves
    are enumerated per assignment of partial row sums and joined on the
    first row of ``a``.  A candidate within ``early_tol`` on every row
    stops the search; otherwise the closest candidate within tolerance wins
    once the space is exhausted.
    """
    t0 = time.perf_counter()
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).ravel()
    rs = np.asarray(row_sums, dtype=np.int64)
    cs = np.asarray(col_sums, dtype=np.int64)
    tol = np.full(len(b), budget.tolerance) if row_tol is None else np.asarray(row_tol, float)
    if rs.sum() != cs.sum() or np.any(rs < 0) or np.any(cs < 0) or np.any(rs > n2) or np.any(cs > n1):
        return FeasibilityResult(FeasibilityStatus.INFEASIBLE, None, 0, "margin",
                                 time.perf_counter() - t0)
    transposed = n1 > n2
    if transposed:
        perm = np.arange(n1 * n2).reshape(n1, n2).T.ravel()
        a = a[:, perm]
        n1, n2, rs, cs = n2, n1, cs, rs
    deadline = math.inf if budget.time_limit is None else t0 + budget.time_limit
    status, bits, work = _core.kernels.margin_mitm(
        n1, n2, rs, cs, a, b, tol, int(budget.enumeration_limit), float(early_tol),
        float(min(deadline, 1e300)))
    st = _STATUS[status]
    x = None
    if st is FeasibilityStatus.FEASIBLE:
        grid = np.asarray(bits, dtype=np.int64).reshape(n1, n2)
        if transposed:
            grid = grid.T
        x = grid.ravel()
    return FeasibilityResult(st, x, int(work), "margin", time.perf_counter() - t0)
