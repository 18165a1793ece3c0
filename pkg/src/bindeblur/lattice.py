"""LLL reduction and the embedding solver for approximate integer systems."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _core
from .errors import DependentBasis
from .feasibility import IntegerSystem


class ReductionTimeout(RuntimeError):
    """LLL hit its wall-clock limit before finishing."""


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    """Row vectors spanning a lattice; stored read-only as float64."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=np.float64, copy=True)
        if v.ndim != 2:
            raise ValueError("basis must be a 2-D array of row vectors")
        if not np.all(np.isfinite(v)):
            raise ValueError("basis has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def rank(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def gram_schmidt(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(mu, bstar_sq)`` of the Gram-Schmidt process (extended precision)."""
        b = self.vectors.astype(np.longdouble)
        m = b.shape[0]
        mu = np.zeros((m, m), dtype=np.longdouble)
        star = np.zeros_like(b)
        bs = np.zeros(m, dtype=np.longdouble)
        for i in range(m):
            v = b[i].copy()
            for j in range(i):
                mu[i, j] = (b[i] @ star[j]) / bs[j]
                v -= mu[i, j] * star[j]
            star[i] = v
            bs[i] = v @ v
        return mu.astype(np.float64), bs.astype(np.float64)

    def is_size_reduced(self, slack: float = 1e-6) -> bool:
        mu, _ = self.gram_schmidt()
        return bool(np.all(np.abs(np.tril(mu, -1)) <= 0.5 + slack))

    def satisfies_lovasz(self, delta: float, slack: float = 1e-9) -> bool:
        mu, bs = self.gram_schmidt()
        for k in range(1, self.rank):
            lhs = bs[k]
            rhs = (delta - mu[k, k - 1] ** 2) * bs[k - 1]
            if lhs < rhs - slack * max(1.0, abs(rhs)):
                return False
        return True


@dataclass(frozen=True)
class SolverConfig:
    """Embedding and reduction parameters.

    ``beta`` weights the constraint block, ``epsilon`` is the largest
    accepted residual (max-norm, unscaled), ``delta`` the Lovász parameter,
    ``time_limit`` the reduction wall-clock cap in seconds and
    ``tracking_weight`` the weight of the coordinate recording how often
    the right-hand side was used.
    """

    beta: float = 1e8
    epsilon: float = 1e-3
    delta: float = 0.99
    time_limit: float = 5.0
    tracking_weight: float = 1.0

    def __post_init__(self):
        if not 0.25 < self.delta < 1:
            raise ValueError("delta must lie in (0.25, 1)")
        if self.beta <= 0 or self.epsilon <= 0:
            raise ValueError("beta and epsilon must be positive")
        if self.time_limit <= 0 or self.tracking_weight <= 0:
            raise ValueError("time_limit and tracking_weight must be positive")


def lll_reduce(basis: LatticeBasis, delta: float = 0.75, *, time_limit: float = math.inf,
               return_transform: bool = False):
    """LLL-reduce ``basis``.

    Returns the reduced basis, or ``(basis, U)`` with ``U`` the integer
    unimodular matrix such that ``U @ input == output`` (up to rounding of
    the float arithmetic) when ``return_transform`` is set.

    Raises
    ------
    DependentBasis
        if the vectors are linearly dependent.
    ReductionTimeout
        if ``time_limit`` seconds pass first.
    """
    if not 0.25 < delta < 1:
        raise ValueError("delta must lie in (0.25, 1)")
    limit = time_limit if math.isfinite(time_limit) else 1e18
    out, u, status = _core.kernels.lll_reduce(basis.vectors, float(delta), float(limit))
    if status == _core.LLL_DEPENDENT:
        raise DependentBasis("basis vectors are linearly dependent")
    if status == _core.LLL_TIMEOUT:
        raise ReductionTimeout(f"LLL exceeded {time_limit} s")
    red = LatticeBasis(out)
    return (red, np.asarray(u, dtype=np.int64)) if return_transform else red


class Failure(Enum):
    NO_SHORT_VECTOR = "no_short_vector"
    TIME_LIMIT = "time_limit"


@dataclass
class LatticeSolution:
    """Outcome of :func:`solve_integer_system`."""

    x: np.ndarray | None
    failure: Failure | None
    residual: float
    elapsed: float
    candidates: int = 0

    @property
    def ok(self) -> bool:
        return self.failure is None


def embedding_basis(sys: IntegerSystem, cfg: SolverConfig, offset: np.ndarray) -> np.ndarray:
    """Rows ``[e_i, beta*A[:, i], 0]`` and ``[0, -beta*(b - A offset), gamma]``."""
    n, r = sys.var_count, sys.row_count
    b = sys.b - sys.a @ offset
    basis = np.zeros((n + 1, n + r + 1))
    basis[:n, :n] = np.eye(n)
    basis[:n, n:n + r] = cfg.beta * sys.a.T
    basis[n, n:n + r] = -cfg.beta * b
    basis[n, n + r] = cfg.tracking_weight
    return basis


def solve_integer_system(sys: IntegerSystem, cfg: SolverConfig = SolverConfig(), *,
                         offset=None) -> LatticeSolution:
    """Look for an integer ``x`` with ``|A x - b|_inf < epsilon`` through a short lattice vector.

    The unknowns are shifted by the integer vector ``offset`` (default: the
    rounded midpoint of the bounds) so that the sought vector is short.
    Every vector of the reduced basis whose tracking coordinate is ``±1`` is
    a candidate.  Among the candidates whose residual, recomputed from
    their integer coordinates against the raw system, is below ``epsilon``
    the shortest reduced vector wins.  Bounds are not enforced here.
    """
    t0 = time.perf_counter()
    n = sys.var_count
    if offset is None:
        offset = np.round((sys.lower + sys.upper) / 2.0)
    offset = np.asarray(offset, dtype=np.int64)
    basis = embedding_basis(sys, cfg, offset)
    out, u, status = _core.kernels.lll_reduce(basis, cfg.delta, cfg.time_limit)
    if status == _core.LLL_TIMEOUT:
        return LatticeSolution(None, Failure.TIME_LIMIT, math.inf, time.perf_counter() - t0)
    if status == _core.LLL_DEPENDENT:
        # the identity block makes the basis independent in exact arithmetic; a huge
        # beta can still swamp it in double precision
        return LatticeSolution(None, Failure.NO_SHORT_VECTOR, math.inf, time.perf_counter() - t0)
    u = np.asarray(u, dtype=np.int64)
    best_res = math.inf
    chosen = None
    seen = 0
    for row, vec in zip(u, out):
        t = row[n]
        if abs(t) != 1:
            continue
        seen += 1
        x = offset + t * row[:n]
        res = sys.max_residual(x)
        best_res = min(best_res, res)
        if res < cfg.epsilon:
            length = float(np.dot(vec, vec))
            if chosen is None or length < chosen[0]:
                chosen = (length, x, res)
    elapsed = time.perf_counter() - t0
    if chosen is None:
        return LatticeSolution(None, Failure.NO_SHORT_VECTOR, best_res, elapsed, seen)
    return LatticeSolution(chosen[1].astype(np.int64), None, chosen[2], elapsed, seen)
