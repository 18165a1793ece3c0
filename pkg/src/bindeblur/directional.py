"""Per-direction integer data extracted from a banded spectrum.

For an ``N x N`` grid every DFT coefficient ``(k, l)`` is a fixed linear
combination of the popcounts ``s_j`` of the periodic lines
``m*k + n*l == j (mod N)``.  The functions here turn the member
coefficients of one slope class into either the exact line sums (prime
``N``, or the four axes of a prime square) or, for the remaining
directions of a prime square, equalities between line sums that differ
only inside one coarse group.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import UnstableCoarseSolve
from .feasibility import IntegerSystem
from .lattice import Failure, SolverConfig, solve_integer_system
from .lines import DirectionClass, is_prime, prime_power, prime_power_partition
from .spectral import BandedSpectrum

AXES = ((0, 1), (1, 0), (1, 1), (1, -1))


class DataKind(Enum):
    EXACT_SUMS = "exact_sums"
    CONSTRAINT_BLOCK = "constraint_block"
    SKIPPED = "skipped"


@dataclass
class DirectionalData:
    """What one direction contributes to the final stacked system.

    ``sums[j-1]`` is the popcount of line ``j`` (``EXACT_SUMS``).
    ``constraints`` holds integer rows over the line sums (``CONSTRAINT_BLOCK``).
    ``raw`` maps each member index to its coefficient so that a skipped
    direction can still enter the stacked system as real/imaginary rows.
    ``labels`` is the ``N x N`` line-label grid the sums refer to.
    """

    direction: DirectionClass
    kind: DataKind
    labels: np.ndarray
    sums: np.ndarray | None = None
    constraints: IntegerSystem | None = None
    raw: dict = field(default_factory=dict)
    residual: float = float("inf")
    elapsed: float = 0.0
    reason: str = ""

    @property
    def recovered(self) -> bool:
        return self.kind is not DataKind.SKIPPED


def _phase_rows(n: int, multiplier: int, values) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary rows of ``sum_j s_j * exp(2 pi i t j / n)``."""
    j = np.arange(1, n + 1, dtype=np.int64)
    z = np.exp(2j * np.pi * (np.mod(multiplier * j, n) / n))
    return np.vstack([z.real, z.imag]), np.array([values.real, values.imag])


def line_sum_system(spec: BandedSpectrum, direction: DirectionClass, *, members=None,
                    include_popcount: bool = True, include_coarse: bool = False) -> IntegerSystem:
    """Integer system over the ``N`` line sums of ``direction``.

    One real and one imaginary row per member coefficient, optionally the
    coarse members and the popcount row; each sum lies in ``[0, N]``.
    """
    n = direction.n
    if members is None:
        members = list(direction.members)
        if include_coarse:
            members += list(direction.coarse_members)
    rows, rhs = [], []
    for kl in members:
        a, b = _phase_rows(n, direction.multipliers[kl], spec[kl])
        rows.append(a)
        rhs.append(b)
    if include_popcount:
        rows.append(np.ones((1, n)))
        rhs.append(np.array([float(spec.popcount)]))
    a = np.vstack(rows) if rows else np.zeros((0, n))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    return IntegerSystem(a, b, np.zeros(n, np.int64), np.full(n, direction.line_capacity))


def _raw(spec: BandedSpectrum, direction: DirectionClass) -> dict:
    return {kl: spec[kl] for kl in list(direction.members) + list(direction.coarse_members)}


def _centre(spec: BandedSpectrum, n: int) -> np.ndarray:
    return np.full(n, int(round(spec.popcount / n)), dtype=np.int64)


def recover_direction_sums(spec: BandedSpectrum, direction: DirectionClass,
                           cfg: SolverConfig = SolverConfig(), *,
                           min_members: int = 2) -> DirectionalData:
    """Exact line sums of one direction of a prime ``N x N`` grid via lattice reduction.

    A candidate is accepted when its residual on the member rows and the
    popcount row is below ``cfg.epsilon`` and every sum lies in
    ``[0, N]``; otherwise the direction is returned as ``SKIPPED`` with its
    raw coefficients.
    """
    t0 = time.perf_counter()
    labels = direction.partition().labels
    raw = _raw(spec, direction)
    if direction.m_count < min_members:
        return DirectionalData(direction, DataKind.SKIPPED, labels, raw=raw,
                               reason="too few member coefficients")
    sys = line_sum_system(spec, direction)
    sol = solve_integer_system(sys, cfg, offset=_centre(spec, direction.n))
    elapsed = time.perf_counter() - t0
    if not sol.ok:
        return DirectionalData(direction, DataKind.SKIPPED, labels, raw=raw, residual=sol.residual,
                               elapsed=elapsed, reason=sol.failure.value)
    if not sys.within_bounds(sol.x):
        return DirectionalData(direction, DataKind.SKIPPED, labels, raw=raw, residual=sol.residual,
                               elapsed=elapsed, reason="sums out of bounds")
    return DirectionalData(direction, DataKind.EXACT_SUMS, labels, sums=sol.x, raw=raw,
                           residual=sol.residual, elapsed=elapsed)


def _square_prime(spec: BandedSpectrum) -> int:
    n1, n2 = spec.dims
    pp = prime_power(n1)
    if n1 != n2 or pp is None or pp[1] != 2:
        raise ValueError(f"expected a p^2 x p^2 spectrum, got {n1}x{n2}")
    return pp[0]


def recover_coarse_then_fine(spec: BandedSpectrum, p: int, direction: DirectionClass,
                             cfg: SolverConfig = SolverConfig()) -> DirectionalData:
    """Line sums along an axis of a ``p^2 x p^2`` grid in two stages.

    The coefficient at ``p`` times the axis only sees the ``p`` coarse sums
    (lines grouped by label modulo ``p``); those are solved first with the
    popcount.  The fine sums are then solved with the remaining members
    and the coarse totals as extra exact rows.

    Raises
    ------
    UnstableCoarseSolve
        if the coarse stage finds no candidate within ``cfg.epsilon``.
    """
    t0 = time.perf_counter()
    if _square_prime(spec) != p or not is_prime(p):
        raise ValueError(f"spectrum dims are not {p}^2")
    if direction.canonical not in AXES:
        raise ValueError(f"{direction.canonical} is not one of the four axes")
    if not direction.coarse_members:
        raise UnstableCoarseSolve(f"no coefficient at {p} x {direction.canonical} in the band")
    n = p * p
    part = prime_power_partition(p, 2, *direction.canonical)
    labels = part.fine
    coarse_kl = direction.coarse_members[0]
    t_coarse = direction.multipliers[coarse_kl] // p
    # coarse unknowns D_mu, mu = 1..p, seen through p-th roots of unity
    a, b = _phase_rows(p, t_coarse, spec[coarse_kl])
    a = np.vstack([a, np.ones((1, p))])
    b = np.concatenate([b, [float(spec.popcount)]])
    coarse_sys = IntegerSystem(a, b, np.zeros(p, np.int64), np.full(p, p * n, np.int64))
    csol = solve_integer_system(coarse_sys, cfg,
                                offset=np.full(p, int(round(spec.popcount / p)), np.int64))
    if not csol.ok or not coarse_sys.within_bounds(csol.x):
        raise UnstableCoarseSolve(
            f"coarse sums along {direction.canonical} not recovered (residual {csol.residual:.3g})")
    coarse = csol.x
    fine = line_sum_system(spec, direction, include_popcount=False)
    groups = np.zeros((p, n))
    for mu, g in enumerate(part.coarse_groups):
        groups[mu, np.asarray(g) - 1] = 1.0
    fine = fine.with_rows(groups, coarse.astype(float))
    fsol = solve_integer_system(fine, cfg, offset=_centre(spec, n))
    raw = _raw(spec, direction)
    elapsed = time.perf_counter() - t0
    if not fsol.ok or not fine.within_bounds(fsol.x):
        reason = fsol.failure.value if fsol.failure else "sums out of bounds"
        return DirectionalData(direction, DataKind.SKIPPED, labels, raw=raw,
                               residual=fsol.residual, elapsed=elapsed, reason=reason)
    return DirectionalData(direction, DataKind.EXACT_SUMS, labels, sums=fsol.x, raw=raw,
                           residual=max(fsol.residual, csol.residual), elapsed=elapsed)


def extract_constraint_block(spec: BandedSpectrum, p: int, direction: DirectionClass,
                             cfg: SolverConfig = SolverConfig(), *,
                             min_members: int = 2) -> DirectionalData:
    """Equalities between line sums of a non-axis direction of a ``p^2 x p^2`` grid.

    The member coefficients alone fix the line sums only up to a constant
    added to every line of a coarse group.  A short lattice vector
    candidate ``c`` is therefore trusted only through its differences: for
    each coarse group with first label ``j0`` the rows
    ``s_j0 - s_j == c_j0 - c_j`` are emitted, followed by
    ``sum_j s_j == S``.
    """
    t0 = time.perf_counter()
    if _square_prime(spec) != p:
        raise ValueError(f"spectrum dims are not {p}^2")
    n = p * p
    part = prime_power_partition(p, 2, *direction.canonical)
    labels = part.fine
    raw = _raw(spec, direction)
    if direction.m_count < min_members:
        return DirectionalData(direction, DataKind.SKIPPED, labels, raw=raw,
                               reason="too few member coefficients")
    sys = line_sum_system(spec, direction, include_popcount=False)
    sol = solve_integer_system(sys, cfg, offset=_centre(spec, n))
    elapsed = time.perf_counter() - t0
    if not sol.ok:
        return DirectionalData(direction, DataKind.SKIPPED, labels, raw=raw,
                               residual=sol.residual, elapsed=elapsed, reason=sol.failure.value)
    cand = sol.x
    rows, rhs = [], []
    for g in part.coarse_groups:
        j0 = g[0]
        for j in g[1:]:
            r = np.zeros(n)
            r[j0 - 1], r[j - 1] = 1.0, -1.0
            rows.append(r)
            rhs.append(float(cand[j0 - 1] - cand[j - 1]))
    rows.append(np.ones(n))
    rhs.append(float(spec.popcount))
    diffs = np.asarray(rhs[:-1])
    if np.any(np.abs(diffs) > n):
        return DirectionalData(direction, DataKind.SKIPPED, labels, raw=raw,
                               residual=sol.residual, elapsed=elapsed,
                               reason="line-sum differences out of bounds")
    block = IntegerSystem(np.vstack(rows), np.asarray(rhs), np.zeros(n, np.int64),
                          np.full(n, n, np.int64))
    return DirectionalData(direction, DataKind.CONSTRAINT_BLOCK, labels, constraints=block,
                           raw=raw, residual=sol.residual, elapsed=elapsed)


def describe_block(block: IntegerSystem) -> list[str]:
    """Human-readable form of a constraint block, e.g. ``s1 - s4 = 1`` (``s_j`` is the sum of line ``j``)."""
    out = []
    for row, rhs in zip(block.a, block.b):
        terms = []
        for j in np.nonzero(row)[0]:
            c = int(round(row[j]))
            sign = "-" if c < 0 else "+"
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            terms.append(f"{sign} {mag}s{j + 1}")
        text = " ".join(terms).lstrip("+ ")
        out.append(f"{text} = {int(round(rhs))}")
    return out
