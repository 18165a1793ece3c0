"""Periodic line partitions of the N x N grid and slope classes of coefficients.

For a direction ``(k, l)`` the cell ``(m, n)`` (1-based) lies on line
``j = (m*k + n*l) mod N`` with labels in ``1..N`` (residue 0 is written N).
This is the grouping under which the coefficient at ``(k, l)`` equals
``sum_j s_j * w**j`` with ``s_j`` the popcount of line ``j`` and
``w = exp(2*pi*i/N)``, so
direction ``(0, 1)`` labels columns and ``(1, 0)`` labels rows.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd, isqrt
from typing import Iterable

import numpy as np

from .errors import ZeroDirection
from .spectral import Band, independent_indexes


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in range(2, isqrt(n) + 1):
        if n % d == 0:
            return False
    return True


def prime_power(n: int) -> tuple[int, int] | None:
    """Return ``(p, alpha)`` with ``n == p**alpha``, or None."""
    for p in range(2, n + 1):
        if n % p == 0:
            alpha = 0
            while n % p == 0:
                n //= p
                alpha += 1
            return (p, alpha) if n == 1 else None
    return None


def line_labels(n: int, k: int, l: int) -> np.ndarray:
    """``labels[m-1, n-1] = ((m*k + n*l) mod N)`` mapped into ``1..N``."""
    idx = np.arange(1, n + 1, dtype=np.int64)
    lab = np.mod(np.outer(idx * k, np.ones(n, dtype=np.int64)) + idx[None, :] * l, n)
    lab[lab == 0] = n
    return lab


@dataclass(frozen=True, eq=False)
class LinePartition:
    n: int
    k: int
    l: int
    labels: np.ndarray

    def label_of(self, m: int, col: int) -> int:
        """Line label of the 1-based cell ``(m, col)``."""
        return int(self.labels[m - 1, col - 1])

    def cells(self, j: int) -> list[tuple[int, int]]:
        """1-based cells on line ``j``."""
        rows, cols = np.nonzero(self.labels == j)
        return [(int(r) + 1, int(c) + 1) for r, c in zip(rows, cols)]

    def sizes(self) -> np.ndarray:
        """Cell count per label, index 0 holding label 1."""
        return np.bincount(self.labels.ravel() - 1, minlength=self.n)

    def line_sums(self, bits: np.ndarray) -> np.ndarray:
        """Popcount per line; entry ``j-1`` is the sum over line ``j``."""
        return np.bincount(self.labels.ravel() - 1, weights=np.asarray(bits).ravel(),
                           minlength=self.n).astype(np.int64)


def line_partition(n: int, k: int, l: int) -> LinePartition:
    if k % n == 0 and l % n == 0:
        raise ZeroDirection(f"direction ({k}, {l}) vanishes modulo {n}")
    lab = line_labels(n, k, l)
    lab.setflags(write=False)
    return LinePartition(n, k, l, lab)


def slope_equivalent(n: int, a: tuple[int, int], b: tuple[int, int]) -> bool:
    """``(k, l) ~ (k', l')`` iff ``k*l' == k'*l (mod n)``."""
    (k, l), (k2, l2) = a, b
    return (k * l2 - k2 * l) % n == 0


def _canon_key(kl: tuple[int, int]):
    k, l = kl
    return (max(abs(k), abs(l)), abs(k), abs(l), -k, -l)


@dataclass
class DirectionClass:
    """One slope class: the band coefficients carrying the same line sums.

    ``members`` holds one index per conjugate pair.  ``multipliers[kl]`` is
    the unit ``t`` with ``kl == t * canonical (mod n)``, so that
    the coefficient at ``kl`` is ``sum_j s_j * w**(t*j)`` over the line sums
    ``s_j`` of the canonical lines, ``w = exp(2*pi*i/n)``.
    ``coarse_members`` (prime-power grids only) are indexes ``p * canonical``
    that see the lines grouped modulo ``n / p``.
    """

    n: int
    canonical: tuple[int, int]
    members: list = field(default_factory=list)
    multipliers: dict = field(default_factory=dict)
    coarse_members: list = field(default_factory=list)

    @property
    def m_count(self) -> int:
        return len(self.members)

    @property
    def line_count(self) -> int:
        return self.n

    @property
    def line_capacity(self) -> int:
        return self.n

    @property
    def is_axis(self) -> bool:
        return self.canonical in ((0, 1), (1, 0), (1, 1), (1, -1))

    def partition(self) -> LinePartition:
        return line_partition(self.n, *self.canonical)

    def __repr__(self):
        return f"DirectionClass({self.canonical}, M={self.m_count})"


def _unit_multiplier(n: int, canon: tuple[int, int], kl: tuple[int, int]) -> int:
    k0, l0 = canon
    k, l = kl
    if gcd(k0, n) == 1:
        t = (k * pow(k0, -1, n)) % n
    else:
        t = (l * pow(l0, -1, n)) % n
    if (t * k0 - k) % n or (t * l0 - l) % n:
        raise ValueError(f"{kl} is not a unit multiple of {canon} mod {n}")
    return t


def direction_classes(n: int, indexes: Iterable[tuple[int, int]]) -> list[DirectionClass]:
    """Group non-DC band indexes of an ``n x n`` grid into slope classes.

    Works for prime ``n`` and for ``n = p**2``; in the latter case indexes
    divisible by ``p`` in both coordinates are attached as coarse members of
    the class of ``(k/p, l/p)`` when that class exists in the band.
    Classes come out ordered by descending ``m_count``, then canonical.
    """
    pp = prime_power(n)
    if pp is None or pp[1] > 2:
        raise ValueError(f"direction classes need n prime or a prime square, got {n}")
    p, alpha = pp
    reps = independent_indexes(indexes, n, n)
    primitive = [kl for kl in reps if alpha == 1 or not (kl[0] % p == 0 and kl[1] % p == 0)]
    coarse = [kl for kl in reps if kl not in primitive]
    groups: list[list[tuple[int, int]]] = []
    for kl in primitive:
        for g in groups:
            if slope_equivalent(n, g[0], kl):
                g.append(kl)
                break
        else:
            groups.append([kl])
    classes = []
    for g in groups:
        canon = min(g, key=_canon_key)
        dc = DirectionClass(n, canon, sorted(g, key=_canon_key))
        dc.multipliers = {kl: _unit_multiplier(n, canon, kl) for kl in dc.members}
        classes.append(dc)
    for kl in coarse:
        base = (kl[0] // p, kl[1] // p)
        for dc in classes:
            if _is_multiple(n, dc.canonical, base):
                dc.coarse_members.append(kl)
                dc.multipliers[kl] = (p * _unit_multiplier(n, dc.canonical, base)) % n
                break
    classes.sort(key=lambda c: (-c.m_count, _canon_key(c.canonical)))
    return classes


def _is_multiple(n: int, canon, kl) -> bool:
    try:
        _unit_multiplier(n, canon, kl)
    except (ValueError, ZeroDivisionError):
        return False
    return True


def canonical_directions(n: int, band: Band | Iterable[tuple[int, int]]) -> list[DirectionClass]:
    """Slope classes of a prime ``n``: at most ``n + 1`` of them."""
    if not is_prime(n):
        raise ValueError(f"canonical_directions expects a prime modulus, got {n}")
    idx = band.reduced(n, n).indexes if isinstance(band, Band) else band
    return direction_classes(n, idx)


@dataclass(frozen=True, eq=False)
class PrimePowerPartition:
    """Fine lines modulo ``p**alpha`` and their coarse grouping.

    ``fine`` labels cells by ``(m*k' + n*l') mod N`` for the primitive
    direction ``(k', l') = (k, l) / gcd``.  ``coarse_groups[mu-1]`` lists the
    fine labels ``j`` with ``j == mu (mod p**(alpha-1))``; vanishing sums
    of N-th roots allow a common offset on exactly these groups.
    """

    p: int
    alpha: int
    direction: tuple[int, int]
    fine: np.ndarray
    coarse_groups: tuple

    @property
    def n(self) -> int:
        return self.p ** self.alpha

    def coarse_labels(self) -> np.ndarray:
        q = self.p ** (self.alpha - 1)
        lab = np.mod(self.fine, q)
        lab[lab == 0] = q
        return lab


def prime_power_partition(p: int, alpha: int, k: int, l: int) -> PrimePowerPartition:
    n = p ** alpha
    if k % n == 0 and l % n == 0:
        raise ZeroDirection(f"direction ({k}, {l}) vanishes modulo {n}")
    g = gcd(gcd(k, l), n)
    kp, lp = k // g, l // g
    fine = line_labels(n, kp, lp)
    fine.setflags(write=False)
    q = p ** (alpha - 1)
    groups = tuple(tuple(j for j in range(1, n + 1) if j % q == mu % q) for mu in range(1, q + 1))
    return PrimePowerPartition(p, alpha, (kp, lp), fine, groups)
