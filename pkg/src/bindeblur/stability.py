"""Search-space counts and the digits-of-precision heuristic.

All counts are exact Python integers.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, log10, prod, sqrt
from typing import Sequence


def count_bounded_compositions(s: int, boxes: int, cap: int) -> int:
    """Number of ways to put ``s`` ones into ``boxes`` boxes holding at most ``cap`` each.

    Inclusion-exclusion over the set of boxes forced above capacity.
    Out-of-range ``s`` gives 0.
    """
    if boxes < 0 or cap < 0:
        raise ValueError("boxes and cap must be nonnegative")
    if s < 0 or s > boxes * cap:
        return 0
    if boxes == 0:
        return 1 if s == 0 else 0
    total = 0
    for i in range(boxes + 1):
        rest = s - i * (cap + 1)
        if rest < 0:
            break
        total += (-1) ** i * comb(boxes, i) * comb(rest + boxes - 1, boxes - 1)
    return total


def count_matrices_given_sums(c: Sequence[int], rows: int) -> int:
    """Binary matrices with ``rows`` rows and column sums ``c``: prod C(rows, c_n)."""
    if any(not 0 <= int(v) <= rows for v in c):
        raise ValueError("column sums must lie in [0, rows]")
    return prod(comb(rows, int(v)) for v in c)


def nu(p: int, k_bound: int) -> int:
    """Integer vectors ``e`` in ``[-K, K]**p`` with ``sum(e) == 0``.

    Shifting by ``K`` turns this into compositions of ``p*K`` into ``p``
    boxes of capacity ``2K``.
    """
    if p < 1 or k_bound < 0:
        raise ValueError("need p >= 1 and k_bound >= 0")
    return count_bounded_compositions(p * k_bound, p, 2 * k_bound)


def digits_estimate(p: int, k_bound: int, m: int) -> float:
    """Decimal digits needed to tell apart integer line sums from ``m`` coefficients.

    ``log10(2) - log10(sqrt(p*(2K+1))) + log10(nu(p, K)) / (2m)``: the
    radius ``R`` at which the expected count of spurious short difference
    vectors drops to one, under a random-walk model for each coefficient.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    return log10(2) - log10(sqrt(p * (2 * k_bound + 1))) + log10(nu(p, k_bound)) / (2 * m)


def round_half_up(x: float) -> int:
    return int(x + 0.5) if x >= 0 else -int(-x + 0.5)


@dataclass(frozen=True)
class StabilityEstimate:
    p: int
    k_bound: int
    m: int
    nu: int
    digits: float

    @property
    def rounded(self) -> int:
        return round_half_up(self.digits)


def stability(p: int, k_bound: int, m: int) -> StabilityEstimate:
    return StabilityEstimate(p, k_bound, m, nu(p, k_bound), digits_estimate(p, k_bound, m))
