"""Ground truth at desk scale: exhaustive recovery, uniqueness audits and
indistinguishable pairs.

Binary matrices with ``T`` cells are identified with integer codes whose bit
``t`` is cell ``t`` in row-major order.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _core
from .errors import TooLarge
from .lines import is_prime
from .spectral import Band, BandedSpectrum, BinaryMatrix, coefficient_weights, independent_indexes

MAX_CELLS = 25
QUANTUM = 1e-6
VERIFY_TOL = 1e-9
_CHUNK_BITS = 16


def _check_cells(n1: int, n2: int):
    if n1 * n2 > MAX_CELLS:
        raise TooLarge(f"{n1}x{n2} has {n1 * n2} cells; exhaustive search is capped at {MAX_CELLS}")


def _real_weights(n1: int, n2: int, band: Band) -> np.ndarray:
    """Real rows whose product with a flattened matrix gives its banded spectrum.

    The DC row is followed by the real and imaginary rows of one member
    of every conjugate pair, which together determine the whole band.
    """
    idx = [(0, 0)] + independent_indexes(band.reduced(n1, n2).indexes, n1, n2)
    w = coefficient_weights(n1, n2, idx)
    return np.vstack([w.real, w.imag[1:]])


def decode(code: int, n1: int, n2: int) -> BinaryMatrix:
    """Binary matrix whose row-major cell ``t`` is bit ``t`` of ``code``."""
    t = np.arange(n1 * n2, dtype=np.int64)
    return BinaryMatrix(((int(code) >> t) & 1).astype(np.uint8).reshape(n1, n2))


def encode(x: BinaryMatrix) -> int:
    flat = x.bits.ravel().astype(np.int64)
    return int(sum(int(b) << t for t, b in enumerate(flat)))


def _codes_to_bits(codes: np.ndarray, cells: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(cells, dtype=np.int64)) & 1).astype(np.float64)


def brute_force_recover(spec: BandedSpectrum, tolerance: float = 1e-6) -> set[BinaryMatrix]:
    """Every binary matrix whose banded spectrum matches ``spec`` within ``tolerance``.

    All ``2**(n1*n2)`` matrices are visited in Gray-code order, so each step
    updates the running spectrum by one cell's contribution.

    Raises
    ------
    TooLarge
        for more than 25 cells.
    """
    n1, n2 = spec.dims
    _check_cells(n1, n2)
    idx = [(0, 0)] + independent_indexes(spec.values.keys(), n1, n2)
    w = coefficient_weights(n1, n2, idx)
    target = np.array([spec[kl] for kl in idx])
    codes = _core.kernels.gray_match(w.real, w.imag, target.real, target.imag,
                                     float(tolerance), 1 << 40)
    return {decode(c, n1, n2) for c in codes}


@dataclass(frozen=True)
class Exhaustive:
    """Visit every binary matrix of the given dims."""


@dataclass(frozen=True)
class Sampled:
    """Hash ``count`` uniformly random matrices against each other.

    Every pair among the distinct sampled matrices is compared, i.e.
    about ``count**2 / 2`` pairs.
    """

    count: int
    seed: int = 0

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("a sampled audit needs at least two matrices")


@dataclass
class UniquenessAudit:
    """Matrices of one size that a band cannot tell apart.

    ``groups`` holds one array of codes per set of distinct matrices with
    identical banded spectra (sizes >= 2).  In exhaustive mode the groups
    are complete.
    """

    dims: tuple[int, int]
    band: Band
    mode: Exhaustive | Sampled
    groups: list = field(default_factory=list)
    examined: int = 0
    elapsed: float = 0.0

    @property
    def collision_count(self) -> int:
        return sum(len(g) * (len(g) - 1) // 2 for g in self.groups)

    @property
    def unique(self) -> bool:
        return not self.groups

    def pairs(self) -> Iterator[tuple[BinaryMatrix, BinaryMatrix]]:
        n1, n2 = self.dims
        for g in self.groups:
            for a, b in itertools.combinations(g, 2):
                yield decode(a, n1, n2), decode(b, n1, n2)

    @property
    def collisions(self) -> list[tuple[BinaryMatrix, BinaryMatrix]]:
        """All indistinguishable pairs (can be large for weak bands)."""
        return list(self.pairs())

    def contains_pair(self, x: BinaryMatrix, y: BinaryMatrix) -> bool:
        cx, cy = encode(x), encode(y)
        return any(cx in g and cy in g for g in map(set, self.groups))


def _hash_rows(values: np.ndarray, multipliers: np.ndarray) -> np.ndarray:
    q = np.rint(values / QUANTUM).astype(np.int64).view(np.uint64)
    with np.errstate(over="ignore"):
        return (q * multipliers).sum(axis=1, dtype=np.uint64)


def _exhaustive_hashes(weights: np.ndarray, cells: int, multipliers: np.ndarray) -> np.ndarray:
    low_bits = min(cells, _CHUNK_BITS)
    base = _codes_to_bits(np.arange(1 << low_bits, dtype=np.int64), low_bits) @ weights[:, :low_bits].T
    out = np.empty(1 << cells, dtype=np.uint64)
    high_w = weights[:, low_bits:]
    for high in range(1 << (cells - low_bits)):
        hb = _codes_to_bits(np.array([high], dtype=np.int64), cells - low_bits)[0]
        vals = base + high_w @ hb
        out[high << low_bits:(high + 1) << low_bits] = _hash_rows(vals, multipliers)
    return out


def _split_exact(codes: np.ndarray, weights: np.ndarray, cells: int) -> list[np.ndarray]:
    """Partition hash-equal codes into classes of truly equal spectra."""
    vals = _codes_to_bits(codes, cells) @ weights.T
    remaining = np.arange(len(codes))
    out = []
    while len(remaining) > 1:
        dev = np.abs(vals[remaining] - vals[remaining[0]]).max(axis=1)
        same = dev <= VERIFY_TOL
        if same.sum() > 1:
            out.append(np.sort(codes[remaining[same]]))
        remaining = remaining[~same]
    return out


def _groups(codes: np.ndarray, hashes: np.ndarray, weights: np.ndarray, cells: int) -> list:
    order = np.argsort(hashes, kind="stable")
    h = hashes[order]
    starts = np.flatnonzero(np.r_[True, h[1:] != h[:-1]])
    sizes = np.diff(np.r_[starts, len(h)])
    groups = []
    for s, n in zip(starts[sizes > 1], sizes[sizes > 1]):
        groups.extend(_split_exact(codes[order[s:s + n]], weights, cells))
    groups.sort(key=lambda g: int(g[0]))
    return groups


def audit_uniqueness(dims: tuple[int, int], band: Band, mode: Exhaustive | Sampled = Exhaustive()
                     ) -> UniquenessAudit:
    """Look for distinct binary matrices with the same spectrum on ``band``.

    Spectra are quantized to a 1e-6 grid and hashed; matrices sharing a
    hash are then compared directly (max deviation 1e-9) so hash or grid
    coincidences never count as collisions.

    Raises
    ------
    TooLarge
        in exhaustive mode beyond 25 cells.
    """
    t0 = time.perf_counter()
    n1, n2 = dims
    cells = n1 * n2
    weights = _real_weights(n1, n2, band)
    multipliers = np.random.default_rng(0x5EED).integers(1, 2**63, size=weights.shape[0],
                                                         dtype=np.uint64) | np.uint64(1)
    if isinstance(mode, Exhaustive):
        _check_cells(n1, n2)
        codes = np.arange(1 << cells, dtype=np.int64)
        hashes = _exhaustive_hashes(weights, cells, multipliers)
    else:
        if cells > 62:
            raise TooLarge("sampled audits encode matrices in 62 bits at most")
        rng = np.random.default_rng(mode.seed)
        bits = rng.integers(0, 2, size=(mode.count, cells), dtype=np.int64)
        codes = np.unique((bits << np.arange(cells, dtype=np.int64)).sum(axis=1))
        hashes = _hash_rows(_codes_to_bits(codes, cells) @ weights.T, multipliers)
    groups = _groups(codes, hashes, weights, cells)
    return UniquenessAudit((n1, n2), band, mode, groups, len(codes), time.perf_counter() - t0)


def counterexample_pair(p: int, alpha: int) -> tuple[BinaryMatrix, BinaryMatrix]:
    """Two ``p**alpha`` square matrices that agree on every ``|k|, |l| < p**(alpha-1)``.

    For ``p == 2`` these are the two checkerboards (ones where ``m + n`` is
    even, and its complement).  For odd ``p`` they are the diagonal stripe
    patterns with ones where ``m + n == 1 (mod p)`` and ``m + n == 0 (mod p)``.
    """
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if alpha < 2:
        raise ValueError("alpha must be at least 2")
    n = p ** alpha
    s = np.add.outer(np.arange(1, n + 1), np.arange(1, n + 1))
    if p == 2:
        x = (s % 2 == 0)
        y = ~x
    else:
        x = (s % p == 1)
        y = (s % p == 0)
    return BinaryMatrix(x.astype(np.uint8)), BinaryMatrix(y.astype(np.uint8))


def interchange_neighbors(x: BinaryMatrix) -> Iterator[BinaryMatrix]:
    """Matrices reached by swapping one 2x2 pattern ``[[1,0],[0,1]]`` <-> ``[[0,1],[1,0]]``.

    Rows ``m < m'`` and columns ``n < n'`` are scanned in lexicographic
    order; every neighbor keeps all row and column sums.
    """
    b = x.bits
    n1, n2 = b.shape
    for m, mm in itertools.combinations(range(n1), 2):
        for n, nn in itertools.combinations(range(n2), 2):
            a, c, d, e = b[m, n], b[m, nn], b[mm, n], b[mm, nn]
            if a == e and c == d and a != c:
                y = b.copy()
                y[m, n], y[m, nn], y[mm, n], y[mm, nn] = c, a, e, d
                yield BinaryMatrix(y)
