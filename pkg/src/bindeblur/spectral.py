"""Binary matrices, pass bands and their banded 2-D DFT spectra.

Conventions
-----------
Spatial indexes are 1-based: ``m = 1..N1`` (rows) and ``n = 1..N2``
(columns), and the forward transform is the unnormalized

    F[k, l] = sum_{m,n} X[m, n] * exp(2*pi*i*(m*k/N1 + n*l/N2)).

Frequency indexes live in the symmetric range ``-(N-1)/2..(N-1)/2`` for odd
``N`` and in ``-N/2+1..N/2`` for even ``N``.  The DFT is computed by direct
summation against precomputed root tables; the matrices handled here are
at most a few dozen cells per side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import BandOutOfRange, IncompleteBand

TAU_SYM = 1e-6


def index_range(n: int) -> range:
    """Frequency indexes covered by a full spectrum along an axis of length n."""
    if n % 2:
        half = (n - 1) // 2
        return range(-half, half + 1)
    return range(-n // 2 + 1, n // 2 + 1)


def wrap_index(k: int, n: int) -> int:
    """Map any integer frequency to its representative in ``index_range(n)``."""
    r = index_range(n)
    k = (k - r.start) % n + r.start
    return k


def root_table(n: int, ks: Iterable[int], sign: int = 1) -> np.ndarray:
    """``T[a, m-1] = exp(sign*2*pi*i*k_a*m/n)`` for ``m = 1..n``.

    The product ``k*m`` is reduced modulo ``n`` in integers first so that
    large indexes do not lose phase accuracy.
    """
    ks = np.asarray(list(ks), dtype=np.int64)
    m = np.arange(1, n + 1, dtype=np.int64)
    phase = np.mod(np.outer(ks, m), n).astype(float) / n
    return np.exp(sign * 2j * np.pi * phase)


@dataclass(frozen=True, eq=False)
class BinaryMatrix:
    """An ``n1 x n2`` matrix of zeros and ones (stored read-only, uint8)."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.array(self.bits, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D array, got shape {arr.shape}")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("binary matrix entries must be exactly 0 or 1")
        arr = arr.astype(np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def n1(self) -> int:
        return self.bits.shape[0]

    @property
    def n2(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def row_sums(self) -> np.ndarray:
        return self.bits.sum(axis=1).astype(np.int64)

    def col_sums(self) -> np.ndarray:
        return self.bits.sum(axis=0).astype(np.int64)

    def __eq__(self, other):
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.shape, self.bits.tobytes()))

    def __repr__(self):
        return f"BinaryMatrix({self.n1}x{self.n2}, popcount={self.popcount})"

    @classmethod
    def zeros(cls, n1: int, n2: int) -> "BinaryMatrix":
        return cls(np.zeros((n1, n2), dtype=np.uint8))

    @classmethod
    def random(cls, n1: int, n2: int, popcount: int, seed) -> "BinaryMatrix":
        """Uniformly random matrix with exactly ``popcount`` ones.

        ``seed`` is anything ``numpy.random.default_rng`` accepts (PCG64).
        """
        if not 0 <= popcount <= n1 * n2:
            raise ValueError("popcount out of range")
        rng = np.random.default_rng(seed)
        flat = np.zeros(n1 * n2, dtype=np.uint8)
        flat[rng.choice(n1 * n2, size=popcount, replace=False)] = 1
        return cls(flat.reshape(n1, n2))


@dataclass(frozen=True)
class Band:
    """Explicit finite set of frequency indexes ``(k, l)``.

    Always contains ``(0, 0)``.  Closure under negation is checked against
    concrete dims by :meth:`check_closed` since for even dims ``N/2`` is its
    own negative.
    """

    indexes: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        idx = frozenset((int(k), int(l)) for k, l in self.indexes)
        if (0, 0) not in idx:
            raise ValueError("a band always contains (0, 0)")
        object.__setattr__(self, "indexes", idx)

    def __contains__(self, kl) -> bool:
        return tuple(kl) in self.indexes

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.indexes))

    def __len__(self) -> int:
        return len(self.indexes)

    @classmethod
    def rect(cls, l1: int, l2: int) -> "Band":
        return cls(frozenset((k, l) for k in range(-l1, l1 + 1) for l in range(-l2, l2 + 1)))

    @classmethod
    def square(cls, L: int) -> "Band":
        return cls.rect(L, L)

    @classmethod
    def four_coefficient(cls) -> "Band":
        """{(0,0), (0,+-1), (+-1,0), (1,1), (-1,-1)}: the minimal band for distinct prime dims."""
        return cls(frozenset({(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (-1, -1)}))

    @classmethod
    def full(cls, n1: int, n2: int) -> "Band":
        return cls(frozenset((k, l) for k in index_range(n1) for l in index_range(n2)))

    @classmethod
    def from_indexes(cls, indexes: Iterable[tuple[int, int]]) -> "Band":
        """Band holding ``indexes``, their negatives, and (0, 0)."""
        idx = {(0, 0)}
        for k, l in indexes:
            idx.add((int(k), int(l)))
            idx.add((-int(k), -int(l)))
        return cls(frozenset(idx))

    def reduced(self, n1: int, n2: int) -> "Band":
        """Wrap every index into the canonical ranges of ``n1 x n2``."""
        return Band(frozenset((wrap_index(k, n1), wrap_index(l, n2)) for k, l in self.indexes))

    def in_range(self, n1: int, n2: int) -> bool:
        return all(abs(k) <= n1 // 2 and abs(l) <= n2 // 2 for k, l in self.indexes)

    def check_closed(self, n1: int, n2: int) -> bool:
        red = self.reduced(n1, n2).indexes
        return all((wrap_index(-k, n1), wrap_index(-l, n2)) in red for k, l in red)


def conjugate_index(kl: tuple[int, int], n1: int, n2: int) -> tuple[int, int]:
    return wrap_index(-kl[0], n1), wrap_index(-kl[1], n2)


def independent_indexes(indexes: Iterable[tuple[int, int]], n1: int, n2: int) -> list[tuple[int, int]]:
    """One representative per conjugate pair, excluding (0, 0).

    The representative is the member with ``k > 0``, or ``k == 0, l > 0``;
    self-conjugate indexes (possible for even dims) are kept once.
    """
    seen = set()
    reps = []
    for kl in sorted(set(indexes)):
        if kl == (0, 0) or kl in seen:
            continue
        conj = conjugate_index(kl, n1, n2)
        seen.add(kl)
        seen.add(conj)
        k, l = kl
        reps.append(kl if (k > 0 or (k == 0 and l > 0) or conj == kl) else conj)
    return sorted(reps)


@dataclass(frozen=True, eq=False)
class BandedSpectrum:
    """Complex DFT coefficients of an ``n1 x n2`` matrix on a band."""

    n1: int
    n2: int
    band: Band
    values: Mapping

    def __post_init__(self):
        band = self.band.reduced(self.n1, self.n2)
        if not band.check_closed(self.n1, self.n2):
            raise ValueError("band is not closed under negation")
        vals = {}
        for kl, v in self.values.items():
            kl = (wrap_index(kl[0], self.n1), wrap_index(kl[1], self.n2))
            vals[kl] = complex(v)
        missing = band.indexes - vals.keys()
        if missing:
            raise ValueError(f"no value for band indexes {sorted(missing)[:5]}")
        vals = {kl: vals[kl] for kl in sorted(band.indexes)}
        asym = self.symmetry_defect_of(vals)
        if asym > TAU_SYM * max(1.0, max(abs(v) for v in vals.values())):
            raise ValueError(f"spectrum is not Hermitian (defect {asym:.3g})")
        object.__setattr__(self, "band", band)
        object.__setattr__(self, "values", MappingProxyType(vals))

    def symmetry_defect_of(self, vals) -> float:
        worst = 0.0
        for kl, v in vals.items():
            c = vals[conjugate_index(kl, self.n1, self.n2)]
            worst = max(worst, abs(c - v.conjugate()))
        return worst

    def __getitem__(self, kl) -> complex:
        k, l = kl
        return self.values[(wrap_index(k, self.n1), wrap_index(l, self.n2))]

    def __contains__(self, kl) -> bool:
        k, l = kl
        return (wrap_index(k, self.n1), wrap_index(l, self.n2)) in self.values

    @property
    def dims(self) -> tuple[int, int]:
        return self.n1, self.n2

    @property
    def popcount(self) -> int:
        """Global popcount S, rounded from the DC coefficient."""
        return int(round(self.values[(0, 0)].real))

    def independent(self) -> list[tuple[int, int]]:
        return independent_indexes(self.values.keys(), self.n1, self.n2)

    def is_full(self) -> bool:
        return len(self.values) == self.n1 * self.n2

    def max_deviation(self, other: "BandedSpectrum") -> float:
        """Largest |difference| over this spectrum's band (other must cover it)."""
        return max(abs(v - other[kl]) for kl, v in self.values.items())


def dft_forward(x: BinaryMatrix | np.ndarray) -> BandedSpectrum:
    """Full unnormalized DFT of a matrix, 1-based spatial indexes."""
    bits = x.bits if isinstance(x, BinaryMatrix) else np.asarray(x)
    n1, n2 = bits.shape
    k1, k2 = list(index_range(n1)), list(index_range(n2))
    full = root_table(n1, k1) @ bits.astype(float) @ root_table(n2, k2).T
    vals = {(k, l): full[a, b] for a, k in enumerate(k1) for b, l in enumerate(k2)}
    return BandedSpectrum(n1, n2, Band.full(n1, n2), vals)


def dft_on(x: BinaryMatrix | np.ndarray, band: Band) -> BandedSpectrum:
    """Forward DFT evaluated only on ``band`` (no full transform)."""
    bits = x.bits if isinstance(x, BinaryMatrix) else np.asarray(x)
    n1, n2 = bits.shape
    band = band.reduced(n1, n2)
    if not band.in_range(n1, n2):
        raise BandOutOfRange("band exceeds the index ranges of the matrix")
    idx = sorted(band.indexes)
    w = coefficient_weights(n1, n2, idx)
    vals = w @ bits.astype(float).ravel()
    return BandedSpectrum(n1, n2, band, dict(zip(idx, vals)))


def coefficient_weights(n1: int, n2: int, indexes) -> np.ndarray:
    """Rows ``exp(2*pi*i*(m*k/N1 + n*l/N2))`` over row-major flattened cells."""
    ks = [k for k, _ in indexes]
    ls = [l for _, l in indexes]
    e1 = root_table(n1, ks)
    e2 = root_table(n2, ls)
    return (e1[:, :, None] * e2[:, None, :]).reshape(len(ks), n1 * n2)


def _synthesis(s: BandedSpectrum) -> np.ndarray:
    idx = list(s.values.keys())
    vals = np.array([s.values[kl] for kl in idx])
    e1 = root_table(s.n1, [k for k, _ in idx], sign=-1)
    e2 = root_table(s.n2, [l for _, l in idx], sign=-1)
    out = np.einsum("a,am,an->mn", vals, e1, e2)
    return out.real / (s.n1 * s.n2)


def dft_inverse(s: BandedSpectrum) -> np.ndarray:
    """Inverse DFT of a full spectrum; raises IncompleteBand otherwise."""
    full = Band.full(s.n1, s.n2).indexes
    missing = full - s.values.keys()
    if missing:
        raise IncompleteBand(f"{len(missing)} indexes missing, e.g. {sorted(missing)[0]}")
    return _synthesis(s)


def band_extract(s: BandedSpectrum, band: Band) -> BandedSpectrum:
    """Restrict a spectrum to ``band``; every band index must be present in ``s``."""
    if not band.in_range(s.n1, s.n2):
        raise BandOutOfRange("band exceeds the index ranges of the spectrum")
    band_r = band.reduced(s.n1, s.n2)
    absent = band_r.indexes - s.values.keys()
    if absent:
        raise BandOutOfRange(f"band indexes not in spectrum: {sorted(absent)[:5]}")
    return BandedSpectrum(s.n1, s.n2, band_r, {kl: s.values[kl] for kl in band_r.indexes})


def blur(s: BandedSpectrum) -> np.ndarray:
    """Band-limited reconstruction: inverse DFT summed over the band only."""
    return _synthesis(s)


def add_noise(s: BandedSpectrum, variance: float, seed) -> BandedSpectrum:
    """Gaussian perturbation of the data, Hermitian symmetry preserved.

    Each independent coefficient gets N(0, variance) added to its real and
    imaginary parts; its conjugate partner receives the conjugate.  The DC
    term (and any self-conjugate index) is perturbed in its real part only.

    Draws are made for every independent index of the full spectrum in a
    fixed order, so for a given seed a coefficient receives the same noise
    whatever band it is observed on.
    """
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if variance == 0:
        return s
    rng = np.random.default_rng(seed)
    sd = float(np.sqrt(variance))
    vals = dict(s.values)
    full = [(0, 0)] + independent_indexes(Band.full(s.n1, s.n2).indexes, s.n1, s.n2)
    for kl in full:
        conj = conjugate_index(kl, s.n1, s.n2)
        if conj == kl:
            d = complex(rng.normal(0.0, sd), 0.0)
        else:
            d = complex(rng.normal(0.0, sd), rng.normal(0.0, sd))
        if kl in vals:
            vals[kl] = vals[kl] + d
            if conj != kl:
                vals[conj] = vals[kl].conjugate()
    return BandedSpectrum(s.n1, s.n2, s.band, vals)
