"""Fixture generators: random models, QR-like grids and indistinguishable pairs.

All randomness comes from ``numpy.random.default_rng`` (PCG64) seeded with
the given integer, so fixtures are identical across platforms.
"""
from __future__ import annotations

import numpy as np

from .oracle import counterexample_pair
from .spectral import BinaryMatrix

KINDS = ("random", "qr-like", "checkerboard", "stripe")


def random_model(n1: int, n2: int, popcount: int, seed: int) -> BinaryMatrix:
    """``popcount`` ones placed uniformly without replacement."""
    return BinaryMatrix.random(n1, n2, popcount, seed)


def _finder(n: int, top: int, left: int, fixed: np.ndarray, bits: np.ndarray):
    """7x7 finder pattern plus its one-cell light separator (0-based corner)."""
    for m in range(top - 1, top + 8):
        for c in range(left - 1, left + 8):
            if 0 <= m < n and 0 <= c < n:
                fixed[m, c] = True
                dm, dc = m - top, c - left
                inside = 0 <= dm < 7 and 0 <= dc < 7
                ring = inside and (dm in (0, 6) or dc in (0, 6))
                core = 2 <= dm <= 4 and 2 <= dc <= 4
                bits[m, c] = ring or core


def qr_like(n: int, popcount: int | None, seed: int) -> BinaryMatrix:
    """QR-shaped grid: fixed finder, timing and alignment patterns, random payload.

    Three finder patterns sit in the top-left, top-right and bottom-left
    corners, timing patterns run along row and column 7 (0-based 6), and
    grids of side 25 or more get one alignment pattern centred at
    ``(n-7, n-7)``.  The remaining cells are a seeded random payload; when
    ``popcount`` is given the payload is chosen so the whole grid has
    exactly that many ones.  This is a layout imitation, not an encoder.
    """
    if n < 21:
        raise ValueError("QR-like grids need side >= 21")
    fixed = np.zeros((n, n), dtype=bool)
    bits = np.zeros((n, n), dtype=bool)
    for top, left in ((0, 0), (0, n - 7), (n - 7, 0)):
        _finder(n, top, left, fixed, bits)
    for i in range(8, n - 8):
        fixed[6, i] = fixed[i, 6] = True
        bits[6, i] = bits[i, 6] = (i % 2 == 0)
    if n >= 25:
        c = n - 7
        for m in range(c - 2, c + 3):
            for k in range(c - 2, c + 3):
                fixed[m, k] = True
                bits[m, k] = max(abs(m - c), abs(k - c)) != 1
    free = np.flatnonzero(~fixed.ravel())
    rng = np.random.default_rng(seed)
    flat = bits.ravel()
    if popcount is None:
        flat[free] = rng.integers(0, 2, size=free.size).astype(bool)
    else:
        need = popcount - int(flat.sum())
        if not 0 <= need <= free.size:
            raise ValueError(f"popcount {popcount} is not reachable with the fixed patterns "
                             f"({int(flat.sum())} fixed ones, {free.size} free cells)")
        flat[rng.choice(free, size=need, replace=False)] = True
    return BinaryMatrix(flat.reshape(n, n).astype(np.uint8))


def generate(kind: str, *, dims: tuple[int, int] | None = None, popcount: int | None = None,
             seed: int = 0, p: int | None = None, alpha: int | None = None,
             which: int = 0) -> BinaryMatrix:
    """Build a fixture of one of :data:`KINDS`.

    ``random`` needs ``dims`` and ``popcount``; ``qr-like`` needs a square
    ``dims``; ``checkerboard`` and ``stripe`` need ``p`` and ``alpha`` and
    return member ``which`` (0 or 1) of the indistinguishable pair.
    """
    if kind == "random":
        if dims is None or popcount is None:
            raise ValueError("random fixtures need dims and popcount")
        return random_model(dims[0], dims[1], popcount, seed)
    if kind == "qr-like":
        if dims is None or dims[0] != dims[1]:
            raise ValueError("qr-like fixtures need square dims")
        return qr_like(dims[0], popcount, seed)
    if kind in ("checkerboard", "stripe"):
        if p is None or alpha is None:
            raise ValueError(f"{kind} fixtures need p and alpha")
        if (kind == "checkerboard") != (p == 2):
            raise ValueError("checkerboards use p = 2, stripes an odd prime p")
        if which not in (0, 1):
            raise ValueError("which must be 0 or 1")
        return counterexample_pair(p, alpha)[which]
    raise ValueError(f"unknown fixture kind {kind!r}; expected one of {KINDS}")
