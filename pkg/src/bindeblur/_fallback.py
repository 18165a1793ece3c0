"""Pure-Python kernels, used when the compiled extension is unavailable.

Every function here has a twin with the same signature and the same
return conventions in the compiled ``_kernels`` module.  The twins are
cross-checked by the test suite.

Status codes shared with the compiled module:

``FEASIBLE = 0``, ``INFEASIBLE = 1``, ``BUDGET = 2`` for searches;
``LLL_OK = 0``, ``LLL_TIMEOUT = 1``, ``LLL_DEPENDENT = 2`` for reduction.
"""
from __future__ import annotations

import bisect
import math
import time

import numpy as np

FEASIBLE, INFEASIBLE, BUDGET = 0, 1, 2
LLL_OK, LLL_TIMEOUT, LLL_DEPENDENT = 0, 1, 2

BACKEND = "python"


# ---------------------------------------------------------------------------
# depth-first search with interval propagation
# ---------------------------------------------------------------------------

def _columns(n, indptr, indices, coefs):
    """CSR rows to per-variable lists of (row, coef)."""
    cols = [[] for _ in range(n)]
    for r in range(len(indptr) - 1):
        for p in range(indptr[r], indptr[r + 1]):
            cols[indices[p]].append((r, coefs[p]))
    return cols


def dfs_solve(lo0, hi0, indptr, indices, coefs, b, tol, hint, static_score,
              node_limit, branch_rows):
    """Find an integer ``x`` with ``lo0 <= x <= hi0`` and ``|A x - b| <= tol`` rowwise.

    Parameters
    ----------
    lo0, hi0 : int64 arrays
        Variable bounds.
    indptr, indices, coefs : arrays
        ``A`` in compressed sparse row form.
    b, tol : float64 arrays
        Targets and per-row acceptance tolerances.
    hint : float64 array
        Preferred value per variable; domain values are tried nearest first.
    static_score : float64 array
        Tie-break for branching; larger means branch earlier.
    node_limit : int
        Maximum number of value assignments tried.
    branch_rows : uint8 array
        Rows eligible for the tightest-row branching rule.  When none are
        flagged the rule is smallest domain, ties by ``static_score``.

    Returns
    -------
    status, x, nodes
    """
    n = len(lo0)
    nrow = len(b)
    lo = [int(v) for v in lo0]
    hi = [int(v) for v in hi0]
    indptr = [int(v) for v in indptr]
    indices = [int(v) for v in indices]
    coefs = [float(v) for v in coefs]
    b = [float(v) for v in b]
    tol = [float(v) for v in tol]
    cols = _columns(n, indptr, indices, coefs)

    minsum = [0.0] * nrow
    maxsum = [0.0] * nrow
    maxw = [0.0] * nrow
    eps = [0.0] * nrow
    free = [0] * nrow
    for r in range(nrow):
        scale = 0.0
        for p in range(indptr[r], indptr[r + 1]):
            i, a = indices[p], coefs[p]
            if a > 0:
                minsum[r] += a * lo[i]
                maxsum[r] += a * hi[i]
            else:
                minsum[r] += a * hi[i]
                maxsum[r] += a * lo[i]
            w = abs(a) * (hi[i] - lo[i])
            scale += w + abs(a) * abs(lo[i])
            maxw[r] = max(maxw[r], w)
            if lo[i] < hi[i]:
                free[r] += 1
        eps[r] = 1e-9 * max(1.0, scale)
    use_rows = [r for r in range(nrow) if branch_rows[r]]
    order = sorted(range(n), key=lambda i: (-float(static_score[i]), i))

    trail = []
    queue = []
    inq = [False] * nrow

    def set_bounds(i, nl, nh):
        trail.append((i, lo[i], hi[i]))
        ol, oh = lo[i], hi[i]
        for r, a in cols[i]:
            if a > 0:
                minsum[r] += a * (nl - ol)
                maxsum[r] += a * (nh - oh)
            else:
                minsum[r] += a * (nh - oh)
                maxsum[r] += a * (nl - ol)
            if nl == nh and ol < oh:
                free[r] -= 1
            if not inq[r]:
                inq[r] = True
                queue.append(r)
        lo[i], hi[i] = nl, nh

    def undo(mark):
        while len(trail) > mark:
            i, ol, oh = trail.pop()
            nl, nh = lo[i], hi[i]
            for r, a in cols[i]:
                if a > 0:
                    minsum[r] += a * (ol - nl)
                    maxsum[r] += a * (oh - nh)
                else:
                    minsum[r] += a * (oh - nh)
                    maxsum[r] += a * (ol - nl)
                if nl == nh and ol < oh:
                    free[r] += 1
            lo[i], hi[i] = ol, oh

    def clear_queue():
        for r in queue:
            inq[r] = False
        queue.clear()

    def propagate():
        while queue:
            r = queue.pop()
            inq[r] = False
            up = b[r] + tol[r] + eps[r]
            dn = b[r] - tol[r] - eps[r]
            if minsum[r] > up or maxsum[r] < dn:
                clear_queue()
                return False
            ga = up - minsum[r]
            gb = maxsum[r] - dn
            if ga >= maxw[r] and gb >= maxw[r]:
                continue
            for p in range(indptr[r], indptr[r + 1]):
                i = indices[p]
                if lo[i] == hi[i]:
                    continue
                a = coefs[p]
                if a > 0:
                    nh = min(hi[i], lo[i] + math.floor(ga / a))
                    nl = max(lo[i], hi[i] - math.floor(gb / a))
                elif a < 0:
                    nh = min(hi[i], lo[i] + math.floor(gb / -a))
                    nl = max(lo[i], hi[i] - math.floor(ga / -a))
                else:
                    continue
                if nl > nh:
                    clear_queue()
                    return False
                if nl != lo[i] or nh != hi[i]:
                    set_bounds(i, nl, nh)
        return True

    def select():
        if use_rows:
            best, best_free = -1, n + 1
            for r in use_rows:
                if 0 < free[r] < best_free:
                    best, best_free = r, free[r]
            if best >= 0:
                for p in range(indptr[best], indptr[best + 1]):
                    i = indices[p]
                    if lo[i] < hi[i]:
                        return i
        best, best_w = -1, None
        for i in order:
            w = hi[i] - lo[i]
            if w > 0 and (best_w is None or w < best_w):
                best, best_w = i, w
                if w == 1:
                    break
        return best

    def values(i):
        h = float(hint[i])
        vals = list(range(lo[i], hi[i] + 1))
        vals.sort(key=lambda v: (abs(v - h), v))
        return vals

    def verify():
        for r in range(nrow):
            s = math.fsum(coefs[p] * lo[indices[p]] for p in range(indptr[r], indptr[r + 1]))
            if abs(s - b[r]) > tol[r]:
                return False
        return True

    for r in range(nrow):
        inq[r] = True
        queue.append(r)
    if not propagate():
        return INFEASIBLE, np.array(lo, dtype=np.int64), 0

    nodes = 0
    frames = []
    choose = True
    while True:
        if choose:
            i = select()
            if i < 0:
                if verify():
                    return FEASIBLE, np.array(lo, dtype=np.int64), nodes
            else:
                frames.append([i, values(i), 0, len(trail)])
        choose = False
        while frames:
            f = frames[-1]
            undo(f[3])
            if f[2] == len(f[1]):
                frames.pop()
                continue
            v = f[1][f[2]]
            f[2] += 1
            nodes += 1
            if nodes > node_limit:
                return BUDGET, np.array(lo, dtype=np.int64), nodes - 1
            set_bounds(f[0], v, v)
            if propagate():
                choose = True
                break
        if not frames:
            return INFEASIBLE, np.array(lo, dtype=np.int64), nodes


# ---------------------------------------------------------------------------
# LLL reduction
# ---------------------------------------------------------------------------

def lll_reduce(basis, delta, time_limit):
    """Reduce the rows of ``basis`` in place style; return ``(B, U, status)``.

    Schnorr-Euchner floating LLL.  Inner products are taken in extended
    precision and the Gram-Schmidt row of the current index is rebuilt
    from the live vectors every time the index is visited.  ``U`` is the
    integer change of basis: ``B_out == U @ B_in`` up to rounding.
    """
    B = np.array(basis, dtype=np.longdouble)
    m = B.shape[0]
    U = np.eye(m, dtype=np.int64)
    if m == 0:
        return B.astype(np.float64), U, LLL_OK
    mu = np.zeros((m, m), dtype=np.longdouble)
    r = np.zeros((m, m), dtype=np.longdouble)
    bstar = np.zeros(m, dtype=np.longdouble)
    bstar[0] = B[0] @ B[0]
    scale0 = max(float(bstar[0]), 1.0)
    if bstar[0] <= 0:
        return B.astype(np.float64), U, LLL_DEPENDENT
    deadline = time.monotonic() + time_limit
    k = 1
    it = 0
    while k < m:
        it += 1
        if it % 64 == 0 and time.monotonic() > deadline:
            return B.astype(np.float64), U, LLL_TIMEOUT
        while True:
            for j in range(k):
                r[k, j] = B[k] @ B[j] - (mu[j, :j] @ r[k, :j] if j else 0)
                mu[k, j] = r[k, j] / bstar[j]
            big = False
            for j in range(k - 1, -1, -1):
                q = np.rint(mu[k, j])
                if q != 0:
                    if abs(q) > 2 ** 30:
                        big = True
                    B[k] -= q * B[j]
                    U[k] -= np.int64(q) * U[j]
                    mu[k, :j] -= q * mu[j, :j]
                    mu[k, j] -= q
            if not big:
                break
        # refresh r after reduction for the Lovász test
        for j in range(k):
            r[k, j] = mu[k, j] * bstar[j]
        bk = B[k] @ B[k] - sum(mu[k, j] * r[k, j] for j in range(k))
        if bk <= 1e-20 * max(scale0, float(B[k] @ B[k])):
            return B.astype(np.float64), U, LLL_DEPENDENT
        if bk >= (delta - mu[k, k - 1] ** 2) * bstar[k - 1]:
            bstar[k] = bk
            k += 1
        else:
            B[[k - 1, k]] = B[[k, k - 1]]
            U[[k - 1, k]] = U[[k, k - 1]]
            mu[[k - 1, k], :k - 1] = mu[[k, k - 1], :k - 1]
            r[[k - 1, k], :k - 1] = r[[k, k - 1], :k - 1]
            if k == 1:
                bstar[0] = B[0] @ B[0]
            k = max(k - 1, 1)
    return B.astype(np.float64), U, LLL_OK


# ---------------------------------------------------------------------------
# meet in the middle over binary fillings with known row and column sums
# ---------------------------------------------------------------------------

class _BudgetHit(Exception):
    pass


def _split_point(n1, n2, col_sums):
    """Cell index (column-major) balancing the two halves' column-only filling counts."""
    logs = [math.log(max(1, math.comb(n1, int(col_sums[c])))) for c in range(n2)]
    total = sum(logs)
    acc = 0.0
    for c in range(n2):
        if acc + logs[c] >= total / 2:
            frac = (total / 2 - acc) / logs[c] if logs[c] > 0 else 0
            return c * n1 + int(round(frac * n1))
        acc += logs[c]
    return n1 * n2


def _row_keys(caps, total):
    """All vectors ``u`` with ``0 <= u[m] <= caps[m]`` and ``sum(u) == total``."""
    n = len(caps)
    suffix = [0] * (n + 1)
    for m in range(n - 1, -1, -1):
        suffix[m] = suffix[m + 1] + caps[m]
    u = [0] * n

    def rec(m, left):
        if m == n:
            if left == 0:
                yield tuple(u)
            return
        lo = max(0, left - suffix[m + 1])
        for v in range(lo, min(caps[m], left) + 1):
            u[m] = v
            yield from rec(m + 1, left - v)

    yield from rec(0, total)


class MarginHalf:
    """One side of the split: a run of columns, each with the rows it owns.

    ``tables[j][k][mask]`` is the value of constraint row ``k`` when the
    rows in ``mask`` are set in the half's ``j``-th column.  ``subsets[j][c]``
    lists the masks inside ``avail[j]`` with ``c`` bits.  ``rem[j][m]``
    counts the columns ``j' >= j`` of this half owning row ``m``.
    """

    def __init__(self, n1, n2, columns, weights):
        self.n1 = n1
        self.cols = [c for c, _ in columns]
        self.avail = [a for _, a in columns]
        ncol = len(columns)
        nr = weights.shape[0]
        size = 1 << n1
        bits = ((np.arange(size)[:, None] >> np.arange(n1)) & 1).astype(np.float64)
        self.tables = np.zeros((ncol, nr, size))
        for j, c in enumerate(self.cols):
            w = weights[:, np.arange(n1) * n2 + c]
            self.tables[j] = w @ bits.T
        pc = bits.sum(axis=1).astype(int)
        self.subsets = []
        for a in self.avail:
            inside = [mask for mask in range(size) if mask & ~a == 0]
            by_count = [[] for _ in range(n1 + 1)]
            for mask in inside:
                by_count[pc[mask]].append(mask)
            self.subsets.append(by_count)
        self.rem = np.zeros((ncol + 1, n1), dtype=np.int64)
        for j in range(ncol - 1, -1, -1):
            self.rem[j] = self.rem[j + 1] + ((self.avail[j] >> np.arange(n1)) & 1)


def margin_plan(n1, n2, row_sums, col_sums, weights):
    """Split the grid into two halves and enumerate the join keys.

    Yields ``(left, right, keys)`` where ``keys`` iterates over tuples
    ``(row_need_left, col_need_left, row_need_right, col_need_right)``.
    Rows are the short side; callers transpose beforehand.
    """
    rs = [int(v) for v in row_sums]
    cs = [int(v) for v in col_sums]
    total = n1 * n2
    full = (1 << n1) - 1
    split = min(max(_split_point(n1, n2, cs), 1), total - 1)
    sc, sm = split // n1, split % n1
    low = (1 << sm) - 1
    lcols = [(c, full) for c in range(sc)] + ([(sc, low)] if sm else [])
    rcols = [(sc, full & ~low)] + [(c, full) for c in range(sc + 1, n2)]
    left = MarginHalf(n1, n2, lcols, weights)
    right = MarginHalf(n1, n2, rcols, weights)
    caps = [min(int(left.rem[0][m]), rs[m]) for m in range(n1)]
    rcap = [int(right.rem[0][m]) for m in range(n1)]
    base = sum(cs[:sc])

    def keys():
        zmax = min(cs[sc], sm)
        for z in range(zmax + 1):
            if cs[sc] - z > n1 - sm:
                continue
            cl = [cs[c] for c in range(sc)] + ([z] if sm else [])
            cr = [cs[sc] - z] + [cs[c] for c in range(sc + 1, n2)]
            for u in _row_keys(caps, base + z):
                rn = [rs[m] - u[m] for m in range(n1)]
                if any(rn[m] < 0 or rn[m] > rcap[m] for m in range(n1)):
                    continue
                yield list(u), cl, rn, cr

    return left, right, keys()


def _fill(half, row_need, col_need, out, limit, counter):
    """Enumerate fillings of ``half`` meeting the row and column needs exactly.

    Appends ``(values, column_masks)`` to ``out``.
    """
    n1 = half.n1
    ncol = len(half.avail)
    need = list(row_need)
    nr = half.tables.shape[1]
    chosen = [0] * ncol
    acc = [[0.0] * nr for _ in range(ncol + 1)]

    def rec(j):
        counter[0] += 1
        if counter[0] > limit:
            raise _BudgetHit
        avail = half.avail[j]
        if j == ncol - 1:
            mask = 0
            for m in range(n1):
                if need[m] > 1:
                    return
                if need[m] == 1:
                    mask |= 1 << m
            if mask & ~avail or bin(mask).count("1") != col_need[j]:
                return
            chosen[j] = mask
            out.append((tuple(acc[j][k] + half.tables[j, k, mask] for k in range(nr)), tuple(chosen)))
            return
        pos = 0
        forced = 0
        for m in range(n1):
            if need[m] > 0:
                pos |= 1 << m
                if need[m] == half.rem[j][m]:
                    forced |= 1 << m
        forced &= avail
        for mask in half.subsets[j][col_need[j]]:
            if mask & ~pos or forced & ~mask:
                continue
            for m in range(n1):
                if mask >> m & 1:
                    need[m] -= 1
            for k in range(nr):
                acc[j + 1][k] = acc[j][k] + half.tables[j, k, mask]
            chosen[j] = mask
            rec(j + 1)
            for m in range(n1):
                if mask >> m & 1:
                    need[m] += 1

    if ncol:
        rec(0)


def _masks_to_bits(n1, n2, half, masks, bits):
    for j, c in enumerate(half.cols):
        for m in range(n1):
            if masks[j] >> m & 1:
                bits[m * n2 + c] = 1


def margin_mitm(n1, n2, row_sums, col_sums, weights, target, tol, limit, early_tol=0.0,
                deadline=math.inf):
    """Binary ``n1 x n2`` matrix with given margins and ``weights @ x == target``.

    Parameters
    ----------
    weights : float64 array, shape (R, n1*n2)
        Real constraint rows over row-major flattened cells.  Row 0 is
        joined by sorting; every row is checked on the joined candidates.
    target, tol : float64 arrays of length R
    limit : int
        Cap on enumeration steps over both halves.
    early_tol : float
        A candidate whose largest deviation is at most this ends the search
        at once; otherwise the best candidate within ``tol`` is returned
        after the whole space is seen.
    deadline : float
        ``time.perf_counter()`` value after which no new block of partial
        row sums is started.

    Returns
    -------
    status, bits (n1*n2 uint8), work
    """
    weights = np.asarray(weights, dtype=np.float64)
    nr = weights.shape[0]
    left, right, keys = margin_plan(n1, n2, row_sums, col_sums, weights)
    if max(len(left.avail), len(right.avail)) > 15:
        raise ValueError("margin meet-in-the-middle supports at most 15 columns per half")
    counter = [0]
    bits = np.zeros(n1 * n2, dtype=np.uint8)
    best = None
    try:
        for un, cl, rn, cr in keys:
            if time.perf_counter() > deadline:
                raise _BudgetHit
            lefts = []
            _fill(left, un, cl, lefts, limit, counter)
            if not lefts:
                continue
            lefts.sort(key=lambda e: e[0][0])
            lkeys = [e[0][0] for e in lefts]
            rights = []
            _fill(right, rn, cr, rights, limit, counter)
            for vals, rmasks in rights:
                need0 = target[0] - vals[0]
                a = bisect.bisect_left(lkeys, need0 - tol[0])
                for j in range(a, len(lefts)):
                    lv, lmasks = lefts[j]
                    if lv[0] > need0 + tol[0]:
                        break
                    devs = [abs(lv[k] + vals[k] - target[k]) for k in range(nr)]
                    if all(devs[k] <= tol[k] for k in range(nr)):
                        dev = max(devs)
                        if best is None or dev < best[0]:
                            best = (dev, lmasks, rmasks)
                        if dev <= early_tol:
                            raise _Found
    except _BudgetHit:
        if best is None:
            return BUDGET, bits, counter[0]
    except _Found:
        pass
    if best is None:
        return INFEASIBLE, bits, counter[0]
    _masks_to_bits(n1, n2, left, best[1], bits)
    _masks_to_bits(n1, n2, right, best[2], bits)
    return FEASIBLE, bits, counter[0]


class _Found(Exception):
    pass


# ---------------------------------------------------------------------------
# exhaustive matching over all binary vectors
# ---------------------------------------------------------------------------

def gray_match(wre, wim, tre, tim, tol, max_hits):
    """All codes ``x`` (bit ``t`` = cell ``t``) with ``|W x - target|_inf <= tol``.

    ``wre``/``wim`` have shape ``(B, T)``.  Enumerates ``2**T`` vectors in
    chunks with numpy; returns the matching codes in increasing order.
    """
    wre = np.asarray(wre, dtype=np.float64)
    wim = np.asarray(wim, dtype=np.float64)
    nb, t = wre.shape
    hits = []
    chunk_bits = min(t, 16)
    low = np.arange(1 << chunk_bits, dtype=np.int64)
    low_bits = ((low[:, None] >> np.arange(chunk_bits)) & 1).astype(np.float64)
    base_re = low_bits @ wre[:, :chunk_bits].T
    base_im = low_bits @ wim[:, :chunk_bits].T
    for high in range(1 << (t - chunk_bits)):
        hb = np.array([(high >> i) & 1 for i in range(t - chunk_bits)], dtype=np.float64)
        off_re = wre[:, chunk_bits:] @ hb if t > chunk_bits else np.zeros(nb)
        off_im = wim[:, chunk_bits:] @ hb if t > chunk_bits else np.zeros(nb)
        dev = np.maximum(np.abs(base_re + off_re - tre), np.abs(base_im + off_im - tim))
        ok = np.nonzero(dev.max(axis=1) <= tol)[0]
        for i in ok:
            hits.append((high << chunk_bits) | int(i))
            if len(hits) >= max_hits:
                return np.array(hits, dtype=np.int64)
    return np.array(hits, dtype=np.int64)
