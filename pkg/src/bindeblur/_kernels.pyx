# cython: boundscheck=False, wraparound=False, cdivision=True, nonecheck=False
"""Compiled kernels: propagation search, LLL, margin meet-in-the-middle, Gray-code matching.

Signatures and return conventions match ``bindeblur._fallback``.
"""
import time

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, llround
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memset, memcpy
from libc.stdint cimport int64_t, uint64_t, uint16_t

cnp.import_array()

FEASIBLE, INFEASIBLE, BUDGET = 0, 1, 2
LLL_OK, LLL_TIMEOUT, LLL_DEPENDENT = 0, 1, 2

BACKEND = "cython"


# ---------------------------------------------------------------------------
# depth-first search with interval propagation
# ---------------------------------------------------------------------------

cdef struct Search:
    int n
    int nrow
    int64_t *lo
    int64_t *hi
    int64_t *indptr
    int64_t *indices
    double *coefs
    int64_t *cptr
    int64_t *crow
    double *ccoef
    double *b
    double *tol
    double *eps
    double *maxw
    double *minsum
    double *maxsum
    int64_t *free_cnt
    int64_t *queue
    int qlen
    signed char *inq
    int64_t *trail_var
    int64_t *trail_lo
    int64_t *trail_hi
    int64_t trail_len
    int64_t trail_cap


cdef int _trail_push(Search *s, int64_t i) noexcept nogil:
    cdef int64_t cap
    if s.trail_len == s.trail_cap:
        cap = s.trail_cap * 2
        s.trail_var = <int64_t *> realloc(s.trail_var, cap * sizeof(int64_t))
        s.trail_lo = <int64_t *> realloc(s.trail_lo, cap * sizeof(int64_t))
        s.trail_hi = <int64_t *> realloc(s.trail_hi, cap * sizeof(int64_t))
        if s.trail_var == NULL or s.trail_lo == NULL or s.trail_hi == NULL:
            return -1
        s.trail_cap = cap
    s.trail_var[s.trail_len] = i
    s.trail_lo[s.trail_len] = s.lo[i]
    s.trail_hi[s.trail_len] = s.hi[i]
    s.trail_len += 1
    return 0


cdef int _set_bounds(Search *s, int64_t i, int64_t nl, int64_t nh) noexcept nogil:
    cdef int64_t ol = s.lo[i], oh = s.hi[i], p, r
    cdef double a
    if _trail_push(s, i) < 0:
        return -1
    for p in range(s.cptr[i], s.cptr[i + 1]):
        r = s.crow[p]
        a = s.ccoef[p]
        if a > 0:
            s.minsum[r] += a * (nl - ol)
            s.maxsum[r] += a * (nh - oh)
        else:
            s.minsum[r] += a * (nh - oh)
            s.maxsum[r] += a * (nl - ol)
        if nl == nh and ol < oh:
            s.free_cnt[r] -= 1
        if not s.inq[r]:
            s.inq[r] = 1
            s.queue[s.qlen] = r
            s.qlen += 1
    s.lo[i] = nl
    s.hi[i] = nh
    return 0


cdef void _undo(Search *s, int64_t mark) noexcept nogil:
    cdef int64_t i, ol, oh, nl, nh, p, r
    cdef double a
    while s.trail_len > mark:
        s.trail_len -= 1
        i = s.trail_var[s.trail_len]
        ol = s.trail_lo[s.trail_len]
        oh = s.trail_hi[s.trail_len]
        nl = s.lo[i]
        nh = s.hi[i]
        for p in range(s.cptr[i], s.cptr[i + 1]):
            r = s.crow[p]
            a = s.ccoef[p]
            if a > 0:
                s.minsum[r] += a * (ol - nl)
                s.maxsum[r] += a * (oh - nh)
            else:
                s.minsum[r] += a * (oh - nh)
                s.maxsum[r] += a * (ol - nl)
            if nl == nh and ol < oh:
                s.free_cnt[r] += 1
        s.lo[i] = ol
        s.hi[i] = oh


cdef void _clear_queue(Search *s) noexcept nogil:
    cdef int q
    for q in range(s.qlen):
        s.inq[s.queue[q]] = 0
    s.qlen = 0


cdef int _propagate(Search *s) noexcept nogil:
    """1 when consistent, 0 on conflict, -1 on allocation failure."""
    cdef int64_t r, p, i, nl, nh
    cdef double up, dn, ga, gb, a
    while s.qlen > 0:
        s.qlen -= 1
        r = s.queue[s.qlen]
        s.inq[r] = 0
        up = s.b[r] + s.tol[r] + s.eps[r]
        dn = s.b[r] - s.tol[r] - s.eps[r]
        if s.minsum[r] > up or s.maxsum[r] < dn:
            _clear_queue(s)
            return 0
        ga = up - s.minsum[r]
        gb = s.maxsum[r] - dn
        if ga >= s.maxw[r] and gb >= s.maxw[r]:
            continue
        for p in range(s.indptr[r], s.indptr[r + 1]):
            i = s.indices[p]
            if s.lo[i] == s.hi[i]:
                continue
            a = s.coefs[p]
            if a > 0:
                nh = s.lo[i] + <int64_t> floor(ga / a)
                nl = s.hi[i] - <int64_t> floor(gb / a)
            elif a < 0:
                nh = s.lo[i] + <int64_t> floor(gb / -a)
                nl = s.hi[i] - <int64_t> floor(ga / -a)
            else:
                continue
            if nh > s.hi[i]:
                nh = s.hi[i]
            if nl < s.lo[i]:
                nl = s.lo[i]
            if nl > nh:
                _clear_queue(s)
                return 0
            if nl != s.lo[i] or nh != s.hi[i]:
                if _set_bounds(s, i, nl, nh) < 0:
                    return -1
    return 1


cdef int _verify(Search *s) noexcept nogil:
    cdef int64_t r, p
    cdef long double acc
    for r in range(s.nrow):
        acc = 0
        for p in range(s.indptr[r], s.indptr[r + 1]):
            acc += <long double> s.coefs[p] * s.lo[s.indices[p]]
        if fabs(<double> (acc - s.b[r])) > s.tol[r]:
            return 0
    return 1



def _c(x, dtype=None):
    """Contiguous writable array (memoryviews reject read-only buffers)."""
    a = np.ascontiguousarray(x, dtype=dtype)
    return a if a.flags.writeable else a.copy()

def dfs_solve(lo0, hi0, indptr, indices, coefs, b, tol, hint, static_score,
              long long node_limit, branch_rows):
    cdef cnp.int64_t[::1] lo_v = _c(lo0, dtype=np.int64).copy()
    cdef cnp.int64_t[::1] hi_v = _c(hi0, dtype=np.int64).copy()
    cdef cnp.int64_t[::1] ip_v = _c(indptr, dtype=np.int64)
    cdef cnp.int64_t[::1] ix_v = _c(indices, dtype=np.int64)
    cdef double[::1] cf_v = _c(coefs, dtype=np.float64)
    cdef double[::1] b_v = _c(b, dtype=np.float64)
    cdef double[::1] tol_v = _c(tol, dtype=np.float64)
    cdef double[::1] hint_v = _c(hint, dtype=np.float64)
    cdef int n = lo_v.shape[0]
    cdef int nrow = b_v.shape[0]
    cdef int64_t nnz = ix_v.shape[0]

    # column structure
    order_csr = np.argsort(np.asarray(ix_v), kind="stable")
    rows_of_p = np.repeat(np.arange(nrow, dtype=np.int64), np.diff(np.asarray(ip_v)))
    cdef cnp.int64_t[::1] cptr_v = np.concatenate(
        [[0], np.cumsum(np.bincount(np.asarray(ix_v), minlength=n))]).astype(np.int64)
    cdef cnp.int64_t[::1] crow_v = _c(rows_of_p[order_csr], dtype=np.int64)
    cdef double[::1] ccoef_v = _c(np.asarray(cf_v)[order_csr], dtype=np.float64)

    cdef double[::1] eps_v = np.zeros(nrow)
    cdef double[::1] maxw_v = np.zeros(nrow)
    cdef double[::1] mins_v = np.zeros(nrow)
    cdef double[::1] maxs_v = np.zeros(nrow)
    cdef cnp.int64_t[::1] free_v = np.zeros(nrow, dtype=np.int64)
    cdef cnp.int64_t[::1] queue_v = np.zeros(nrow + 1, dtype=np.int64)
    cdef signed char[::1] inq_v = np.zeros(nrow + 1, dtype=np.int8)

    use_rows_np = np.nonzero(np.asarray(branch_rows))[0].astype(np.int64)
    cdef cnp.int64_t[::1] use_rows = _c(use_rows_np)
    cdef int nuse = use_rows.shape[0]
    order_np = np.lexsort((np.arange(n), -np.asarray(static_score, dtype=np.float64))).astype(np.int64)
    cdef cnp.int64_t[::1] order = _c(order_np)

    cdef int64_t r, p, i, w, best, bestw, mark, v, k
    cdef double a, scale
    for r in range(nrow):
        scale = 0
        for p in range(ip_v[r], ip_v[r + 1]):
            i = ix_v[p]
            a = cf_v[p]
            if a > 0:
                mins_v[r] += a * lo_v[i]
                maxs_v[r] += a * hi_v[i]
            else:
                mins_v[r] += a * hi_v[i]
                maxs_v[r] += a * lo_v[i]
            w = hi_v[i] - lo_v[i]
            scale += fabs(a) * w + fabs(a) * (lo_v[i] if lo_v[i] >= 0 else -lo_v[i])
            if fabs(a) * w > maxw_v[r]:
                maxw_v[r] = fabs(a) * w
            if w > 0:
                free_v[r] += 1
        eps_v[r] = 1e-9 * (scale if scale > 1.0 else 1.0)

    cdef Search s
    s.n = n
    s.nrow = nrow
    s.lo = &lo_v[0] if n > 0 else NULL
    s.hi = &hi_v[0] if n > 0 else NULL
    s.indptr = &ip_v[0]
    s.indices = &ix_v[0] if nnz > 0 else NULL
    s.coefs = &cf_v[0] if nnz > 0 else NULL
    s.cptr = &cptr_v[0]
    s.crow = &crow_v[0] if nnz > 0 else NULL
    s.ccoef = &ccoef_v[0] if nnz > 0 else NULL
    s.b = &b_v[0] if nrow > 0 else NULL
    s.tol = &tol_v[0] if nrow > 0 else NULL
    s.eps = &eps_v[0] if nrow > 0 else NULL
    s.maxw = &maxw_v[0] if nrow > 0 else NULL
    s.minsum = &mins_v[0] if nrow > 0 else NULL
    s.maxsum = &maxs_v[0] if nrow > 0 else NULL
    s.free_cnt = &free_v[0] if nrow > 0 else NULL
    s.queue = &queue_v[0]
    s.inq = &inq_v[0]
    s.qlen = 0
    s.trail_cap = 1024
    s.trail_len = 0
    s.trail_var = <int64_t *> malloc(s.trail_cap * sizeof(int64_t))
    s.trail_lo = <int64_t *> malloc(s.trail_cap * sizeof(int64_t))
    s.trail_hi = <int64_t *> malloc(s.trail_cap * sizeof(int64_t))

    # frame stack: variable, list of values (stored in a flat pool), position, trail mark
    cdef int64_t *fvar = <int64_t *> malloc((n + 1) * sizeof(int64_t))
    cdef int64_t *fpos = <int64_t *> malloc((n + 1) * sizeof(int64_t))
    cdef int64_t *fcnt = <int64_t *> malloc((n + 1) * sizeof(int64_t))
    cdef int64_t *fmark = <int64_t *> malloc((n + 1) * sizeof(int64_t))
    cdef int64_t *fbase = <int64_t *> malloc((n + 1) * sizeof(int64_t))
    cdef int64_t pool_cap = 1024
    cdef int64_t *pool = <int64_t *> malloc(pool_cap * sizeof(int64_t))
    cdef int64_t pool_len = 0
    cdef int depth = 0
    cdef long long nodes = 0
    cdef int status = -1
    cdef int choose = 1
    cdef int rc
    cdef int64_t cnt, j, lo_i, hi_i, t, tmp
    cdef double h, d1, d2

    try:
        for r in range(nrow):
            s.inq[r] = 1
            s.queue[s.qlen] = r
            s.qlen += 1
        rc = _propagate(&s)
        if rc < 0:
            raise MemoryError()
        if rc == 0:
            status = INFEASIBLE
        while status < 0:
            if choose:
                # branching variable
                best = -1
                if nuse > 0:
                    bestw = n + 1
                    for k in range(nuse):
                        r = use_rows[k]
                        if 0 < s.free_cnt[r] < bestw:
                            bestw = s.free_cnt[r]
                            best = r
                    if best >= 0:
                        r = best
                        best = -1
                        for p in range(s.indptr[r], s.indptr[r + 1]):
                            i = s.indices[p]
                            if s.lo[i] < s.hi[i]:
                                best = i
                                break
                if best < 0:
                    bestw = -1
                    for k in range(n):
                        i = order[k]
                        w = s.hi[i] - s.lo[i]
                        if w > 0 and (bestw < 0 or w < bestw):
                            best = i
                            bestw = w
                            if w == 1:
                                break
                if best < 0:
                    if _verify(&s):
                        status = FEASIBLE
                        break
                else:
                    i = best
                    lo_i = s.lo[i]
                    hi_i = s.hi[i]
                    cnt = hi_i - lo_i + 1
                    if pool_len + cnt > pool_cap:
                        while pool_len + cnt > pool_cap:
                            pool_cap *= 2
                        pool = <int64_t *> realloc(pool, pool_cap * sizeof(int64_t))
                        if pool == NULL:
                            raise MemoryError()
                    # values ordered by distance to the hint, ties toward the smaller value
                    h = hint_v[i]
                    for j in range(cnt):
                        pool[pool_len + j] = lo_i + j
                    for j in range(1, cnt):
                        tmp = pool[pool_len + j]
                        t = j - 1
                        d1 = fabs(tmp - h)
                        while t >= 0:
                            d2 = fabs(pool[pool_len + t] - h)
                            if d2 > d1 or (d2 == d1 and pool[pool_len + t] > tmp):
                                pool[pool_len + t + 1] = pool[pool_len + t]
                                t -= 1
                            else:
                                break
                        pool[pool_len + t + 1] = tmp
                    fvar[depth] = i
                    fpos[depth] = 0
                    fcnt[depth] = cnt
                    fbase[depth] = pool_len
                    fmark[depth] = s.trail_len
                    pool_len += cnt
                    depth += 1
            choose = 0
            while depth > 0:
                k = depth - 1
                _undo(&s, fmark[k])
                if fpos[k] == fcnt[k]:
                    pool_len = fbase[k]
                    depth -= 1
                    continue
                v = pool[fbase[k] + fpos[k]]
                fpos[k] += 1
                nodes += 1
                if nodes > node_limit:
                    nodes -= 1
                    status = BUDGET
                    break
                if _set_bounds(&s, fvar[k], v, v) < 0:
                    raise MemoryError()
                rc = _propagate(&s)
                if rc < 0:
                    raise MemoryError()
                if rc == 1:
                    choose = 1
                    break
            if status < 0 and depth == 0 and not choose:
                status = INFEASIBLE
        x = np.asarray(lo_v).copy()
    finally:
        free(s.trail_var)
        free(s.trail_lo)
        free(s.trail_hi)
        free(fvar)
        free(fpos)
        free(fcnt)
        free(fmark)
        free(fbase)
        free(pool)
    return status, x, nodes


# ---------------------------------------------------------------------------
# LLL reduction
# ---------------------------------------------------------------------------

cdef long double _dot(double *u, double *v, int d) noexcept nogil:
    cdef long double acc = 0
    cdef int i
    for i in range(d):
        acc += <long double> u[i] * v[i]
    return acc


def lll_reduce(basis, double delta, double time_limit):
    B_np = np.array(basis, dtype=np.float64, order="C")
    cdef int m = B_np.shape[0]
    U_np = np.eye(m, dtype=np.int64)
    if m == 0:
        return B_np, U_np, LLL_OK
    cdef int d = B_np.shape[1]
    cdef double[:, ::1] B = B_np
    cdef cnp.int64_t[:, ::1] U = U_np
    cdef long double *mu = <long double *> malloc(m * m * sizeof(long double))
    cdef long double *rr = <long double *> malloc(m * m * sizeof(long double))
    cdef long double *bstar = <long double *> malloc(m * sizeof(long double))
    cdef double *tmpd = <double *> malloc(d * sizeof(double))
    cdef int64_t *tmpi = <int64_t *> malloc(m * sizeof(int64_t))
    cdef int k, j, i, big, status = LLL_OK
    cdef long double q, acc, bk, bkk, scale0
    cdef int64_t qi
    cdef long long it = 0
    cdef double deadline = time.monotonic() + time_limit
    memset(mu, 0, m * m * sizeof(long double))
    memset(rr, 0, m * m * sizeof(long double))
    try:
        bstar[0] = _dot(&B[0, 0], &B[0, 0], d)
        scale0 = bstar[0] if bstar[0] > 1 else 1
        if bstar[0] <= 0:
            status = LLL_DEPENDENT
        k = 1
        while status == LLL_OK and k < m:
            it += 1
            if it % 64 == 0 and time.monotonic() > deadline:
                status = LLL_TIMEOUT
                break
            while True:
                for j in range(k):
                    acc = _dot(&B[k, 0], &B[j, 0], d)
                    for i in range(j):
                        acc -= mu[j * m + i] * rr[k * m + i]
                    rr[k * m + j] = acc
                    mu[k * m + j] = acc / bstar[j]
                big = 0
                for j in range(k - 1, -1, -1):
                    q = mu[k * m + j]
                    q = <long double> llround(<double> q)
                    if q != 0:
                        if q > 1073741824.0 or q < -1073741824.0:
                            big = 1
                        qi = <int64_t> q
                        for i in range(d):
                            B[k, i] = B[k, i] - <double> q * B[j, i]
                        for i in range(m):
                            U[k, i] -= qi * U[j, i]
                        for i in range(j):
                            mu[k * m + i] -= q * mu[j * m + i]
                        mu[k * m + j] -= q
                if not big:
                    break
            acc = 0
            for j in range(k):
                rr[k * m + j] = mu[k * m + j] * bstar[j]
                acc += mu[k * m + j] * rr[k * m + j]
            bkk = _dot(&B[k, 0], &B[k, 0], d)
            bk = bkk - acc
            if bk <= 1e-20 * (scale0 if scale0 > bkk else bkk):
                status = LLL_DEPENDENT
                break
            if bk >= (delta - mu[k * m + k - 1] * mu[k * m + k - 1]) * bstar[k - 1]:
                bstar[k] = bk
                k += 1
            else:
                memcpy(tmpd, &B[k, 0], d * sizeof(double))
                memcpy(&B[k, 0], &B[k - 1, 0], d * sizeof(double))
                memcpy(&B[k - 1, 0], tmpd, d * sizeof(double))
                memcpy(tmpi, &U[k, 0], m * sizeof(int64_t))
                memcpy(&U[k, 0], &U[k - 1, 0], m * sizeof(int64_t))
                memcpy(&U[k - 1, 0], tmpi, m * sizeof(int64_t))
                for i in range(k - 1):
                    acc = mu[k * m + i]
                    mu[k * m + i] = mu[(k - 1) * m + i]
                    mu[(k - 1) * m + i] = acc
                    acc = rr[k * m + i]
                    rr[k * m + i] = rr[(k - 1) * m + i]
                    rr[(k - 1) * m + i] = acc
                if k == 1:
                    bstar[0] = _dot(&B[0, 0], &B[0, 0], d)
                k = k - 1 if k > 1 else 1
    finally:
        free(mu)
        free(rr)
        free(bstar)
        free(tmpd)
        free(tmpi)
    return B_np, U_np, status


# ---------------------------------------------------------------------------
# meet in the middle over binary fillings with known row and column sums
# ---------------------------------------------------------------------------

cdef struct CHalf:
    int n1
    int ncol
    int nr
    int size
    int *avail
    double *tables      # ncol x nr x size
    int *sub_off        # size*(n1+1)+1 offsets into sub_list, by (free mask, count)
    int *sub_list       # submasks of each free mask grouped by popcount
    uint64_t *rem       # (ncol+1) packed counts, 4 bits per row
    uint64_t *spread    # size: row mask -> one per nibble
    uint64_t *need      # (ncol+1) packed needs per depth
    uint64_t ones
    int *col_need
    int *popc
    double *acc         # (ncol+1) x nr, running sums per depth
    int *chosen
    double *vals        # cap x nr
    uint16_t *masks     # cap x ncol
    int64_t count
    int64_t cap
    long long work
    long long limit
    int overflow


cdef unsigned char _C16[65536]


cdef void _init_c16() noexcept nogil:
    cdef int x
    for x in range(65536):
        _C16[x] = (x & 1) | ((x >> 3) & 2) | ((x >> 6) & 4) | ((x >> 9) & 8)


_init_c16()


cdef inline int _compact(uint64_t x) noexcept nogil:
    """Bits 0, 4, 8, ... of ``x`` gathered into a row mask."""
    return (_C16[x & 0xFFFF] | (_C16[(x >> 16) & 0xFFFF] << 4)
            | (_C16[(x >> 32) & 0xFFFF] << 8) | (_C16[(x >> 48) & 0xFFFF] << 12))


cdef inline uint64_t _nonzero(uint64_t x, uint64_t ones) noexcept nogil:
    return (x | (x >> 1) | (x >> 2) | (x >> 3)) & ones


cdef int _cstore(CHalf *h) noexcept nogil:
    cdef int64_t cap
    cdef int k
    if h.count == h.cap:
        cap = h.cap * 2 if h.cap > 0 else 4096
        h.vals = <double *> realloc(h.vals, cap * h.nr * sizeof(double))
        h.masks = <uint16_t *> realloc(h.masks, cap * h.ncol * sizeof(uint16_t))
        if h.vals == NULL or h.masks == NULL:
            return -1
        h.cap = cap
    for k in range(h.nr):
        h.vals[h.count * h.nr + k] = h.acc[h.ncol * h.nr + k]
    for k in range(h.ncol):
        h.masks[h.count * h.ncol + k] = <uint16_t> h.chosen[k]
    h.count += 1
    return 0


cdef int _cfill(CHalf *h, int j) noexcept nogil:
    cdef int k, mask, pos, forced, avail, idx, rc, free_rows, extra
    cdef uint64_t need = h.need[j]
    cdef double *tab = h.tables + j * h.nr * h.size
    cdef double *acc0 = h.acc + j * h.nr
    cdef double *acc1 = h.acc + (j + 1) * h.nr
    h.work += 1
    if h.work > h.limit:
        h.overflow = 1
        return 1
    avail = h.avail[j]
    if j == h.ncol - 1:
        if need & (h.ones * 14):
            return 0
        mask = _compact(need)
        if (mask & ~avail) or h.popc[mask] != h.col_need[j]:
            return 0
        h.chosen[j] = mask
        for k in range(h.nr):
            acc1[k] = acc0[k] + tab[k * h.size + mask]
        return _cstore(h)
    pos = _compact(_nonzero(need, h.ones))
    forced = _compact(h.ones & ~_nonzero(h.rem[j] - need, h.ones)) & pos & avail
    free_rows = pos & avail & ~forced
    extra = h.col_need[j] - h.popc[forced]
    if extra < 0:
        return 0
    for idx in range(h.sub_off[free_rows * (h.n1 + 1) + extra],
                     h.sub_off[free_rows * (h.n1 + 1) + extra + 1]):
        mask = forced | h.sub_list[idx]
        h.need[j + 1] = need - h.spread[mask]
        for k in range(h.nr):
            acc1[k] = acc0[k] + tab[k * h.size + mask]
        h.chosen[j] = mask
        rc = _cfill(h, j + 1)
        if rc:
            return rc
    return 0


cdef void _chalf_init(CHalf *h, object half, long long limit):
    cdef int j, c, k, t, m, n1 = half.n1, ncol = len(half.avail)
    cdef int size = 1 << n1
    cdef uint64_t packed
    tables = _c(half.tables, dtype=np.float64)
    h.n1 = n1
    h.ncol = ncol
    h.nr = tables.shape[1]
    h.size = size
    h.avail = <int *> malloc((ncol + 1) * sizeof(int))
    h.tables = <double *> malloc((tables.size + 1) * sizeof(double))
    h.sub_off = <int *> malloc((size * (n1 + 1) + 1) * sizeof(int))
    h.rem = <uint64_t *> malloc((ncol + 1) * sizeof(uint64_t))
    h.spread = <uint64_t *> malloc(size * sizeof(uint64_t))
    h.need = <uint64_t *> malloc((ncol + 1) * sizeof(uint64_t))
    h.col_need = <int *> malloc((ncol + 1) * sizeof(int))
    h.popc = <int *> malloc(size * sizeof(int))
    h.acc = <double *> malloc(((ncol + 1) * h.nr + 1) * sizeof(double))
    h.chosen = <int *> malloc((ncol + 1) * sizeof(int))
    flat = tables.ravel()
    for t in range(flat.shape[0]):
        h.tables[t] = flat[t]
    h.ones = 0
    for m in range(n1):
        h.ones |= (<uint64_t> 1) << (4 * m)
    for t in range(size):
        packed = 0
        c = 0
        for m in range(n1):
            if (t >> m) & 1:
                packed |= (<uint64_t> 1) << (4 * m)
                c += 1
        h.spread[t] = packed
        h.popc[t] = c
    for j in range(ncol):
        h.avail[j] = half.avail[j]
        h.chosen[j] = 0
    rem = half.rem
    for j in range(ncol + 1):
        packed = 0
        for m in range(n1):
            packed |= (<uint64_t> rem[j][m]) << (4 * m)
        h.rem[j] = packed
    t = 0
    for c in range(size):
        for k in range(n1 + 1):
            h.sub_off[c * (n1 + 1) + k] = t
            if h.popc[c] >= k:
                t += _binom(h.popc[c], k)
    h.sub_off[size * (n1 + 1)] = t
    h.sub_list = <int *> malloc((t + 1) * sizeof(int))
    cdef int *fill_pos = <int *> malloc((n1 + 1) * sizeof(int))
    cdef int sub
    for c in range(size):
        for k in range(n1 + 1):
            fill_pos[k] = h.sub_off[c * (n1 + 1) + k]
        sub = c
        while True:
            k = h.popc[sub]
            h.sub_list[fill_pos[k]] = sub
            fill_pos[k] += 1
            if sub == 0:
                break
            sub = (sub - 1) & c
    free(fill_pos)
    for k in range((ncol + 1) * h.nr):
        h.acc[k] = 0
    h.vals = NULL
    h.masks = NULL
    h.count = 0
    h.cap = 0
    h.work = 0
    h.limit = limit
    h.overflow = 0


cdef int _binom(int n, int k) noexcept nogil:
    cdef int64_t r = 1
    cdef int i
    for i in range(k):
        r = r * (n - i) // (i + 1)
    return <int> r


cdef void _chalf_free(CHalf *h):
    free(h.avail)
    free(h.tables)
    free(h.sub_off)
    free(h.sub_list)
    free(h.rem)
    free(h.spread)
    free(h.need)
    free(h.col_need)
    free(h.popc)
    free(h.acc)
    free(h.chosen)
    free(h.vals)
    free(h.masks)


def margin_mitm(int n1, int n2, row_sums, col_sums, weights, target, tol, long long limit,
                double early_tol=0.0, double deadline=1e300):
    from bindeblur._fallback import margin_plan
    W = _c(weights, dtype=np.float64)
    cdef int nr = W.shape[0]
    cdef double[::1] tg = _c(target, dtype=np.float64)
    cdef double[::1] tl = _c(tol, dtype=np.float64)
    if n1 > 13:
        raise ValueError("margin meet-in-the-middle needs at most 13 rows; transpose first")
    left, right, keys = margin_plan(n1, n2, row_sums, col_sums, W)
    if max(len(left.avail), len(right.avail)) > 15:
        raise ValueError("margin meet-in-the-middle supports at most 15 columns per half")
    cdef CHalf L, R
    _chalf_init(&L, left, limit)
    _chalf_init(&R, right, limit)
    cdef int m, c, k, ok
    cdef int64_t j, a, lo_i, hi_i, mid, e, hit_l = -1, hit_r = -1
    cdef double need0, dv, dev, best_dev = 1e300
    cdef int64_t *srt = NULL
    cdef int64_t *start = NULL
    cdef int64_t srt_cap = 0, nb, bi
    cdef double kmin, kmax, width
    cdef int status = INFEASIBLE
    lmasks = rmasks = None
    try:
        for un, cl, rn, cr in keys:
            if time.perf_counter() > deadline:
                if status != FEASIBLE:
                    status = BUDGET
                break
            L.need[0] = 0
            R.need[0] = 0
            for m in range(n1):
                L.need[0] |= (<uint64_t> un[m]) << (4 * m)
                R.need[0] |= (<uint64_t> rn[m]) << (4 * m)
            for c in range(L.ncol):
                L.col_need[c] = cl[c]
            for c in range(R.ncol):
                R.col_need[c] = cr[c]
            L.count = 0
            if _cfill(&L, 0) < 0:
                raise MemoryError()
            if L.overflow:
                if status != FEASIBLE:
                    status = BUDGET
                break
            if L.count == 0:
                continue
            # bucket index on the first constraint value (counting sort)
            kmin = L.vals[0]
            kmax = L.vals[0]
            for j in range(1, L.count):
                dv = L.vals[j * nr]
                if dv < kmin:
                    kmin = dv
                if dv > kmax:
                    kmax = dv
            nb = L.count
            width = (kmax - kmin) / nb
            if width <= 0:
                width = 1.0
            if L.count + nb + 2 > srt_cap:
                srt_cap = 2 * (L.count + nb + 2)
                free(srt)
                free(start)
                srt = <int64_t *> malloc(srt_cap * sizeof(int64_t))
                start = <int64_t *> malloc(srt_cap * sizeof(int64_t))
                if srt == NULL or start == NULL:
                    raise MemoryError()
            memset(start, 0, (nb + 2) * sizeof(int64_t))
            for j in range(L.count):
                bi = <int64_t> ((L.vals[j * nr] - kmin) / width)
                if bi >= nb:
                    bi = nb - 1
                start[bi + 1] += 1
            for j in range(nb):
                start[j + 1] += start[j]
            for j in range(L.count):
                bi = <int64_t> ((L.vals[j * nr] - kmin) / width)
                if bi >= nb:
                    bi = nb - 1
                srt[start[bi]] = j
                start[bi] += 1
            # start[b] now holds the end of bucket b; shift back to get the starts
            for j in range(nb, 0, -1):
                start[j] = start[j - 1]
            start[0] = 0
            R.count = 0
            R.limit = limit - L.work
            if _cfill(&R, 0) < 0:
                raise MemoryError()
            if R.overflow:
                if status != FEASIBLE:
                    status = BUDGET
                break
            L.limit = limit - R.work
            for e in range(R.count):
                need0 = tg[0] - R.vals[e * nr]
                if need0 + tl[0] < kmin or need0 - tl[0] > kmax:
                    continue
                dv = (need0 - tl[0] - kmin) / width
                lo_i = <int64_t> dv if dv > 0 else 0
                dv = (need0 + tl[0] - kmin) / width
                hi_i = <int64_t> dv if dv < nb - 1 else nb - 1
                for j in range(start[lo_i], start[hi_i + 1]):
                    a = srt[j]
                    ok = 1
                    dev = 0
                    for k in range(nr):
                        dv = fabs(L.vals[a * nr + k] + R.vals[e * nr + k] - tg[k])
                        if dv > tl[k]:
                            ok = 0
                            break
                        if dv > dev:
                            dev = dv
                    if ok and dev < best_dev:
                        best_dev = dev
                        lmasks = [L.masks[a * L.ncol + c] for c in range(L.ncol)]
                        rmasks = [R.masks[e * R.ncol + c] for c in range(R.ncol)]
                        status = FEASIBLE
                        if dev <= early_tol:
                            hit_l = a
                            break
                if hit_l >= 0:
                    break
            if hit_l >= 0:
                break
        work = L.work + R.work
    finally:
        free(srt)
        free(start)
        _chalf_free(&L)
        _chalf_free(&R)
    bits = np.zeros(n1 * n2, dtype=np.uint8)
    if status == FEASIBLE:
        for half, masks in ((left, lmasks), (right, rmasks)):
            for j, c in enumerate(half.cols):
                for m in range(n1):
                    if (masks[j] >> m) & 1:
                        bits[m * n2 + c] = 1
    return status, bits, work


# ---------------------------------------------------------------------------
# exhaustive matching over all binary vectors
# ---------------------------------------------------------------------------

def gray_match(wre, wim, tre, tim, double tol, long long max_hits):
    cdef double[:, ::1] Wr = _c(np.asarray(wre, dtype=np.float64).T)
    cdef double[:, ::1] Wi = _c(np.asarray(wim, dtype=np.float64).T)
    cdef double[::1] Tr = _c(tre, dtype=np.float64)
    cdef double[::1] Ti = _c(tim, dtype=np.float64)
    cdef int t = Wr.shape[0], nb = Wr.shape[1]
    if t > 40:
        raise ValueError("gray_match enumerates at most 2**40 vectors")
    cdef double *sr = <double *> malloc((nb + 1) * sizeof(double))
    cdef double *si = <double *> malloc((nb + 1) * sizeof(double))
    cdef uint64_t g, gray = 0, total = (<uint64_t> 1) << t
    cdef int bit, k, ok
    cdef uint64_t code, low
    hits = []
    try:
        for k in range(nb):
            sr[k] = 0
            si[k] = 0
        g = 0
        while True:
            ok = 1
            for k in range(nb):
                if fabs(sr[k] - Tr[k]) > tol or fabs(si[k] - Ti[k]) > tol:
                    ok = 0
                    break
            if ok:
                hits.append(gray)
                if len(hits) >= max_hits:
                    break
            g += 1
            if g == total:
                break
            low = g & (~g + 1)
            bit = 0
            while (low >> bit) != 1:
                bit += 1
            gray ^= low
            if (g & 0xFFFF) == 0:
                for k in range(nb):
                    sr[k] = 0
                    si[k] = 0
                code = gray
                bit = 0
                while code:
                    if code & 1:
                        for k in range(nb):
                            sr[k] += Wr[bit, k]
                            si[k] += Wi[bit, k]
                    code >>= 1
                    bit += 1
            elif (gray >> bit) & 1:
                for k in range(nb):
                    sr[k] += Wr[bit, k]
                    si[k] += Wi[bit, k]
            else:
                for k in range(nb):
                    sr[k] -= Wr[bit, k]
                    si[k] -= Wi[bit, k]
    finally:
        free(sr)
        free(si)
    return np.array(sorted(hits), dtype=np.int64)
