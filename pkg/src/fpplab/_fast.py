"""Jitted kernels for the hot paths.

Everything here mirrors the reference implementations in
:mod:`fpplab.prf` and :mod:`fpplab.engine` bit for bit; the test
suite pins that equality.  The module degrades gracefully: if numba
is unavailable, ``HAVE_NUMBA`` is False and the engine falls back to
the pure-numpy routes.

Kernel conventions:

* a "key schedule" is the (10, 2) uint64 array from
  :func:`fpplab.prf.key_schedule`; kernels never see the raw seed.
* path totals are accumulated suffix-first (``w_k + (w_{k+1} + ...)``),
  matching the suffix-minimum dynamic program, so a reported optimum
  is bitwise the same float a brute-force oracle gets when it sums
  the same weights in the same order.
* workspace arrays are caller-allocated and reused across replicas;
  kernels restore them (via touched lists) before returning.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


from .prf import PHILOX_M0, PHILOX_M1, PHILOX_W0, PHILOX_W1, TWEAK_STRIDE

_M0 = np.uint64(PHILOX_M0)
_M1 = np.uint64(PHILOX_M1)
_W0 = np.uint64(PHILOX_W0)
_W1 = np.uint64(PHILOX_W1)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_S2 = np.uint64(2)
_U0 = np.uint64(0)
_U1 = np.uint64(1)
_U3 = np.uint64(3)
_TWEAK = np.uint64(TWEAK_STRIDE)
_SCALE = 2.0 ** -53
_INF = np.inf

# Pruning slack for the path-enumeration DFS.  Lower bounds built from
# differently associated float sums can sit a few ulps above an exact
# total; candidates within the slack are kept and re-tested exactly.
DFS_SLACK = 1e-9


@njit(cache=True)
def key_schedule_into(seed, replica, ks):
    k0 = np.uint64(seed)
    k1 = np.uint64(replica)
    for r in range(10):
        ks[r, 0] = k0
        ks[r, 1] = k1
        k0 = k0 + _W0
        k1 = k1 + _W1
    return ks


@njit(cache=True)
def _philox_block(c0, ks):
    x0 = c0
    x1 = _U0
    x2 = _U0
    x3 = _U0
    for r in range(10):
        a = x0
        alo = a & _MASK32
        ahi = a >> _S32
        blo = _M0 & _MASK32
        bhi = _M0 >> _S32
        t = ahi * blo + ((alo * blo) >> _S32)
        hi0 = ahi * bhi + (t >> _S32) + ((alo * bhi + (t & _MASK32)) >> _S32)
        lo0 = a * _M0
        a = x2
        alo = a & _MASK32
        ahi = a >> _S32
        blo = _M1 & _MASK32
        bhi = _M1 >> _S32
        t = ahi * blo + ((alo * blo) >> _S32)
        hi1 = ahi * bhi + (t >> _S32) + ((alo * bhi + (t & _MASK32)) >> _S32)
        lo1 = a * _M1
        x0 = hi1 ^ x1 ^ ks[r, 0]
        x1 = lo1
        x2 = hi0 ^ x3 ^ ks[r, 1]
        x3 = lo0
    return x0, x1, x2, x3


@njit(cache=True)
def _u_at(code, ks, tweak):
    c0 = (code >> _S2) + _U1 + np.uint64(tweak) * _TWEAK
    w0, w1, w2, w3 = _philox_block(c0, ks)
    word = code & _U3
    if word == _U0:
        raw = w0
    elif word == _U1:
        raw = w1
    elif word == _S2:
        raw = w2
    else:
        raw = w3
    return np.float64(raw >> _S11) * _SCALE


@njit(cache=True)
def _u_nonzero(code, ks):
    u = _u_at(code, ks, 0)
    t = 1
    while u == 0.0:
        u = _u_at(code, ks, t)
        t += 1
    return u


@njit(cache=True)
def _edge_w(code, ks):
    return -math.log1p(-_u_nonzero(code, ks))


@njit(cache=True)
def _fill_vertex_u(v, n, ks, ubuf):
    """Uniforms for the n codes of vertex v, via whole-block runs.

    Entries are raw (may be exactly 0.0); callers resolve zeros with
    ``_u_nonzero`` at the point of use.
    """
    base = np.uint64(v) * np.uint64(n)
    c0 = (base >> _S2) + _U1
    word = np.int64(base & _U3)
    filled = 0
    while filled < n:
        w0, w1, w2, w3 = _philox_block(c0, ks)
        if word <= 0 and filled < n:
            ubuf[filled] = np.float64(w0 >> _S11) * _SCALE
            filled += 1
        if word <= 1 and filled < n:
            ubuf[filled] = np.float64(w1 >> _S11) * _SCALE
            filled += 1
        if word <= 2 and filled < n:
            ubuf[filled] = np.float64(w2 >> _S11) * _SCALE
            filled += 1
        if filled < n:
            ubuf[filled] = np.float64(w3 >> _S11) * _SCALE
            filled += 1
        word = 0
        c0 = c0 + _U1
    return ubuf


@njit(cache=True)
def fill_weight_table(n, ks, table):
    """All 2**n * n edge weights for one replica, in code order."""
    total = table.size
    c0 = _U1
    i = 0
    while i < total:
        w0, w1, w2, w3 = _philox_block(c0, ks)
        table[i] = np.float64(w0 >> _S11) * _SCALE
        if i + 1 < total:
            table[i + 1] = np.float64(w1 >> _S11) * _SCALE
        if i + 2 < total:
            table[i + 2] = np.float64(w2 >> _S11) * _SCALE
        if i + 3 < total:
            table[i + 3] = np.float64(w3 >> _S11) * _SCALE
        i += 4
        c0 = c0 + _U1
    for i in range(total):
        u = table[i]
        if u == 0.0:
            u = _u_nonzero(np.uint64(i), ks)
        table[i] = -math.log1p(-u)
    return table


@njit(cache=True)
def suffix_dp_table(n, table, h):
    """Suffix minima over the materialised table.

    ``h[v]`` is the minimum remaining weight from vertex v to the
    all-ones vertex; masks are processed in decreasing numeric order,
    which dominates the subset order.
    """
    size = 1 << n
    h[size - 1] = 0.0
    for v in range(size - 2, -1, -1):
        best = _INF
        base = v * n
        for j in range(n):
            bit = 1 << j
            if v & bit == 0:
                hv = h[v | bit]
                if hv < best:
                    c = table[base + j] + hv
                    if c < best:
                        best = c
        h[v] = best
    return h


@njit(cache=True)
def suffix_dp_inline(n, ks, h):
    """Suffix minima with edge weights generated on the fly.

    Same recursion as :func:`suffix_dp_table` but without the O(n 2^n)
    table; used when only ``h`` itself is needed.
    """
    size = 1 << n
    ubuf = np.empty(n, dtype=np.float64)
    h[size - 1] = 0.0
    for v in range(size - 2, -1, -1):
        _fill_vertex_u(v, n, ks, ubuf)
        best = _INF
        for j in range(n):
            bit = 1 << j
            if v & bit == 0:
                hv = h[v | bit]
                if hv < best:
                    u = ubuf[j]
                    if u == 0.0:
                        u = _u_nonzero(np.uint64(v * n + j), ks)
                    c = -math.log1p(-u) + hv
                    if c < best:
                        best = c
        h[v] = best
    return h


@njit(cache=True)
def _suffix_total(table, path_codes, depth):
    acc = 0.0
    for d in range(depth - 1, -1, -1):
        acc = table[path_codes[d]] + acc
    return acc


@njit(cache=True)
def enumerate_below_table(n, table, h, thr, limit, out_dirs, out_w):
    """DFS enumeration of paths with (suffix-summed) total <= thr.

    Pruning uses the prefix sum plus ``h`` with a small slack; each
    surviving leaf is re-totalled in canonical suffix order and tested
    exactly.  Returns the number of paths found, or -1 if it exceeds
    ``limit``.  ``out_dirs`` may be a (0, n) array when only counting.
    """
    path_codes = np.empty(n, dtype=np.int64)
    path_dirs = np.empty(n, dtype=np.int64)
    next_j = np.zeros(n + 1, dtype=np.int64)
    prefix = np.zeros(n + 1, dtype=np.float64)
    vert = np.zeros(n + 1, dtype=np.int64)
    record = out_dirs.shape[0] > 0
    count = 0
    depth = 0
    vert[0] = 0
    while depth >= 0:
        if depth == n:
            total = _suffix_total(table, path_codes, n)
            if total <= thr:
                if count >= limit:
                    return -1
                if record:
                    for d in range(n):
                        out_dirs[count, d] = path_dirs[d]
                    out_w[count] = total
                count += 1
            depth -= 1
            continue
        v = vert[depth]
        j = next_j[depth]
        advanced = False
        while j < n:
            bit = 1 << j
            if v & bit == 0:
                code = v * n + j
                g = prefix[depth] + table[code]
                nxt = v | bit
                if g + h[nxt] <= thr + DFS_SLACK:
                    next_j[depth] = j + 1
                    path_codes[depth] = code
                    path_dirs[depth] = j
                    depth += 1
                    vert[depth] = nxt
                    prefix[depth] = g
                    next_j[depth] = 0
                    advanced = True
                    break
            j += 1
        if not advanced:
            next_j[depth] = n
            depth -= 1
    return count


@njit(cache=True)
def count_below_table(n, table, h, thr, limit):
    out_dirs = np.empty((0, n), dtype=np.int64)
    out_w = np.empty(0, dtype=np.float64)
    return enumerate_below_table(n, table, h, thr, limit, out_dirs, out_w)


@njit(cache=True)
def _heap_push(hk, hv, size, key, val):
    i = size
    hk[i] = key
    hv[i] = val
    while i > 0:
        p = (i - 1) >> 1
        if hk[p] <= hk[i]:
            break
        tk = hk[p]
        hk[p] = hk[i]
        hk[i] = tk
        tv = hv[p]
        hv[p] = hv[i]
        hv[i] = tv
        i = p
    return size + 1


@njit(cache=True)
def _heap_pop(hk, hv, size):
    key = hk[0]
    val = hv[0]
    size -= 1
    if size > 0:
        hk[0] = hk[size]
        hv[0] = hv[size]
        i = 0
        while True:
            l = 2 * i + 1
            if l >= size:
                break
            c = l
            r = l + 1
            if r < size and hk[r] < hk[l]:
                c = r
            if hk[c] >= hk[i]:
                break
            tk = hk[i]
            hk[i] = hk[c]
            hk[c] = tk
            tv = hv[i]
            hv[i] = hv[c]
            hv[c] = tv
            i = c
    return key, val, size


@njit(cache=True)
def _half_dijkstra(n, ks, half, forward, dist, settled, touched, hk, hv, ubuf):
    """Settle every vertex within ``half`` of one end of the cube.

    ``forward`` grows from vertex 0 along out-edges; otherwise from
    the all-ones vertex along in-edges (computing suffix distances).
    Returns (number of touched vertices, status); status 2 means the
    heap capacity was exhausted.
    """
    size = 1 << n
    start = 0 if forward else size - 1
    hsize = 0
    dist[start] = 0.0
    touched[0] = start
    nt = 1
    hsize = _heap_push(hk, hv, hsize, 0.0, start)
    while hsize > 0:
        key, u, hsize = _heap_pop(hk, hv, hsize)
        if key > half:
            break
        if settled[u] != 0:
            continue
        if key > dist[u]:
            continue
        settled[u] = 1
        if forward:
            _fill_vertex_u(u, n, ks, ubuf)
        for j in range(n):
            bit = 1 << j
            if forward:
                if u & bit != 0:
                    continue
                v = u | bit
                if settled[v] != 0:
                    continue
                uu = ubuf[j]
                if uu == 0.0:
                    uu = _u_nonzero(np.uint64(u * n + j), ks)
            else:
                if u & bit == 0:
                    continue
                v = u ^ bit
                if settled[v] != 0:
                    continue
                uu = _u_nonzero(np.uint64(v * n + j), ks)
            w = -math.log1p(-uu)
            nd = key + w
            if nd <= half and nd < dist[v]:
                if dist[v] == _INF:
                    touched[nt] = v
                    nt += 1
                dist[v] = nd
                if hsize >= hk.size:
                    return nt, 2
                hsize = _heap_push(hk, hv, hsize, nd, v)
    return nt, 0


@njit(cache=True)
def bidir_fpt(n, ks, horizon, dist_f, dist_b, settled_f, settled_b,
              touched_f, touched_b, hk, hv, ubuf):
    """Certified first-passage value via meet-in-the-middle search.

    If the optimum m is at most ``horizon``, the optimal path has an
    edge (u, v) with prefix distance g(u) <= m/2 and suffix distance
    h(v) <= m/2 (take the last prefix vertex within m/2), so scanning
    all such edges finds exactly m.  Returns (mhat, status): status 0
    with mhat <= horizon certifies mhat; status 1 means the optimum
    exceeds horizon; status 2 means a workspace overflow.  Workspaces
    are restored before returning.
    """
    half = horizon / 2.0
    nf, st_f = _half_dijkstra(n, ks, half, True, dist_f, settled_f,
                              touched_f, hk, hv, ubuf)
    nb = 0
    st_b = 0
    if st_f == 0:
        nb, st_b = _half_dijkstra(n, ks, half, False, dist_b, settled_b,
                                  touched_b, hk, hv, ubuf)
    mhat = _INF
    if st_f == 0 and st_b == 0:
        for i in range(nf):
            u = touched_f[i]
            if settled_f[u] == 0:
                continue
            gu = dist_f[u]
            _fill_vertex_u(u, n, ks, ubuf)
            for j in range(n):
                bit = 1 << j
                if u & bit != 0:
                    continue
                v = u | bit
                if settled_b[v] == 0:
                    continue
                uu = ubuf[j]
                if uu == 0.0:
                    uu = _u_nonzero(np.uint64(u * n + j), ks)
                cand = gu + (-math.log1p(-uu) + dist_b[v])
                if cand < mhat:
                    mhat = cand
    for i in range(nf):
        v = touched_f[i]
        dist_f[v] = _INF
        settled_f[v] = 0
    for i in range(nb):
        v = touched_b[i]
        dist_b[v] = _INF
        settled_b[v] = 0
    if st_f != 0 or st_b != 0:
        return _INF, 2
    if mhat > horizon:
        return mhat, 1
    return mhat, 0


@njit(cache=True)
def batch_fpt_bidir(n, seed, rep0, nrep, horizon, out, dist_f, dist_b,
                    settled_f, settled_b, touched_f, touched_b, hk, hv,
                    h_full):
    """First-passage values for a replica range at large n.

    Replicas whose optimum exceeds ``horizon`` (or that overflow a
    workspace) fall back to the full suffix dynamic program, so every
    entry of ``out`` is exact.  Returns the number of fallbacks.
    """
    ks = np.empty((10, 2), dtype=np.uint64)
    ubuf = np.empty(n, dtype=np.float64)
    fallbacks = 0
    for i in range(nrep):
        key_schedule_into(seed, rep0 + i, ks)
        mhat, status = bidir_fpt(n, ks, horizon, dist_f, dist_b,
                                 settled_f, settled_b, touched_f,
                                 touched_b, hk, hv, ubuf)
        if status == 0:
            out[i] = mhat
        else:
            suffix_dp_inline(n, ks, h_full)
            out[i] = h_full[0]
            fallbacks += 1
    return fallbacks


@njit(cache=True)
def batch_simulate_table(n, seed, rep0, nrep, thresholds, table, h,
                         out_m, out_counts, limit):
    """Per-replica optimum and extremal counts via the table route.

    ``thresholds`` holds absolute weight cutoffs; ``out_counts`` has
    shape (nrep, len(thresholds)).  A count that exceeds ``limit``
    is reported as -1.
    """
    ks = np.empty((10, 2), dtype=np.uint64)
    for i in range(nrep):
        key_schedule_into(seed, rep0 + i, ks)
        fill_weight_table(n, ks, table)
        suffix_dp_table(n, table, h)
        out_m[i] = h[0]
        for t in range(thresholds.size):
            out_counts[i, t] = count_below_table(n, table, h,
                                                 thresholds[t], limit)
    return 0


@njit(cache=True)
def batch_conditional_counts(n, seed, inner0, ninner, frozen_codes,
                             frozen_w, thr, table, h, out_w, limit):
    """Extremal counts for resampled interiors against frozen shells.

    Each inner replica regenerates the full table from its own stream,
    then overwrites the frozen codes with the base environment's
    weights before running the DP and count.
    """
    ks = np.empty((10, 2), dtype=np.uint64)
    for i in range(ninner):
        key_schedule_into(seed, inner0 + i, ks)
        fill_weight_table(n, ks, table)
        for k in range(frozen_codes.size):
            table[frozen_codes[k]] = frozen_w[k]
        suffix_dp_table(n, table, h)
        out_w[i] = count_below_table(n, table, h, thr, limit)
    return 0
