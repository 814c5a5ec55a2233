"""Numba kernels: Philox counter RNG, per-edge sampling, box-restricted Dijkstra.

Everything here works on an "arena": a box ``B_M`` whose vertices and edges are
indexed row-major (see :mod:`fpplab.lattice`).  Queries may be restricted to a
sub-box ``B_m`` with ``m <= M``.  Raw edge weights live in a float64 cache over
the arena edges; NaN entries are sampled on first touch.
"""

import numpy as np
from numba import njit

# Philox4x64-10 constants (Salmon et al., Random123).
_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_COORD_OFFSET = np.int64(1 << 31)

FAM_POINTMASS = 0
FAM_UNIFORM = 1
FAM_EXPONENTIAL = 2
FAM_PARETO = 3
FAM_TWOPOINT = 4

RULE_IID = 0
RULE_AXIS = 1
RULE_PARITY = 2
RULE_TABLE = 3

MAX_DIM = 6


@njit(cache=True, nogil=True)
def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    hl = a_hi * b_lo
    lh = a_lo * b_hi
    hh = a_hi * b_hi
    cross = (ll >> _S32) + (hl & _MASK32) + lh
    hi = hh + (hl >> _S32) + (cross >> _S32)
    lo = (cross << _S32) | (ll & _MASK32)
    return hi, lo


@njit(cache=True, nogil=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit(cache=True, nogil=True)
def philox_block(counter, key):
    """Vector convenience wrapper used by tests: one 4-word block."""
    out = np.empty(4, dtype=np.uint64)
    a, b, c, d = philox4x64(counter[0], counter[1], counter[2], counter[3], key[0], key[1])
    out[0] = a
    out[1] = b
    out[2] = c
    out[3] = d
    return out


@njit(cache=True, nogil=True)
def _ppf(fam, par, u):
    if fam == FAM_POINTMASS:
        return par[0]
    if fam == FAM_UNIFORM:
        return par[0] + (par[1] - par[0]) * u
    if fam == FAM_EXPONENTIAL:
        return -np.log1p(-u) / par[0]
    if fam == FAM_PARETO:
        return par[1] * (1.0 - u) ** (-1.0 / par[0])
    # two-point: P(v1) = p
    if u < par[2]:
        return par[0]
    return par[1]


@njit(cache=True, nogil=True)
def _edge_class(lower, axis, d, rule, tab_coords, tab_axis, tab_cls):
    if rule == RULE_IID:
        return 0
    if rule == RULE_AXIS:
        return axis
    if rule == RULE_PARITY:
        s = 0
        for j in range(d):
            s += lower[j]
        return s % 2
    for i in range(tab_axis.shape[0]):
        if tab_axis[i] != axis:
            continue
        hit = True
        for j in range(d):
            if tab_coords[i, j] != lower[j]:
                hit = False
                break
        if hit:
            return tab_cls[i]
    return 0


@njit(cache=True, nogil=True)
def edge_weight(lower, axis, d, key0, key1, rule, fam, par, tab_coords, tab_axis, tab_cls):
    """Raw weight of the edge (lower, lower + e_axis) for replication key (key0, key1)."""
    cls = _edge_class(lower, axis, d, rule, tab_coords, tab_axis, tab_cls)
    w0 = np.uint64(0)
    w1 = np.uint64(0)
    w2 = np.uint64(0)
    for j in range(d):
        v = np.uint64(lower[j] + _COORD_OFFSET)
        if j % 2 == 1:
            v = v << _S32
        if j // 2 == 0:
            w0 = w0 | v
        elif j // 2 == 1:
            w1 = w1 | v
        else:
            w2 = w2 | v
    w3 = np.uint64(axis) | (np.uint64(d) << _S32)
    x, _, _, _ = philox4x64(w0, w1, w2, w3, key0, key1)
    u = np.float64(x >> _S11) * (1.0 / 9007199254740992.0)
    return _ppf(fam[cls], par[cls], u)


@njit(cache=True, nogil=True)
def sample_edges(lowers, axes, key0, key1s, rule, fam, par, tab_coords, tab_axis, tab_cls):
    """Raw weights for a batch of edges; row i uses replication key1s[i]."""
    k = axes.shape[0]
    d = lowers.shape[1]
    out = np.empty(k, dtype=np.float64)
    for i in range(k):
        out[i] = edge_weight(lowers[i], axes[i], d, key0, key1s[i], rule, fam, par,
                             tab_coords, tab_axis, tab_cls)
    return out


# ---------------------------------------------------------------------------
# arena geometry helpers


@njit(cache=True, nogil=True)
def _decode(vid, d, M, out):
    side = 2 * M + 1
    for j in range(d - 1, -1, -1):
        out[j] = vid % side - M
        vid //= side


@njit(cache=True, nogil=True)
def _edge_id(lower, axis, d, M):
    side = 2 * M + 1
    block = 2 * M
    for j in range(d - 1):
        block *= side
    eid = 0
    for j in range(d):
        n_j = 2 * M if j == axis else side
        eid = eid * n_j + (lower[j] + M)
    return axis * block + eid


# ---------------------------------------------------------------------------
# search


@njit(cache=True, nogil=True)
def search_into(d, M, m, src, stop, bound, tol, cache, cap,
                key0, key1, rule, fam, par, tc, ta, tk,
                dist, pred, tie, done, touched):
    """Label-setting search from arena vertex ``src`` inside ``B_m``.

    Stops once ``stop`` (if >= 0) is settled or the heap minimum exceeds
    ``bound``.  Fills (dist, pred, tie) over arena vertices, which must arrive
    reset (inf, -1, False, False); ``tie[v]`` is set when ``v`` has two
    predecessors giving equal (within ``tol`` relative) labels.  Every labelled
    vertex is listed in ``touched``; returns (touched, count) for :func:`reset`.
    """
    # heap and edge indexing are inlined: helper calls returning arrays cost ~3x here
    side = 2 * M + 1
    block = 2 * M
    for j in range(d - 1):
        block *= side
    stride = np.empty(d, dtype=np.int64)
    s = 1
    for j in range(d - 1, -1, -1):
        stride[j] = s
        s *= side
    hk = np.empty(4096, dtype=np.float64)
    hv = np.empty(4096, dtype=np.int64)
    hk[0] = 0.0
    hv[0] = src
    size = 1
    dist[src] = 0.0
    touched[0] = src
    nt = 1
    cur = np.empty(d, dtype=np.int64)
    while size > 0:
        du = hk[0]
        u = hv[0]
        size -= 1
        lk = hk[size]
        lv = hv[size]
        i = 0
        while True:
            l = 2 * i + 1
            if l >= size:
                break
            c = l
            if l + 1 < size and hk[l + 1] < hk[l]:
                c = l + 1
            if lk <= hk[c]:
                break
            hk[i] = hk[c]
            hv[i] = hv[c]
            i = c
        if size > 0:
            hk[i] = lk
            hv[i] = lv
        if done[u] or du > dist[u]:
            continue
        if du > bound:
            break
        done[u] = True
        if u == stop:
            break
        x = u
        for j in range(d - 1, -1, -1):
            cur[j] = x % side - M
            x //= side
        for a in range(d):
            for sgn in (-1, 1):
                c = cur[a] + sgn
                if c > m or c < -m:
                    continue
                if sgn < 0:
                    cur[a] = c
                eid = 0
                for j in range(d):
                    n_j = 2 * M if j == a else side
                    eid = eid * n_j + (cur[j] + M)
                eid += a * block
                w = cache[eid]
                if np.isnan(w):
                    w = edge_weight(cur, a, d, key0, key1, rule, fam, par, tc, ta, tk)
                    cache[eid] = w
                if sgn < 0:
                    cur[a] = c + 1
                if w > cap:
                    w = cap
                v = u + sgn * stride[a]
                nd = du + w
                dv = dist[v]
                if nd < dv:
                    if dv == np.inf:
                        if nt == touched.shape[0]:
                            grown = np.empty(2 * nt, dtype=np.int64)
                            grown[:nt] = touched
                            touched = grown
                        touched[nt] = v
                        nt += 1
                        tie[v] = False
                    else:
                        tie[v] = dv - nd <= tol * dv
                    dist[v] = nd
                    pred[v] = u
                    if not done[v]:
                        if size == hk.shape[0]:
                            nk = np.empty(2 * size, dtype=np.float64)
                            nv2 = np.empty(2 * size, dtype=np.int64)
                            nk[:size] = hk
                            nv2[:size] = hv
                            hk = nk
                            hv = nv2
                        i = size
                        size += 1
                        while i > 0:
                            p = (i - 1) >> 1
                            if hk[p] <= nd:
                                break
                            hk[i] = hk[p]
                            hv[i] = hv[p]
                            i = p
                        hk[i] = nd
                        hv[i] = v
                elif pred[v] != u and nd - dv <= tol * nd:
                    tie[v] = True
    return touched, nt


@njit(cache=True, nogil=True)
def reset(dist, pred, tie, done, touched, nt):
    for i in range(nt):
        v = touched[i]
        dist[v] = np.inf
        pred[v] = -1
        tie[v] = False
        done[v] = False


@njit(cache=True, nogil=True)
def search(d, M, m, src, stop, bound, tol, cache, cap,
           key0, key1, rule, fam, par, tc, ta, tk):
    """Allocating variant of :func:`search_into`; returns (dist, pred, tie)."""
    side = 2 * M + 1
    nv = 1
    for _ in range(d):
        nv *= side
    dist = np.full(nv, np.inf)
    pred = np.full(nv, -1, dtype=np.int64)
    tie = np.zeros(nv, dtype=np.bool_)
    done = np.zeros(nv, dtype=np.bool_)
    touched = np.empty(1024, dtype=np.int64)
    search_into(d, M, m, src, stop, bound, tol, cache, cap, key0, key1, rule, fam, par,
                tc, ta, tk, dist, pred, tie, done, touched)
    return dist, pred, tie


@njit(cache=True, nogil=True)
def chain_has_tie(pred, tie, src, tgt):
    v = tgt
    while v != src:
        if tie[v]:
            return True
        v = pred[v]
    return False


@njit(cache=True, nogil=True)
def pred_chain(pred, src, tgt):
    n = 1
    v = tgt
    while v != src:
        v = pred[v]
        n += 1
    out = np.empty(n, dtype=np.int64)
    v = tgt
    for i in range(n - 1, -1, -1):
        out[i] = v
        if i > 0:
            v = pred[v]
    return out


@njit(cache=True, nogil=True)
def greedy_canonical(d, M, m, src, tgt, value, tol, dist_s, dist_t, cache, cap):
    """Walk the geodesic DAG from ``src``, always taking the optimal continuation
    whose edge centre is smallest in (c_d, ..., c_1) lexicographic order.

    All weights touched here were cached by the preceding searches.
    """
    side = 2 * M + 1
    nv = dist_s.shape[0]
    stride = np.empty(d, dtype=np.int64)
    s = 1
    for j in range(d - 1, -1, -1):
        stride[j] = s
        s *= side
    visited = np.zeros(nv, dtype=np.bool_)
    path = np.empty(16, dtype=np.int64)
    n = 0
    u = src
    cur = np.empty(d, dtype=np.int64)
    nb = np.empty(d, dtype=np.int64)
    best_nb = np.empty(d, dtype=np.int64)
    thresh = tol * max(value, 1.0)
    while True:
        if n == path.shape[0]:
            grown = np.empty(2 * n, dtype=np.int64)
            grown[:n] = path
            path = grown
        path[n] = u
        n += 1
        visited[u] = True
        if u == tgt:
            break
        _decode(u, d, M, cur)
        best = -1
        fallback = -1
        fallback_r = np.inf
        for a in range(d):
            for sgn in (-1, 1):
                c = cur[a] + sgn
                if c > m or c < -m:
                    continue
                v = u + sgn * stride[a]
                if visited[v] or not np.isfinite(dist_t[v]):
                    continue
                lower_axis = cur[a] if sgn > 0 else c
                cur_a = cur[a]
                cur[a] = lower_axis
                w = cache[_edge_id(cur, a, d, M)]
                cur[a] = cur_a
                if w > cap:
                    w = cap
                r = abs(dist_s[u] + w + dist_t[v] - value)
                if r < fallback_r:
                    fallback_r = r
                    fallback = v
                if r > thresh:
                    continue
                for j in range(d):
                    nb[j] = cur[j]
                nb[a] = c
                if best < 0:
                    better = True
                else:
                    better = False
                    for j in range(d - 1, -1, -1):
                        if nb[j] != best_nb[j]:
                            better = nb[j] < best_nb[j]
                            break
                if better:
                    best = v
                    for j in range(d):
                        best_nb[j] = nb[j]
        if best < 0:
            best = fallback
        if best < 0:
            break
        u = best
    return path[:n]


@njit(cache=True, nogil=True)
def path_edge_ids(vids, d, M):
    n = vids.shape[0] - 1
    out = np.empty(n, dtype=np.int64)
    a_c = np.empty(d, dtype=np.int64)
    b_c = np.empty(d, dtype=np.int64)
    for i in range(n):
        _decode(vids[i], d, M, a_c)
        _decode(vids[i + 1], d, M, b_c)
        for j in range(d):
            if a_c[j] != b_c[j]:
                if b_c[j] < a_c[j]:
                    out[i] = _edge_id(b_c, j, d, M)
                else:
                    out[i] = _edge_id(a_c, j, d, M)
                break
    return out


@njit(cache=True, nogil=True)
def fill_box(cache, d, M, key0, key1, rule, fam, par, tc, ta, tk):
    """Sample every still-missing weight of the arena."""
    side = 2 * M + 1
    lower = np.empty(d, dtype=np.int64)
    eid = 0
    for a in range(d):
        cnt = 1
        for j in range(d):
            cnt *= 2 * M if j == a else side
        for flat in range(cnt):
            rem = flat
            for j in range(d - 1, -1, -1):
                n_j = 2 * M if j == a else side
                lower[j] = rem % n_j - M
                rem //= n_j
            if np.isnan(cache[eid]):
                cache[eid] = edge_weight(lower, a, d, key0, key1, rule, fam, par, tc, ta, tk)
            eid += 1
