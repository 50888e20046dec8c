"""Hot numeric kernels with a numba path and a fallback path.

Two kinds of kernel live here:

* Sphere-search enumeration (`se_closest`, `se_list`): depth-first
  Schnorr-Euchner search with radius shrinking on an upper-triangular factor.
  The fallback is the identical algorithm interpreted instead of compiled.
* Batch scans (`codebook_dists`, `glrt_scan`, `forney_log_ratio`): explicit
  loops under numba, vectorized numpy expressions otherwise.

The active binding is chosen at import time by ``ddfsim._accel`` (env flag
DDFSIM_NO_NUMBA).  ``benchmarks/bench_kernels.py`` times both paths.

Conventions shared by both paths:

* Enumeration works on R upper triangular with positive diagonal and
  zq = Q^T y from a QR factorization done by the caller.
* Integer ties are broken lexicographically on the coefficient vector.
* `cap` bounds the number of visited nodes; on overrun the status flag is 0
  and the best result found so far is returned.
"""

import numpy as np

from ._accel import USE_NUMBA, maybe_jit


def _se_closest_src(R, zq, lo, hi, use_box, cap):
    # Returns (z, dist, nodes, status). status 1 = search completed.
    n = R.shape[0]
    z = np.empty(n, np.int64)
    best = np.zeros(n, np.int64)
    c = np.empty(n, np.float64)
    dacc = np.empty(n, np.float64)
    up = np.empty(n, np.int64)
    dn = np.empty(n, np.int64)
    best_d = np.inf
    found = False
    ok = True
    nodes = 0

    k = n - 1
    dacc[k] = 0.0
    s = zq[k] / R[k, k]
    c[k] = s
    zk = int(np.floor(s + 0.5))
    if use_box:
        if zk < lo[k]:
            zk = lo[k]
        elif zk > hi[k]:
            zk = hi[k]
    z[k] = zk
    up[k] = zk + 1
    dn[k] = zk - 1
    advance = False

    while True:
        if advance:
            has_up = (not use_box) or (up[k] <= hi[k])
            has_dn = (not use_box) or (dn[k] >= lo[k])
            if has_up and has_dn:
                if up[k] - c[k] <= c[k] - dn[k]:
                    z[k] = up[k]
                    up[k] += 1
                else:
                    z[k] = dn[k]
                    dn[k] -= 1
            elif has_up:
                z[k] = up[k]
                up[k] += 1
            elif has_dn:
                z[k] = dn[k]
                dn[k] -= 1
            else:
                k += 1
                if k >= n:
                    break
                continue
            advance = False

        nodes += 1
        if nodes > cap:
            ok = False
            break
        e = (c[k] - z[k]) * R[k, k]
        nd = dacc[k] + e * e

        # Values at a level come in nondecreasing |e|, so the first miss
        # prunes the whole level.  Equal distance still descends: a subtree
        # may hold a lexicographically smaller tie.
        if nd > best_d or (nd == best_d and not found):
            k += 1
            if k >= n:
                break
            advance = True
            continue

        if k == 0:
            take = False
            if nd < best_d:
                take = True
            else:
                for i in range(n):
                    if z[i] != best[i]:
                        take = z[i] < best[i]
                        break
            if take:
                best_d = nd
                for i in range(n):
                    best[i] = z[i]
                found = True
            advance = True
        else:
            k -= 1
            dacc[k] = nd
            acc = 0.0
            for j in range(k + 1, n):
                acc += R[k, j] * z[j]
            s = (zq[k] - acc) / R[k, k]
            c[k] = s
            zk = int(np.floor(s + 0.5))
            if use_box:
                if zk < lo[k]:
                    zk = lo[k]
                elif zk > hi[k]:
                    zk = hi[k]
            z[k] = zk
            up[k] = zk + 1
            dn[k] = zk - 1

    status = 1 if (found and ok) else 0
    return best, best_d, nodes, status


def _se_list_src(R, zq, nwant, lo, hi, use_box, cap):
    # Returns (cand, cd, cnt, nodes, status): the cnt nearest points in
    # nondecreasing (dist, lex) order.  cnt < nwant only for a small box.
    n = R.shape[0]
    z = np.empty(n, np.int64)
    c = np.empty(n, np.float64)
    dacc = np.empty(n, np.float64)
    up = np.empty(n, np.int64)
    dn = np.empty(n, np.int64)
    cand = np.zeros((nwant, n), np.int64)
    cd = np.full(nwant, np.inf)
    cnt = 0
    ok = True
    nodes = 0

    k = n - 1
    dacc[k] = 0.0
    s = zq[k] / R[k, k]
    c[k] = s
    zk = int(np.floor(s + 0.5))
    if use_box:
        if zk < lo[k]:
            zk = lo[k]
        elif zk > hi[k]:
            zk = hi[k]
    z[k] = zk
    up[k] = zk + 1
    dn[k] = zk - 1
    advance = False

    while True:
        if advance:
            has_up = (not use_box) or (up[k] <= hi[k])
            has_dn = (not use_box) or (dn[k] >= lo[k])
            if has_up and has_dn:
                if up[k] - c[k] <= c[k] - dn[k]:
                    z[k] = up[k]
                    up[k] += 1
                else:
                    z[k] = dn[k]
                    dn[k] -= 1
            elif has_up:
                z[k] = up[k]
                up[k] += 1
            elif has_dn:
                z[k] = dn[k]
                dn[k] -= 1
            else:
                k += 1
                if k >= n:
                    break
                continue
            advance = False

        nodes += 1
        if nodes > cap:
            ok = False
            break
        e = (c[k] - z[k]) * R[k, k]
        nd = dacc[k] + e * e

        rad = cd[nwant - 1] if cnt == nwant else np.inf
        if nd > rad:
            k += 1
            if k >= n:
                break
            advance = True
            continue

        if k == 0:
            pos = cnt
            for i in range(cnt):
                if nd < cd[i]:
                    pos = i
                    break
                if nd == cd[i]:
                    less = False
                    diff = False
                    for t in range(n):
                        if z[t] != cand[i, t]:
                            less = z[t] < cand[i, t]
                            diff = True
                            break
                    if diff and less:
                        pos = i
                        break
            if pos < nwant:
                last = cnt if cnt < nwant else nwant - 1
                j = last
                while j > pos:
                    cd[j] = cd[j - 1]
                    for t in range(n):
                        cand[j, t] = cand[j - 1, t]
                    j -= 1
                cd[pos] = nd
                for t in range(n):
                    cand[pos, t] = z[t]
                if cnt < nwant:
                    cnt += 1
            advance = True
        else:
            k -= 1
            dacc[k] = nd
            acc = 0.0
            for j in range(k + 1, n):
                acc += R[k, j] * z[j]
            s = (zq[k] - acc) / R[k, k]
            c[k] = s
            zk = int(np.floor(s + 0.5))
            if use_box:
                if zk < lo[k]:
                    zk = lo[k]
                elif zk > hi[k]:
                    zk = hi[k]
            z[k] = zk
            up[k] = zk + 1
            dn[k] = zk - 1

    status = 1 if ok else 0
    return cand, cd, cnt, nodes, status


def _codebook_dists_loop(yr, yi, gr, gi, Xr, Xi):
    # d[w] = sum_k |y_k - g_k x_k(w)|^2 over complex symbols held as re/im pairs
    nc, n = Xr.shape
    out = np.empty(nc, np.float64)
    for w in range(nc):
        acc = 0.0
        for k in range(n):
            mr = gr[k] * Xr[w, k] - gi[k] * Xi[w, k]
            mi = gr[k] * Xi[w, k] + gi[k] * Xr[w, k]
            dr = yr[k] - mr
            di = yi[k] - mi
            acc += dr * dr + di * di
        out[w] = acc
    return out


def _codebook_dists_numpy(yr, yi, gr, gi, Xr, Xi):
    y = yr + 1j * yi
    g = gr + 1j * gi
    x = Xr + 1j * Xi
    r = y[None, :] - g[None, :] * x
    return (r.real ** 2 + r.imag ** 2).sum(axis=1)


def _glrt_scan_loop(yr, yi, Xr, Xi, Ar, Ai, g1r, g1i, g2r, g2i):
    # Joint scan over decision time (tables Ar/Ai, index mi = m-1) and message.
    # Iteration order plus strict < gives smaller-m-then-smaller-message ties.
    nm = Ar.shape[0]
    nc, n = Xr.shape
    best_d = np.inf
    best_m = 1
    best_w = 0
    for mi in range(nm):
        for w in range(nc):
            acc = 0.0
            for k in range(n):
                sr = Xr[w, k]
                si = Xi[w, k]
                ar = Ar[mi, w, k]
                ai = Ai[mi, w, k]
                mr = g1r * sr - g1i * si + g2r * ar - g2i * ai
                mi_ = g1r * si + g1i * sr + g2r * ai + g2i * ar
                dr = yr[k] - mr
                di = yi[k] - mi_
                acc += dr * dr + di * di
                if acc > best_d:
                    break
            if acc < best_d:
                best_d = acc
                best_m = mi + 1
                best_w = w
    return best_m, best_w, best_d


def _glrt_scan_numpy(yr, yi, Xr, Xi, Ar, Ai, g1r, g1i, g2r, g2i):
    y = yr + 1j * yi
    x = Xr + 1j * Xi
    a = Ar + 1j * Ai
    g1 = complex(g1r, g1i)
    g2 = complex(g2r, g2i)
    r = y[None, None, :] - (g1 * x[None, :, :] + g2 * a)
    d = (r.real ** 2 + r.imag ** 2).sum(axis=2)
    flat = int(np.argmin(d))
    mi, w = divmod(flat, d.shape[1])
    return mi + 1, w, float(d[mi, w])


def _forney_log_ratio_loop(d, best, inv_noise):
    # log p(best) - log sum_{w != best} p(w) with p(w) = exp(-inv_noise * d[w])
    nc = d.shape[0]
    if nc <= 1:
        return np.inf
    dmin = np.inf
    for w in range(nc):
        if w != best and d[w] < dmin:
            dmin = d[w]
    s = 0.0
    for w in range(nc):
        if w != best:
            s += np.exp(-inv_noise * (d[w] - dmin))
    return -inv_noise * (d[best] - dmin) - np.log(s)


def _forney_log_ratio_numpy(d, best, inv_noise):
    if d.shape[0] <= 1:
        return np.inf
    mask = np.ones(d.shape[0], bool)
    mask[best] = False
    others = d[mask]
    dmin = others.min()
    s = np.exp(-inv_noise * (others - dmin)).sum()
    return float(-inv_noise * (d[best] - dmin) - np.log(s))


# Fallback-path bindings (kept importable for the benchmark).
se_closest_py = _se_closest_src
se_list_py = _se_list_src
codebook_dists_py = _codebook_dists_numpy
glrt_scan_py = _glrt_scan_numpy
forney_log_ratio_py = _forney_log_ratio_numpy

if USE_NUMBA:
    se_closest = maybe_jit(_se_closest_src)
    se_list = maybe_jit(_se_list_src)
    codebook_dists = maybe_jit(_codebook_dists_loop)
    glrt_scan = maybe_jit(_glrt_scan_loop)
    forney_log_ratio = maybe_jit(_forney_log_ratio_loop)
else:
    se_closest = se_closest_py
    se_list = se_list_py
    codebook_dists = codebook_dists_py
    glrt_scan = glrt_scan_py
    forney_log_ratio = forney_log_ratio_py
