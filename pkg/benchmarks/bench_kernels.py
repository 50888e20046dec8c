"""Benchmark the hot kernels: compiled path against the numpy fallback.

Each kernel runs the same workload through its numba-compiled form and its
pure-numpy fallback (the one selected package-wide by DDFSIM_NO_NUMBA=1).
Compilation happens during warmup, so the table shows steady-state time.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from ddfsim._accel import HAS_NUMBA, force_jit
from ddfsim import kernels


def median_time(fn, args_list, repeats):
    """Median over repeats of one pass through args_list, in seconds."""
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for a in args_list:
            fn(*a)
        times.append(time.perf_counter() - t0)
    times.sort()
    return times[len(times) // 2]


def sphere_instances(rng, count, n, nwant):
    closest, lists = [], []
    lo = np.zeros(n, np.int64)
    hi = np.full(n, 3, np.int64)
    for _ in range(count):
        A = rng.normal(size=(n, n))
        z = rng.integers(0, 4, n).astype(float)
        y = A @ z + rng.normal(size=n) * 0.7
        R = np.linalg.qr(A, mode="reduced")[1]
        qy = np.linalg.qr(A, mode="reduced")[0].T @ y
        # sign-normalize the triangular factor like the decoder front end does
        s = np.sign(np.diag(R))
        s[s == 0] = 1.0
        R = R * s[:, None]
        qy = qy * s
        closest.append((R, qy, lo, hi, True, 10_000_000))
        lists.append((R, qy, nwant, lo, hi, True, 10_000_000))
    return closest, lists


def dist_instances(rng, count, nc, n):
    Xr = rng.normal(size=(nc, n))
    Xi = rng.normal(size=(nc, n))
    out = []
    for _ in range(count):
        out.append((
            rng.normal(size=n), rng.normal(size=n),
            rng.normal(size=n), rng.normal(size=n),
            Xr, Xi,
        ))
    return out


def glrt_instances(rng, count, nc, M, T):
    n = M * T
    Xr = rng.normal(size=(nc, n))
    Xi = rng.normal(size=(nc, n))
    Ar = np.zeros((M, nc, n))
    Ai = np.zeros((M, nc, n))
    for m in range(M):
        Ar[m, :, m * T:] = rng.normal(size=(nc, n - m * T))
        Ai[m, :, m * T:] = rng.normal(size=(nc, n - m * T))
    out = []
    for _ in range(count):
        g = rng.normal(size=4)
        out.append((
            rng.normal(size=n), rng.normal(size=n), Xr, Xi, Ar, Ai,
            g[0], g[1], g[2], g[3],
        ))
    return out


def ratio_instances(rng, count, nc):
    out = []
    for _ in range(count):
        d = np.abs(rng.normal(size=nc)) * 30.0
        out.append((d, int(np.argmin(d)), 2.0))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        raise SystemExit("numba not installed; nothing to compare")

    rng = np.random.default_rng(0)
    closest_args, list_args = sphere_instances(rng, 200, 8, 64)
    cases = [
        ("se_closest (dim 8, boxed)", kernels._se_closest_src,
         kernels.se_closest_py, closest_args),
        ("se_list (dim 8, 64-best)", kernels._se_list_src,
         kernels.se_list_py, list_args),
        ("codebook_dists (256x4)", kernels._codebook_dists_loop,
         kernels.codebook_dists_py, dist_instances(rng, 2000, 256, 4)),
        ("codebook_dists (65536x4)", kernels._codebook_dists_loop,
         kernels.codebook_dists_py, dist_instances(rng, 50, 65536, 4)),
        ("glrt_scan (256 words, M=4)", kernels._glrt_scan_loop,
         kernels.glrt_scan_py, glrt_instances(rng, 200, 256, 4, 1)),
        ("forney_log_ratio (64)", kernels._forney_log_ratio_loop,
         kernels.forney_log_ratio_py, ratio_instances(rng, 2000, 64)),
        ("forney_log_ratio (65536)", kernels._forney_log_ratio_loop,
         kernels.forney_log_ratio_py, ratio_instances(rng, 200, 65536)),
    ]

    print(f"{'kernel':<28} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, src, fallback, work in cases:
        jitted = force_jit(src)
        jitted(*work[0])  # compile outside the timed region
        fallback(*work[0])
        t_jit = median_time(jitted, work, args.repeats)
        t_py = median_time(fallback, work, args.repeats)
        print(f"{name:<28} {t_jit*1e3:>8.2f}ms {t_py*1e3:>8.2f}ms "
              f"{t_py/t_jit:>7.1f}x")


if __name__ == "__main__":
    main()
