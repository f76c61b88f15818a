#!/usr/bin/env python3
"""Benchmark the numba hot kernels against the pure-numpy fallback.

Covers the three kernels that dominate runtime: the O(n^2) energy pair sum,
the log-domain Sinkhorn logsumexp half-iterations, and the brute-force
nearest-image queries used by the inverse map.

Usage:
    python benchmarks/kernel_benchmark.py [--atoms N] [--iters K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mrmlab import kernels


def time_fn(fn, *args, iters=5):
    best = np.inf
    for _ in range(iters):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--atoms", type=int, default=2048)
    ap.add_argument("--iters", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.atoms
    pts = rng.uniform(-1, 1, size=(n, 2))
    w = rng.uniform(0.1, 1.0, n)
    C = rng.uniform(0, 4, size=(n, n))
    vec = rng.normal(size=n)
    queries = rng.uniform(-1, 1, size=(n, 2))

    have_numba = kernels.BACKEND == "numba"
    if not have_numba:
        print("numba backend unavailable or disabled "
              "(MRMLAB_DISABLE_NUMBA); benchmarking numpy only")

    cases = [
        ("energy_pairs", (pts, w, 0.7),
         kernels.energy_pairs_numpy,
         kernels.energy_pairs_numba if have_numba else None),
        ("lse_scaled rows", (C, vec, 12.5, 1),
         kernels.lse_scaled_numpy,
         kernels.lse_scaled_numba if have_numba else None),
        ("lse_scaled cols", (C, vec, 12.5, 0),
         kernels.lse_scaled_numpy,
         kernels.lse_scaled_numba if have_numba else None),
        ("nearest_index", (queries, pts),
         kernels.nearest_index_numpy,
         kernels.nearest_index_numba if have_numba else None),
    ]

    print(f"n = {n}, best of {args.iters}")
    print(f"{'kernel':<18} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}")
    for name, call_args, np_fn, nb_fn in cases:
        t_np = time_fn(np_fn, *call_args, iters=args.iters)
        if nb_fn is None:
            print(f"{name:<18} {t_np * 1e3:>12.2f} {'-':>12} {'-':>9}")
            continue
        nb_fn(*call_args)  # JIT warmup
        t_nb = time_fn(nb_fn, *call_args, iters=args.iters)
        print(f"{name:<18} {t_np * 1e3:>12.2f} {t_nb * 1e3:>12.2f} "
              f"{t_np / t_nb:>8.1f}x")

        ref = np_fn(*call_args)
        fast = nb_fn(*call_args)
        if isinstance(ref, tuple):
            agree = all(np.allclose(a, b, rtol=1e-9) for a, b in zip(ref, fast))
        else:
            agree = np.allclose(ref, fast, rtol=1e-9, atol=1e-12)
        if not agree:
            print(f"  WARNING: {name} backends disagree")


if __name__ == "__main__":
    main()
