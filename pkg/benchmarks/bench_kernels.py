#!/usr/bin/env python3
"""Time the compiled kernel backend against the pure-numpy one.

Kernel-grid tuning rebuilds thousands of Gram matrices per instance, so these
entrywise transforms dominate the adapter's runtime. This script times both
backends on matrix sizes bracketing what tuning actually sees (a few hundred
training rows, a handful of feature columns) and checks that they agree to
roundoff.

Run it twice to see both sides of the dispatch:

    python benchmarks/bench_kernels.py
    COVADAPT_DISABLE_NUMBA=1 python benchmarks/bench_kernels.py

With numba importable the dispatchers go through the compiled path and the
table shows its speedup over numpy; with the flag set (or numba missing) the
dispatchers ARE the numpy path and only that column is timed.
"""

from __future__ import annotations

import platform
import sys
import time

import numpy as np

from covadapt.kernels import (
    numba_enabled,
    pairwise_sq_dists,
    pairwise_sq_dists_numpy,
    stationary_gram,
    stationary_gram_numpy,
)

SIZES = ((64, 8), (256, 8), (256, 27), (1024, 8))
STATIONARY_KINDS = ("rbf", "matern32", "matern52")
REPS = 30


def median_time(fn, reps=REPS):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def fmt_seconds(s):
    return f"{s * 1e6:8.1f} us" if s < 1e-3 else f"{s * 1e3:8.2f} ms"


def bench_case(label, dispatch, reference, result_a, result_b):
    t_dispatch = median_time(dispatch)
    agree = float(np.max(np.abs(result_a - result_b)))
    if numba_enabled():
        t_numpy = median_time(reference)
        speedup = t_numpy / t_dispatch
        print(
            f"  {label:<25} compiled {fmt_seconds(t_dispatch)}   "
            f"numpy {fmt_seconds(t_numpy)}   speedup {speedup:5.2f}x   "
            f"max|diff| {agree:.2e}"
        )
    else:
        print(f"  {label:<25} numpy {fmt_seconds(t_dispatch)}   max|diff| {agree:.2e}")


def main():
    backend = "numba (compiled)" if numba_enabled() else "pure numpy"
    print(f"python {sys.version.split()[0]} on {platform.platform()}")
    print(f"active dispatch backend: {backend}")

    rng = np.random.default_rng(0)
    for n, d in SIZES:
        A = rng.normal(size=(n, d))
        print(f"\nn={n}, d={d}")

        # First dispatcher call warms the JIT so compile time stays out of
        # the timings.
        D = pairwise_sq_dists(A, A)
        D_ref = pairwise_sq_dists_numpy(A, A)
        bench_case(
            "pairwise_sq_dists",
            lambda: pairwise_sq_dists(A, A),
            lambda: pairwise_sq_dists_numpy(A, A),
            D,
            D_ref,
        )

        for kind in STATIONARY_KINDS:
            G = stationary_gram(kind, D, 1.3)
            G_ref = stationary_gram_numpy(kind, D, 1.3)
            bench_case(
                f"stationary_gram {kind}",
                lambda k=kind: stationary_gram(k, D, 1.3),
                lambda k=kind: stationary_gram_numpy(k, D, 1.3),
                G,
                G_ref,
            )


if __name__ == "__main__":
    main()
