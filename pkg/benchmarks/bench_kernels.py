#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the two hot loops (Metropolis sweep for the circular beta ensemble and
the Dyson-diffusion proposal) on both backends and prints a speedup table.

    python benchmarks/bench_kernels.py [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from stein_rmt import _kernels_py

try:
    from stein_rmt import _kernels_cy
except ImportError:
    _kernels_cy = None


def time_call(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_mh(impl, chains, n, attempts, seed=0):
    rng = np.random.default_rng(seed)
    base = np.sort(rng.random((chains, n)) * 2 * np.pi, axis=1)
    noise = rng.standard_normal((attempts, chains))
    unif = rng.random((attempts, chains))

    def run():
        impl.mh_sweep(base.copy(), 2.0, 2 * np.pi / n, 0, noise, unif)

    return time_call(run)


def bench_cdbm(impl, reps, n, steps, seed=0):
    rng = np.random.default_rng(seed)
    th = np.tile((np.arange(n) + 0.5) * 2 * np.pi / n, (reps, 1))
    th += 0.01 * rng.standard_normal(th.shape)
    th.sort(axis=1)
    dts = np.full(reps, 1e-4)
    noises = rng.standard_normal((steps, reps, n))

    def run():
        cur = th.copy()
        for s in range(steps):
            prop, ok = impl.cdbm_propose(cur, dts, noises[s], 2.0, 1e-8)
            cur[ok] = prop[ok]

    return time_call(run)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args()

    scale = 10 if args.quick else 1
    cases = [
        ("mh n=50", lambda impl: bench_mh(impl, chains=16, n=50, attempts=20_000 // scale)),
        ("mh n=200", lambda impl: bench_mh(impl, chains=16, n=200, attempts=8_000 // scale)),
        ("cdbm n=8", lambda impl: bench_cdbm(impl, reps=2_000 // scale, n=8, steps=100 // scale)),
        ("cdbm n=20", lambda impl: bench_cdbm(impl, reps=2_000 // scale, n=20, steps=50 // scale)),
    ]
    print(f"{'case':<12}{'python (s)':>12}{'cython (s)':>12}{'speedup':>10}")
    for name, fn in cases:
        t_py = fn(_kernels_py)
        if _kernels_cy is None:
            print(f"{name:<12}{t_py:>12.4f}{'n/a':>12}{'n/a':>10}")
        else:
            t_cy = fn(_kernels_cy)
            print(f"{name:<12}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>10.1f}")


if __name__ == "__main__":
    main()
