"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run: python benchmarks/bench_kernels.py [--entries 4000] [--dim 1024] [--queries 200]
The numpy path is what you get with FAQGATE_NO_NUMBA=1; this script times
both in one process regardless of the flag.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from faqgate import kernels


def _unit_rows(rng, n, dim):
    m = rng.standard_normal((n, dim))
    return np.ascontiguousarray(m / np.linalg.norm(m, axis=1, keepdims=True))


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--entries", type=int, default=4000)
    parser.add_argument("--dim", type=int, default=1024)
    parser.add_argument("--queries", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(42)
    matrix = _unit_rows(rng, args.entries, args.dim)
    queries = _unit_rows(rng, args.queries, args.dim)
    query = np.ascontiguousarray(queries[0])

    trace_t = np.ascontiguousarray(np.arange(100_000, dtype=np.float64))
    trace_p = rng.uniform(10, 300, size=100_000)
    trace_p = np.ascontiguousarray(trace_p)

    rows = []

    def bench(name, np_fn, jit_fn):
        t_np = timeit(np_fn)
        if jit_fn is not None:
            jit_fn()  # warm-up triggers compilation
            t_jit = timeit(jit_fn)
        else:
            t_jit = None
        rows.append((name, t_np, t_jit))

    bench(
        f"top1 scan {args.queries}x{args.entries}x{args.dim}",
        lambda: kernels.top1_scan_np(matrix, queries),
        (lambda: kernels.top1_scan_jit(matrix, queries)) if kernels.NUMBA_ENABLED else None,
    )
    bench(
        f"topk(k=5) scan {args.entries}x{args.dim}",
        lambda: kernels.topk_scan_np(matrix, query, 5),
        (lambda: kernels.topk_scan_jit(matrix, query, 5)) if kernels.NUMBA_ENABLED else None,
    )
    bench(
        "trapezoid 100k samples",
        lambda: kernels.trapezoid_np(trace_t, trace_p),
        (lambda: kernels.trapezoid_jit(trace_t, trace_p)) if kernels.NUMBA_ENABLED else None,
    )

    print(f"numba available: {kernels.NUMBA_ENABLED}")
    print(f"{'kernel':<38} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, t_np, t_jit in rows:
        if t_jit is None:
            print(f"{name:<38} {t_np * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>9}")
        else:
            print(f"{name:<38} {t_np * 1e3:>10.3f}ms {t_jit * 1e3:>10.3f}ms {t_np / t_jit:>8.2f}x")


if __name__ == "__main__":
    main()
