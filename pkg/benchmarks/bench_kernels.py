#!/usr/bin/env python
"""Time the numba kernels against their numpy fallbacks.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --lengths 20 100 400 --repeat 50
    python3 benchmarks/bench_kernels.py --output results.json
"""

import argparse
import json
import time

import numpy as np

from heardu import kernels
from heardu._jit import NUMBA_AVAILABLE


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_edit(lengths, repeat, rng):
    rows = []
    for n in lengths:
        ref = rng.integers(0, 50, n).astype(np.int64)
        hyp = rng.integers(0, 50, n).astype(np.int64)
        row = {"kernel": "edit_ops", "size": n,
               "numpy_s": best_of(lambda: kernels.edit_ops_numpy(ref, hyp), repeat)}
        if NUMBA_AVAILABLE:
            assert kernels.edit_ops_numba(ref, hyp) == kernels.edit_ops_numpy(ref, hyp)
            row["numba_s"] = best_of(lambda: kernels.edit_ops_numba(ref, hyp), repeat)
        rows.append(row)
    return rows


def bench_resample(seconds, repeat, rng):
    rows = []
    for s in seconds:
        x = rng.standard_normal(16000 * s)
        out_len = int(len(x) / 1.1 + 0.5)
        row = {"kernel": "linear_resample", "size": len(x),
               "numpy_s": best_of(lambda: kernels.linear_resample_numpy(x, 1.1, out_len), repeat)}
        if NUMBA_AVAILABLE:
            row["numba_s"] = best_of(lambda: kernels.linear_resample_numba(x, 1.1, out_len), repeat)
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lengths", type=int, nargs="+", default=[20, 100, 400])
    ap.add_argument("--seconds", type=int, nargs="+", default=[1, 10, 60])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--output")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    if NUMBA_AVAILABLE:  # compile outside the timed region
        kernels.edit_ops_numba(np.arange(3), np.arange(2))
        kernels.linear_resample_numba(np.zeros(8), 1.1, 7)
    else:
        print("numba not installed: timing the numpy kernels only")

    rows = bench_edit(args.lengths, args.repeat, rng) + bench_resample(args.seconds, args.repeat, rng)
    print(f"{'kernel':<18}{'size':>10}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for r in rows:
        nb = r.get("numba_s")
        print(f"{r['kernel']:<18}{r['size']:>10}{1e3 * r['numpy_s']:>12.3f}"
              + (f"{1e3 * nb:>12.3f}{r['numpy_s'] / nb:>9.1f}x" if nb else f"{'-':>12}{'-':>10}"))
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
