#!/usr/bin/env python3
"""Benchmark the compiled kernel extension against the numpy fallback.

Runs the three hot kernels on representative workloads (feature extraction
over a batch of frames, signature binning over a long embedding) and
prints per-backend timings with the speedup.  Usage:

    python benchmarks/bench_kernels.py [--frames 2000] [--len 125]
"""

import argparse
import time

import numpy as np

from modembed import _kernels_py

try:
    from modembed import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--frames", type=int, default=2000,
                        help="frames per feature-kernel workload")
    parser.add_argument("--len", type=int, default=125, dest="frame_len")
    parser.add_argument("--lags", type=int, default=8)
    parser.add_argument("--window", type=int, default=16)
    parser.add_argument("--hist-points", type=int, default=2_000_000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    frames = [
        (rng.standard_normal(args.frame_len), rng.standard_normal(args.frame_len))
        for _ in range(args.frames)
    ]
    zx = rng.standard_normal(args.hist_points)
    zy = rng.standard_normal(args.hist_points)

    workloads = {
        f"lag_diff_matrix      ({args.frames} x {args.frame_len}, K={args.lags})":
            lambda impl: [impl.lag_diff_matrix(i, q, args.lags)
                          for i, q in frames],
        f"windowed_corr_matrix ({args.frames} x {args.frame_len}, K={args.lags}, W={args.window})":
            lambda impl: [impl.windowed_corr_matrix(i, q, args.lags, args.window)
                          for i, q in frames],
        f"hist2d_counts        ({args.hist_points} points, 64 bins)":
            lambda impl: impl.hist2d_counts(zx, zy, 64, 3.0),
    }

    backends = [("py", _kernels_py)]
    if _kernels is not None:
        backends.append(("compiled", _kernels))
    else:
        print("compiled extension not built; timing the fallback only\n")

    print(f"{'kernel':<58} " + " ".join(f"{n:>10}" for n, _ in backends)
          + ("    speedup" if len(backends) == 2 else ""))
    for label, runner in workloads.items():
        row = [best_of(lambda impl=impl: runner(impl)) for _, impl in backends]
        cells = " ".join(f"{t * 1e3:9.1f}ms" for t in row)
        if len(row) == 2:
            cells += f"    {row[0] / row[1]:6.1f}x"
        print(f"{label:<58} {cells}")

    if len(backends) == 2:
        i, q = frames[0]
        agree = np.allclose(
            _kernels.windowed_corr_matrix(i, q, args.lags, args.window),
            _kernels_py.windowed_corr_matrix(i, q, args.lags, args.window),
            atol=1e-12,
        )
        print(f"\nbackend agreement on a sample frame: {agree}")


if __name__ == "__main__":
    main()
