"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs each batch kernel on a representative workload with both backends and
prints the timings and speedups.  Usage:

    python3 benchmarks/bench_kernels.py [--samples N] [--steps N]
"""

import argparse
import math
import time

import numpy as np

from specflow_lab import _kernels_py, kernels
from specflow_lab.roof import RoofFunction
from specflow_lab.rotations import golden_pair


def timeit(fn, repeat=3):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=20000)
    args = ap.parse_args()

    rot = golden_pair(96)
    f = RoofFunction(c0=3.0, saw_x=[(1.0, 0.0)], saw_y=[(math.sqrt(2.0), 0.0)])
    al, be = rot.alpha_float, rot.beta_float
    ra = kernels.roof_args(f)
    rng = np.random.default_rng(0)
    xs, ys = rng.random(args.samples), rng.random(args.samples)
    ss = rng.random(args.samples) * f.inf_bound

    if kernels.BACKEND != "cython":
        print("compiled backend not available; timing the fallback only")

    jobs = [
        (
            "birkhoff_batch  (%d pts x 400 steps)" % args.samples,
            lambda impl: impl.birkhoff_batch(xs, ys, 400, al, be, *ra),
        ),
        (
            "flow_batch      (%d pts, t = 200)" % args.samples,
            lambda impl: impl.flow_batch(xs, ys, ss, 200.0, al, be, *ra),
        ),
        (
            "crossing_scan   (%.0e steps)" % (100 * args.steps),
            lambda impl: impl.crossing_scan(0.21, al, 1.0 - 1e-4, 1.0, 100 * args.steps, 1e-12),
        ),
        (
            "diff_series     (%.0e steps)" % (10 * args.steps),
            lambda impl: impl.diff_series(0.3, 0.6, 2e-4, 1e-4, 10 * args.steps, al, be, *ra),
        ),
    ]

    print(f"{'kernel':44s} {'pure':>10s} {'compiled':>10s} {'speedup':>9s}")
    for name, job in jobs:
        t_py, out_py = timeit(lambda: job(_kernels_py))
        if kernels.BACKEND == "cython":
            t_cy, out_cy = timeit(lambda: job(kernels._impl))
            a = out_py[0] if isinstance(out_py, tuple) else out_py
            b = out_cy[0] if isinstance(out_cy, tuple) else out_cy
            assert np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), atol=1e-8)
            print(f"{name:44s} {t_py*1e3:8.1f}ms {t_cy*1e3:8.1f}ms {t_py/t_cy:8.1f}x")
        else:
            print(f"{name:44s} {t_py*1e3:8.1f}ms {'-':>10s} {'-':>9s}")


if __name__ == "__main__":
    main()
