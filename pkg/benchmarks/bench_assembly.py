#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot fills (scalar trace, Cauchy operator, volume
potential) on spheres of increasing resolution and checks that the two
backends agree to roundoff.

    python3 benchmarks/bench_assembly.py [--sizes 16,24,32]
"""

import argparse
import time

import numpy as np

from diracbag import _kernels_numpy
from diracbag.surface import make_sphere

try:
    from diracbag import _kernels_numba

    HAVE_NUMBA = True
except ImportError:
    _kernels_numba = None
    HAVE_NUMBA = False


def _time(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="12,16,24", help="comma list of n_theta")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    zb = 1.5j
    print(f"{'n_theta':>7} {'N':>6} {'kernel':>10} {'numpy [s]':>10} "
          f"{'numba [s]':>10} {'speedup':>8} {'max diff':>10}")
    for nt in sizes:
        surf = make_sphere(1.0, nt, 2 * nt)
        nodes, weights = surf.nodes, surf.weights
        n = surf.n_nodes
        rng = np.random.default_rng(0)
        g = rng.standard_normal((n, 4)) + 1j * rng.standard_normal((n, 4))
        pts = 0.5 * nodes[:: max(1, n // 200)]

        cases = [
            ("fill_k", (nodes, weights, zb)),
            ("fill_w", (nodes, weights, zb)),
            ("fill_w_diff", (nodes, weights, zb)),
            ("potential", (nodes, weights, zb, 2.0, 1.0, g, pts)),
        ]
        for name, call_args in cases:
            t_np, ref = _time(getattr(_kernels_numpy, name), *call_args)
            if HAVE_NUMBA:
                fn = getattr(_kernels_numba, name)
                fn(*call_args)  # compile outside the timing
                t_nb, out = _time(fn, *call_args)
                diff = float(np.max(np.abs(out - ref)))
                print(f"{nt:>7} {n:>6} {name:>10} {t_np:>10.4f} "
                      f"{t_nb:>10.4f} {t_np / t_nb:>8.1f} {diff:>10.2e}")
            else:
                print(f"{nt:>7} {n:>6} {name:>10} {t_np:>10.4f} "
                      f"{'-':>10} {'-':>8} {'-':>10}")
    if not HAVE_NUMBA:
        print("numba not importable; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
