"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--quick] [--repeat N]

Times each kernel on both backends, checks that they agree, and prints the
speed-up. Without the compiled extension only the fallback column is shown.
"""

import argparse
import time

import numpy as np

from palmdiff import _kernels
from palmdiff.cutproject import fibonacci_splitter, model_set
from palmdiff.pointset import Window


def _best(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _cases(quick):
    rng = np.random.default_rng(2024)
    sp, W = fibonacci_splitter()
    half = 1000.0 if quick else 5000.0
    chain, _ = model_set(sp, W, Window.box([-half], [half]))
    pts = chain.points
    ones = np.ones(len(pts))
    n_direct = 200 if quick else 2000
    n_line = 8000 if quick else 80000
    freqs = rng.uniform(0, 4, (n_direct, 1))
    poisson2d = rng.uniform(-50, 50, (20000 if quick else 100000, 2))
    return [
        (f"fourier_sum ({len(pts)} pts x {n_direct} freqs)",
         lambda b: _kernels.fourier_sum(pts, ones, freqs, 1, b)),
        (f"fourier_sum_line ({len(pts)} pts x {n_line} freqs)",
         lambda b: _kernels.fourier_sum_line(pts, ones, [0.0], [4.0 / n_line], n_line, b)),
        (f"pair_differences 2-d ({len(poisson2d)} pts, cutoff 1.5)",
         lambda b: _kernels.pair_differences_raw(poisson2d, poisson2d, 1.5, b)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    have_compiled = _kernels.HAVE_COMPILED
    print(f"default backend: {_kernels.BACKEND}")
    print(f"{'kernel':<55} {'python [s]':>11} {'compiled [s]':>13} {'speed-up':>9} {'max diff':>10}")
    for name, run in _cases(args.quick):
        t_py, r_py = _best(lambda: run("python"), args.repeat)
        if have_compiled:
            t_c, r_c = _best(lambda: run("compiled"), args.repeat)
            if r_py.shape == r_c.shape:
                diff = float(np.max(np.abs(r_py - r_c))) if r_py.size else 0.0
            else:
                diff = float("nan")
            print(f"{name:<55} {t_py:>11.3f} {t_c:>13.3f} {t_py / t_c:>8.2f}x {diff:>10.2e}")
        else:
            print(f"{name:<55} {t_py:>11.3f} {'-':>13} {'-':>9} {'-':>10}")


if __name__ == "__main__":
    main()
