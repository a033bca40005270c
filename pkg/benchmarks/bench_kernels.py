#!/usr/bin/env python3
"""Benchmark the compiled curve-sum kernel against the numpy fallback.

The curve sum is the hot inner loop of every Monte Carlo level-set scan
(samples x modes sincos evaluations). Run after `python setup.py build_ext
--inplace` to see both paths; without the extension only the fallback runs.
"""

import time

import numpy as np

from dispersive_lab import kernels


def bench(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"compiled extension available: {kernels.HAVE_COMPILED}")
    for N, samples in ((32, 200_000), (64, 500_000), (128, 500_000)):
        coeff = (rng.standard_normal(2 * N + 1)
                 + 1j * rng.standard_normal(2 * N + 1))
        x = rng.random(samples)
        t = rng.random(samples)
        powers = (np.arange(-N, N + 1).astype(object) ** 3).astype(float)
        t_np = bench(kernels.curve_sum_numpy, coeff, powers, x, t, 2 * np.pi)
        rate_np = samples * (2 * N + 1) / t_np / 1e6
        line = (f"N={N:4d} samples={samples}: numpy {t_np:6.2f}s"
                f" ({rate_np:6.1f} M evals/s)")
        if kernels.HAVE_COMPILED:
            t_cy = bench(kernels._curve_ext.curve_sum, coeff,
                         powers, x, t, 2 * np.pi)
            rate_cy = samples * (2 * N + 1) / t_cy / 1e6
            line += (f" | compiled {t_cy:6.2f}s ({rate_cy:6.1f} M evals/s)"
                     f" | speedup {t_np / t_cy:4.1f}x")
        print(line)


if __name__ == "__main__":
    main()
