"""Benchmark the compiled contraction kernels against the numpy fallback.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from ttnheom import kernels as K


def bench(fn, *args, repeat=7, number=None):
    # choose a loop count that keeps each sample around a few ms
    t0 = time.perf_counter()
    fn(*args)
    once = time.perf_counter() - t0
    number = number or max(1, int(0.01 / max(once, 1e-7)))
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def main():
    rng = np.random.default_rng(0)
    cases = [
        ("leaf apply", (16, 8, 8), 1),
        ("small bond apply", (16, 8, 8), 0),
        ("mid tensor apply", (40, 20, 40), 2),
        ("large tensor apply", (60, 60, 60), 1),
        ("two-site block apply", (24, 20, 20, 24), 2),
    ]
    print(f"{'case':24s} {'shape':>18s} {'numpy':>10s} {'ext':>10s} {'speedup':>8s}")
    for name, shape, axis in cases:
        ten = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        mat = rng.standard_normal((shape[axis], shape[axis])) + 1j * rng.standard_normal(
            (shape[axis], shape[axis])
        )
        t_py = bench(K.mode_apply_py, mat, ten, axis)
        if K.USING_EXT:
            t_ext = bench(K.mode_apply, mat, ten, axis)
            print(f"{name:24s} {str(shape):>18s} {t_py*1e6:9.1f}u {t_ext*1e6:9.1f}u {t_py/t_ext:7.2f}x")
        else:
            print(f"{name:24s} {str(shape):>18s} {t_py*1e6:9.1f}u {'-':>10s} {'-':>8s}")

    for name, shape, axis in [("gram small", (16, 8, 8), 0), ("gram large", (60, 60, 60), 0)]:
        bra = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        ket = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        t_py = bench(K.gram_py, bra, ket, axis)
        if K.USING_EXT:
            t_ext = bench(K.gram, bra, ket, axis)
            print(f"{name:24s} {str(shape):>18s} {t_py*1e6:9.1f}u {t_ext*1e6:9.1f}u {t_py/t_ext:7.2f}x")
        else:
            print(f"{name:24s} {str(shape):>18s} {t_py*1e6:9.1f}u {'-':>10s} {'-':>8s}")

    if not K.USING_EXT:
        print("\ncompiled extension not in use (build it or unset TTNHEOM_PURE_PYTHON)")


if __name__ == "__main__":
    main()
