"""Compare the numba kernels with their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Prints the median wall time of each kernel for both backends, plus the
maximum absolute difference between their outputs.
"""
import argparse
import statistics
import time

import numpy as np

from hjlab import _kernels


def _time(fn, repeat):
    fn()                       # warm-up (JIT compilation for numba)
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def cases(rng):
    u1 = np.cumsum(rng.uniform(-0.01, 0.01, 200_001))
    u2 = rng.standard_normal((600, 600)).cumsum(axis=0).cumsum(axis=1) * 1e-3
    X, Y = rng.standard_normal((4000, 3)), rng.standard_normal((4000, 3))
    y = np.linspace(-2, 2, 8001)
    q = np.linspace(-1, 1, 2001)
    table = 0.5 * np.linspace(-3, 3, 8193) ** 2

    def lf1(k):
        pm, pp = k.lf_diffs_1d(u1, 1e-3)
        return k.lf_update_1d(u1, 0.5 * (0.5 * (pm + pp)) ** 2, pm, pp, 1.1, 1e-4)

    def lf2(k):
        a, b, c, d = k.lf_diffs_2d(u2, 1e-3, 1e-3)
        hv = 0.25 * (a + b) * (c + d)
        return k.lf_update_2d(u2, hv, a, b, c, d, 1.1, 1.1, 1e-4)

    return {
        "lf_update_1d (2e5 nodes)": lf1,
        "lf_update_2d (600x600)": lf2,
        "min_sqdist (4000x4000, d=3)": lambda k: k.min_sqdist(X, Y),
        "minplus_argmin (2001x8001)": lambda k: k.minplus_argmin(-np.abs(y), y, q, 0.5, -3.0,
                                                                6.0 / 8192, table)[0],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if _kernels.NUMBA is None:
        print("numba unavailable: only the numpy backend is timed")
    print(f"{'kernel':32s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max|diff|':>10s}")
    for name, fn in cases(rng).items():
        tn = _time(lambda: fn(_kernels.NUMPY), args.repeat)
        if _kernels.NUMBA is None:
            print(f"{name:32s} {1e3 * tn:11.2f} {'-':>11s} {'-':>8s} {'-':>10s}")
            continue
        tb = _time(lambda: fn(_kernels.NUMBA), args.repeat)
        diff = float(np.max(np.abs(np.asarray(fn(_kernels.NUMPY)) - np.asarray(fn(_kernels.NUMBA)))))
        print(f"{name:32s} {1e3 * tn:11.2f} {1e3 * tb:11.2f} {tn / tb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
