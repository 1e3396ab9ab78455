"""Time the hot kernels under the numba and numpy backends.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from chaoswipt import kernels


def cases(rng):
    seeds = rng.uniform(-0.99, 0.99, 4096)
    y = rng.standard_normal((8192, 120)) + 1j * rng.standard_normal((8192, 120))
    h = rng.standard_normal((2048, 40, 2)) + 1j * rng.standard_normal((2048, 40, 2))
    g = rng.standard_normal((2048, 40, 2)) + 1j * rng.standard_normal((2048, 40, 2))
    return {
        "chebyshev_orbits 4096x512": lambda: kernels.chebyshev_orbits(seeds, 512),
        "correlate_frames 8192x(60+60)": lambda: kernels.correlate_frames(y, 60, 1, 1e-6),
        "correlate_frames 8192x(20+100)": lambda: kernels.correlate_frames(y, 20, 5, 1e-6),
        "lambda_quadratic_forms 2048x40x2": lambda: kernels.lambda_quadratic_forms(h, g, np.zeros(40)),
    }


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    work = cases(np.random.default_rng(0))
    if not kernels.HAS_NUMBA:
        print("numba not importable; only the numpy backend is timed")
    results = {}
    for name in ("numpy", "numba") if kernels.HAS_NUMBA else ("numpy",):
        kernels.set_backend(name)
        results[name] = {k: best_of(f, args.repeat) for k, f in work.items()}
    print(f"{'kernel':36s} {'numpy ms':>10s} {'numba ms':>10s} {'speed-up':>9s}")
    for k in work:
        a = results["numpy"][k] * 1e3
        b = results.get("numba", {}).get(k)
        if b is None:
            print(f"{k:36s} {a:10.2f}")
        else:
            print(f"{k:36s} {a:10.2f} {b * 1e3:10.2f} {a / (b * 1e3):8.1f}x")


if __name__ == "__main__":
    main()
