"""Compare the compiled and pure-Python radial march on the profile presets.

Usage: python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""

import argparse
import time

import numpy as np

from bartnik_forge import kernels

# (name, kind, p0, p1, m, u0): constant, inverse-sqrt, CMC and sqrt(2/r) profiles
CASES = [
    ("constant", 0, 0.4, 0.0, 1.0, 3.0),
    ("inverse_sqrt", 1, 0.5, 0.0, 1.0, 3.0),
    ("cmc", 2, 0.1, -0.05, 1.0, 3.0),
    ("sqrt_two_over_r", 3, 0.6, 0.0, 1.0, 3.0),
]


def best_time(backend, case, steps, repeat):
    _, kind, p0, p1, m, u0 = case
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernels.march_preset(kind, p0, p1, m, u0, 5e-4, steps, 1e-12, 30, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, out[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels._compiled is None:
        print("compiled kernels unavailable; only the pure-Python backend can run")
        return 1
    print(f"{'profile':<18}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}{'max |du|':>12}")
    for case in CASES:
        tp, up = best_time("python", case, args.steps, args.repeat)
        tc, uc = best_time("compiled", case, args.steps, args.repeat)
        print(f"{case[0]:<18}{tp:>12.4f}{tc:>14.5f}{tp / tc:>10.1f}{np.max(np.abs(up - uc)):>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
