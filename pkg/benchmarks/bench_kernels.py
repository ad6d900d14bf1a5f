"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from odpcalc import _kernels_py
from odpcalc import kernels

try:
    from odpcalc import _kernels as compiled
except ImportError:
    compiled = None


def _cases(rng):
    Y = rng.standard_normal((20000, 3))
    lo = np.array([[-np.inf, -1.0, 0.0], [0.0, 0.0, -np.inf], [-1.0, -np.inf, 0.0]])
    hi = np.array([[0.0, 1.0, 0.0], [np.inf, 0.0, 0.0], [1.0, 0.0, np.inf]])
    V = rng.standard_normal((40, 6)) + 0.3
    T = rng.standard_normal((60, 80))
    return {
        "box_distances": lambda m: m.box_distances(Y, lo, hi),
        "normal_codes": lambda m: m.normal_codes(Y, lo, hi, 1e-9),
        "min_norm_point": lambda m: m.min_norm_point(V),
        "pivot": lambda m: m.pivot(T.copy(), 3, 5),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':16s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for name, fn in _cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:16s} {t_py:10.3f} {'n/a':>12s} {'':>8s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:16s} {t_py:10.3f} {t_c:12.3f} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
