"""Benchmark the compiled transport kernel against its pure-Python twin.

Run as ``python -m measure_pca.benchmarks``. Both backends execute the same
pivot sequence, so besides timing, the benchmark asserts that the returned
plans are bit-identical.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import _ot_fallback
from .ot_core import squared_distance_matrix
from .rng import RngStream

try:
    from . import _ot_native

    HAVE_NATIVE = True
except ImportError:  # pragma: no cover
    HAVE_NATIVE = False

DEFAULT_SIZES = ((50, 50), (100, 200), (200, 500), (400, 400))


def _instance(m0: int, m: int, seed: int = 0):
    s = RngStream(seed, m0 * 100_003 + m)
    x = s.child("x").standard_normal((m0, 2))
    y = 1.2 * s.child("y").standard_normal((m, 2)) + 0.4
    cost = squared_distance_matrix(x, y)
    return cost, np.full(m0, 1.0 / m0), np.full(m, 1.0 / m)


def run(sizes=DEFAULT_SIZES, repeats: int = 3) -> list:
    rows = []
    for m0, m in sizes:
        cost, r, c = _instance(m0, m)
        fallback_best = min(
            _timed(_ot_fallback.solve_dense, cost, r, c) for _ in range(repeats)
        )
        if HAVE_NATIVE:
            native_best = min(
                _timed(_ot_native.solve_dense, cost, r, c) for _ in range(repeats)
            )
            na = _ot_native.solve_dense(cost, r, c)
            fa = _ot_fallback.solve_dense(cost, r, c)
            identical = (
                np.array_equal(na[0], fa[0])
                and np.array_equal(na[1], fa[1])
                and np.array_equal(na[2], fa[2])
                and na[3] == fa[3]
            )
        else:  # pragma: no cover
            native_best, identical = float("nan"), None
        rows.append((m0, m, native_best, fallback_best, identical))
    return rows


def _timed(fn, *args) -> float:
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)
    rows = run(repeats=args.repeats)
    print(f"{'size':>12} {'native [s]':>12} {'fallback [s]':>13} {'speedup':>8}  identical")
    for m0, m, t_native, t_fallback, identical in rows:
        speed = t_fallback / t_native if t_native and t_native == t_native else float("nan")
        print(f"{m0:>5}x{m:<6} {t_native:>12.4f} {t_fallback:>13.4f} {speed:>8.1f}  {identical}")
        if identical is False:
            return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(main())
