#!/usr/bin/env python3
"""Closure kernel timings: numba against the numpy fallback.

Run with `python3 benchmarks/bench_kernels.py [--repeat N]`.  Each row
closes a seeded set of generator tuples in A^k under w and checks that
both kernels produce the same rows in the same order.
"""

import argparse
import time

import numpy as np

from zhukcsp import _kernels
from zhukcsp.catalog import catalog
from zhukcsp.harness import SplitMix64

CASES = [
    ("Z2", 16, 9),
    ("Z2", 22, 11),
    ("Z3", 12, 7),
    ("Z4w5", 8, 6),
    ("Z2xZ2", 10, 7),
    ("F3", 8, 5),
    ("MAJ", 12, 6),
]


def _gens(size, k, g, seed):
    rng = SplitMix64(seed)
    return np.array([[rng.below(size) for _ in range(k)] for _ in range(g)], dtype=np.int64)


def _time(auto, gens, use_numba, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = _kernels.closure(auto, gens, cap=10**7, use_numba=use_numba)[0]
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()
    print(f"numba available: {_kernels.HAVE_NUMBA}")
    print(f"{'algebra':8} {'k':>3} {'gens':>4} {'rows':>8} {'numpy s':>9} {'numba s':>9} {'speedup':>8}")
    for name, k, g in CASES:
        alg = catalog(name)
        gens = _gens(alg.size, k, g, args.seed)
        auto = alg.automaton
        t_np, rows_np = _time(auto, gens, False, args.repeat)
        if _kernels.HAVE_NUMBA:
            _kernels.closure(auto, gens[:1], cap=10, use_numba=True)  # compile outside the timing
            t_nb, rows_nb = _time(auto, gens, True, args.repeat)
            if not np.array_equal(rows_np, rows_nb):
                raise SystemExit(f"kernel mismatch on {name}")
            print(f"{name:8} {k:3d} {g:4d} {len(rows_np):8d} {t_np:9.4f} {t_nb:9.4f} {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:8} {k:3d} {g:4d} {len(rows_np):8d} {t_np:9.4f} {'-':>9} {'-':>8}")


if __name__ == "__main__":
    main()
