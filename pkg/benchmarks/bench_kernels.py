"""Compare the compiled and numpy neighbor kernels.

    python benchmarks/bench_kernels.py [--sizes 1000,4000] [--dims 2,8,41] [--k 5] [--repeat 3]

Every query of an N-row matrix is searched against the whole matrix (the
measure pass workload). Both backends must return identical arrays; the
script exits non-zero if they do not.
"""
import argparse
import sys
import time

import numpy as np

from bi3 import kernels


def _ints(text):
    return [int(t) for t in text.split(",") if t]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=_ints, default=[1000, 4000])
    p.add_argument("--dims", type=_ints, default=[2, 8, 41])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    if kernels.compiled is None:
        print("compiled kernels are not built; only the numpy backend is available", file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20} {'N':>6} {'d':>4} {'numpy s':>9} {'cython s':>9} {'speedup':>8}  equal")
    mismatch = False
    for n in args.sizes:
        for d in args.dims:
            X = rng.standard_normal((n, d))
            nominal = np.zeros(d, dtype=np.uint8)
            if d > 8:
                # a few overlap-compared columns, as in the mixed-type real datasets
                X[:, :3] = rng.integers(0, 4, (n, 3))
                nominal[:3] = 1
            exclude = np.arange(n)
            positive = (rng.random(n) < 0.05).astype(np.uint8)
            cases = [
                ("knn_select", lambda b: kernels.knn_select(X, X, nominal, args.k, exclude, backend=b)),
                ("first_positive_rank",
                 lambda b: kernels.first_positive_rank(X, X, nominal, positive, exclude, backend=b)),
            ]
            for name, fn in cases:
                t_np, a = best_of(lambda: fn("numpy"), args.repeat)
                t_cy, b = best_of(lambda: fn("cython"), args.repeat)
                if isinstance(a, tuple):
                    equal = all(np.array_equal(u, v) for u, v in zip(a, b))
                else:
                    equal = np.array_equal(a, b)
                mismatch |= not equal
                print(f"{name:<20} {n:>6} {d:>4} {t_np:>9.4f} {t_cy:>9.4f} {t_np / t_cy:>7.1f}x  {equal}")
    return 1 if mismatch else 0


if __name__ == "__main__":
    sys.exit(main())
