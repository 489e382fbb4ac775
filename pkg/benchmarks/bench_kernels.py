"""Time the compiled kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5] [--queries 650] [--train 1950]

Sizes default to one held-out fold of the bundled scenario. Each kernel is
checked for bitwise agreement before it is timed. Without numba only the
numpy column is filled in.
"""
import argparse
import time

import numpy as np

from dronerem import kernels
from dronerem._accel import HAVE_NUMBA


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--queries", type=int, default=650)
    ap.add_argument("--train", type=int, default=1950)
    ap.add_argument("--macs", type=int, default=60)
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    d = 3 + args.macs

    def rows(n):
        X = np.zeros((n, d))
        X[:, :3] = np.round(rng.uniform(0, 3.5, size=(n, 3)), 2)
        X[np.arange(n), 3 + rng.integers(0, args.macs, size=n)] = 2.0
        return X

    A, B = rows(args.queries), rows(args.train)
    y = rng.normal(-75, 8, size=args.train)
    D2 = kernels.pairwise_sq_dist_numpy(A, B)
    idx = kernels.nearest_numpy(D2, args.k)
    noise = rng.normal(0, 0.005, size=(300, 3))
    hover_args = (np.zeros(3), np.array([0.2, 0.0, 0.0]), noise, 0.01, True, 10, 50, 2.0, 0.3)

    cases = [
        ("pairwise_sq_dist", (A, B), kernels.pairwise_sq_dist_numpy,
         getattr(kernels, "pairwise_sq_dist_jit", None)),
        ("nearest", (D2, args.k), kernels.nearest_numpy, getattr(kernels, "nearest_jit", None)),
        ("reduce_neighbors", (D2, idx, y, args.k, True), kernels.reduce_neighbors_numpy,
         getattr(kernels, "reduce_neighbors_jit", None)),
        ("hover_integrate", hover_args, kernels.hover_integrate_numpy,
         getattr(kernels, "hover_integrate_jit", None)),
    ]
    print(f"numba available: {HAVE_NUMBA}; queries={args.queries} train={args.train} "
          f"columns={d} k={args.k}; best of {args.repeat}")
    print(f"{'kernel':<18} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}  agree")
    for name, call_args, np_fn, jit_fn in cases:
        t_np = best_of(lambda: np_fn(*call_args), args.repeat)
        if jit_fn is None:
            print(f"{name:<18} {1e3 * t_np:>10.2f} {'-':>10} {'-':>8}  -")
            continue
        agree = np.array_equal(np_fn(*call_args), jit_fn(*call_args))  # also warms the JIT
        t_jit = best_of(lambda: jit_fn(*call_args), args.repeat)
        print(f"{name:<18} {1e3 * t_np:>10.2f} {1e3 * t_jit:>10.2f} "
              f"{t_np / t_jit:>7.1f}x  {agree}")


if __name__ == "__main__":
    main()
