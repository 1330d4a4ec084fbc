"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py --repeat 5
"""
import argparse
import time

import numpy as np

from evospi import _kernels as K
from evospi import problems as P
from evospi._accel import HAVE_NUMBA


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(args):
    for n in args.intensity_n:
        rng = np.random.default_rng(n)
        w = np.ascontiguousarray(P.random_maxcut(n, n).weights)
        pop = rng.choice(np.array([1, -1], dtype=np.int8), size=(args.k, n))
        bits = np.ascontiguousarray((pop[:, :, None] != pop[:, None, :]).astype(np.uint8))
        yield f"intensity K={args.k} N={n}", (lambda b=bits, w=w: K.intensity_batch_jit(b, w)), \
            (lambda b=bits, w=w: K.intensity_batch_numpy(b, w))
    for n in args.oracle_n:
        a = np.asarray(P.random_partition(n, n).numbers, dtype=np.int64)
        yield f"partition oracle N={n}", (lambda a=a: K.brute_partition_jit(a)), \
            (lambda a=a: K.brute_partition_numpy(a))
        w = np.ascontiguousarray(P.random_maxcut(n, n).weights)
        tol = 1e-9 * w.sum()
        yield f"maxcut oracle N={n}", (lambda w=w: K.brute_maxcut_jit(w, tol)), \
            (lambda w=w: K.brute_maxcut_numpy(w, tol))


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--k", type=int, default=6)
    parser.add_argument("--intensity-n", type=int, nargs="+", default=[10, 100, 400])
    parser.add_argument("--oracle-n", type=int, nargs="+", default=[12, 16, 20])
    args = parser.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'case':32s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speedup':>9s}")
    for name, jit_fn, np_fn in cases(args):
        jit_fn()  # compile outside the timing
        t_jit = best_of(jit_fn, args.repeat)
        t_np = best_of(np_fn, args.repeat)
        print(f"{name:32s} {t_jit:12.6f} {t_np:12.6f} {t_np / t_jit:8.1f}x")


if __name__ == "__main__":
    main()
