"""Compare the compiled LCS kernel against the pure-Python fallback.

Run:  python benchmarks/bench_kernels.py [--sizes 64,256,1024] [--repeats 5]
"""

from __future__ import annotations

import argparse
import random
import statistics
import time

from usrep.kernels import backend_name, lcs_length_ids_pure

try:
    from usrep import _speedups
except ImportError:
    _speedups = None

import numpy as np


def bench(fn, a, b, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(a, b)
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="64,256,1024,4096")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--vocab", type=int, default=50)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"active backend: {backend_name()}")
    print(f"{'n':>6}  {'pure (ms)':>12}  {'compiled (ms)':>14}  {'speedup':>8}")
    for n in sizes:
        a = [rng.randrange(args.vocab) for _ in range(n)]
        b = [rng.randrange(args.vocab) for _ in range(n)]
        t_pure = bench(lcs_length_ids_pure, a, b, args.repeats)
        if _speedups is None:
            print(f"{n:>6}  {t_pure * 1e3:>12.3f}  {'unavailable':>14}  {'-':>8}")
            continue
        a_np = np.asarray(a, dtype=np.intc)
        b_np = np.asarray(b, dtype=np.intc)
        assert _speedups.lcs_length_ids(a_np, b_np) == lcs_length_ids_pure(a, b)
        t_fast = bench(_speedups.lcs_length_ids, a_np, b_np, args.repeats)
        print(
            f"{n:>6}  {t_pure * 1e3:>12.3f}  {t_fast * 1e3:>14.3f}  "
            f"{t_pure / t_fast:>7.1f}x"
        )


if __name__ == "__main__":
    main()
