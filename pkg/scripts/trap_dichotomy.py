#!/usr/bin/env python3
"""Trap at n=24: standard-bit-mutation EA versus the parabolic (1+1) loop.

The EA has to jump the full Hamming gap to the trap optimum in one
mutation; the hypermutation walks through the complement, so the same
budget separates 0% from 100% success.
"""

import argparse
import math
import statistics

from immuno_opt.benchmarks import make_benchmark
from immuno_opt.core import RandomSource
from immuno_opt.algorithms import run_one_plus_one_ea, run_one_plus_one_fast_ia


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=24)
    ap.add_argument("--budget", type=int, default=10**7)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    n = args.n
    ea_succ = 0
    fia_succ = 0
    fia_evals = []
    for t in range(args.trials):
        bench = make_benchmark("trap", n)
        r_ea = run_one_plus_one_ea(bench, n, args.budget,
                                   RandomSource.for_trial(args.seed, t))
        r_fia = run_one_plus_one_fast_ia(bench, n, "inv_ln_n", "geq",
                                         args.budget,
                                         RandomSource.for_trial(args.seed, t))
        ea_succ += r_ea.success
        fia_succ += r_fia.success
        if r_fia.success:
            fia_evals.append(r_fia.evaluations)

    print(f"(1+1) EA      : {ea_succ}/{args.trials} successes")
    print(f"parabolic loop: {fia_succ}/{args.trials} successes, "
          f"median {statistics.median(fia_evals):.0f} evaluations "
          f"(n ln n = {n * math.log(n):.0f})")


if __name__ == "__main__":
    main()
