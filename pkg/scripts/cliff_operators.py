#!/usr/bin/env python3
"""Cliff at n=64, d=16: three population settings side by side.

Runs the (mu+dup)-style immune loop with mu=1, dup=1, tau=2 n ln n and a
10^6 budget under three operator/gamma pairings:

  1. best-of-mutation with gamma = 1/(n ln^2 n)  (rare interior evals)
  2. first-constructive with gamma = 1/(n ln^2 n)
  3. best-of-mutation with gamma = 1/ln n        (frequent interior evals)

Reports success counts and the median evaluation count of the successes.
"""

import argparse
import math
import statistics

from immuno_opt.algorithms import OptIAConfig, run_fast_opt_ia
from immuno_opt.benchmarks import make_benchmark
from immuno_opt.core import RandomSource


def run_setting(label, operator, gamma_preset, args):
    n = args.n
    tau = 2.0 * n * math.log(n)
    succ = 0
    evals = []
    for t in range(args.trials):
        cfg = OptIAConfig(mu=1, dup=1, tau=tau, operator=operator,
                          gamma_preset=gamma_preset, mode="gt")
        bench = make_benchmark("cliff", n, d=args.d)
        res = run_fast_opt_ia(bench, cfg, n, args.budget,
                              RandomSource.for_trial(args.seed, t))
        succ += res.success
        if res.success:
            evals.append(res.evaluations)
    med = statistics.median(evals) if evals else float("nan")
    print(f"{label:42s}: {succ:3d}/{args.trials} successes, "
          f"median evals {med:.0f}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--d", type=int, default=16)
    ap.add_argument("--budget", type=int, default=10**6)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    run_setting("best-of-mutation, gamma=1/(n ln^2 n)", "phype_bm",
                "inv_n_log2_sq", args)
    run_setting("first-constructive, gamma=1/(n ln^2 n)", "phype_fcm",
                "inv_n_log2_sq", args)
    run_setting("best-of-mutation, gamma=1/ln n", "phype_bm",
                "inv_ln_n", args)


if __name__ == "__main__":
    main()
