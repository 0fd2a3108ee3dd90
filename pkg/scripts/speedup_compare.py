#!/usr/bin/env python3
"""Paired OneMax comparison: static hypermutation versus parabolic schedule.

Both loops see the same per-trial seeds so the ratio of evaluation counts
is a paired statistic. The static operator pays ~c*n evaluations per
mutation while the parabolic schedule pays O(1 + gamma log n), so the
median ratio grows roughly linearly with n / log n.
"""

import argparse

from immuno_opt.lab import ExperimentConfig, compare


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", type=int, nargs="+", default=[128, 256])
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    ns = tuple(args.ns)
    baseline = ExperimentConfig(
        algo="ia-hyp", benchmark="onemax", ns=ns, gammas=(),
        mode="geq", trials=args.trials, budget="1e9", seed=args.seed)
    candidate = ExperimentConfig(
        algo="fast-ia", benchmark="onemax", ns=ns, gammas=("inv_ln_n",),
        mode="geq", trials=args.trials, budget="1e9", seed=args.seed)

    result = compare(baseline, candidate)
    print(f"{'n':>6s} {'median ratio':>14s} "
          f"{'static success':>15s} {'parabolic success':>18s}")
    for p in result.points:
        print(f"{p.n:6d} {p.median_ratio:14.2f} "
              f"{p.baseline_success:15.2f} {p.candidate_success:18.2f}")


if __name__ == "__main__":
    main()
