#!/usr/bin/env python3
"""OneMax scaling sweep for the parabolic-schedule (1+1) loop.

Runs the gamma = 1/ln(n) setting over a doubling grid of n, fits the
c*n^a*ln(n) model and prints the per-point medians.  Writes the raw table
next to the fit so the numbers can be re-fit offline.
"""

import argparse

from immuno_opt.lab import ExperimentConfig, export, fit_scaling, run_trials


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", default="64,128,256,512,1024")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default="onemax_scaling.csv")
    args = ap.parse_args()

    config = ExperimentConfig(
        algo="fast-ia", benchmark="onemax",
        ns=tuple(int(s) for s in args.ns.split(",")),
        gammas=("inv_ln_n",), mode="geq",
        trials=args.trials, budget="1e9", seed=args.seed, out=args.out,
    )
    table = run_trials(config)
    export(table, args.out)
    fit = fit_scaling(table, "nlogn")
    for p in fit.points:
        print(f"n={p.n:5d}  median={p.median:10.1f}  success={p.success_rate:.2f}")
    print(f"fit: {fit.constant:.4g} * n^{fit.exponent:.4f} * ln(n)")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
