"""RMSE and effect size with and without the prior as the number of observers grows.

Runs both the complete and the neighbour-chain design at 1 JOD spacing.

    python scripts/prior_benefit.py --runs 500 --observers 5 10 20 40
"""

import argparse

from pwscale.simulate import SimConfig, run_monte_carlo


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=500)
    ap.add_argument("--observers", type=int, nargs="+", default=[5, 10, 15, 20, 30, 40])
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    print("design,observers,prior,rmse,effect_size")
    for design in ("complete", "chain"):
        for m in args.observers:
            for prior in (True, False):
                cfg = SimConfig(design=design, observers=m, runs=args.runs, use_prior=prior,
                                ci_runs=0, seed=args.seed)
                res = run_monte_carlo(cfg, threads=args.threads)
                d = "" if res.effect_size is None else f"{res.effect_size:.4f}"
                print(f"{design},{m},{int(prior)},{res.rmse:.4f},{d}")


if __name__ == "__main__":
    main()
