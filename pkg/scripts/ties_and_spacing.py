"""Effect of allowing "no preference" answers, across quality spacings.

Ties are split equally between the two conditions before scaling. Prints
bias and RMSE for forced choice and for the tie model at each spacing.

    python scripts/ties_and_spacing.py --runs 500
"""

import argparse

from pwscale.simulate import SimConfig, TieModel, run_monte_carlo


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=500)
    ap.add_argument("--spacing", type=float, nargs="+", default=[0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
    ap.add_argument("--observers", type=int, default=20)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    print("spacing,ties,rmse,mean_bias,bias_last")
    for s in args.spacing:
        q = tuple(s * k for k in range(5))
        for ties in (False, True):
            cfg = SimConfig(q_true=q, observers=args.observers, runs=args.runs, ci_runs=0,
                            tie_model=TieModel() if ties else None, seed=args.seed)
            res = run_monte_carlo(cfg, threads=args.threads)
            print(f"{s:g},{int(ties)},{res.rmse:.4f},{res.bias[1:].mean():.4f},{res.bias[-1]:.4f}")


if __name__ == "__main__":
    main()
