"""How well bootstrap intervals describe the actual run-to-run spread.

For each observer count, reports the mean 95% CI half-width from the
bootstrap, the half-width implied by the empirical spread of estimates
across runs (1.96 standard deviations), and the interval coverage.

    python scripts/bootstrap_error.py --runs 200 --bootstrap 500
"""

import argparse

import numpy as np

from pwscale.simulate import SimConfig, run_monte_carlo


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--bootstrap", type=int, default=500)
    ap.add_argument("--observers", type=int, nargs="+", default=[10, 20, 40])
    ap.add_argument("--no-prior", action="store_true")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    print("observers,condition,bootstrap_half_width,empirical_half_width,ratio,coverage")
    for m in args.observers:
        cfg = SimConfig(observers=m, runs=args.runs, ci_runs=args.runs, ci_bootstrap=args.bootstrap,
                        use_prior=not args.no_prior, seed=args.seed)
        res = run_monte_carlo(cfg, threads=args.threads)
        empirical = 1.96 * res.std_jod
        for k in range(1, cfg.n):
            print(f"{m},{k},{res.ci_size[k]:.4f},{empirical[k]:.4f},"
                  f"{res.ci_size[k] / empirical[k]:.3f},{res.ci_coverage[k]:.3f}")
        print(f"{m},pooled,{np.mean(res.ci_size[1:]):.4f},{np.mean(empirical[1:]):.4f},,"
              f"{np.mean(res.ci_coverage[1:]):.3f}")


if __name__ == "__main__":
    main()
