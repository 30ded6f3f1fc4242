"""Command-line front end: ``pwscale scale | outliers | simulate``.

Exit codes: 0 success, 1 analysis error, 2 input or configuration error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from . import report
from .ingest import FormatError, build_observer_matrices, read_trials, split_by_content, stack_observers, \
    observer_labels
from .outliers import observer_preference_profile, outlier_scores
from .scaling import JOD_SIGMA, ScaleOptions, ScalingError, scale_mle
from .simulate import Design, SimConfig, TieModel, run_monte_carlo
from .stats import BootstrapError, bootstrap_scale, pairwise_significance

log = logging.getLogger("pwscale")

EXIT_ANALYSIS = 1
EXIT_INPUT = 2


class ConfigError(ValueError):
    pass


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _scale_options(args) -> ScaleOptions:
    return ScaleOptions(sigma_ij=args.sigma, use_prior=not args.no_prior, gamma=args.gamma)


def _load(args):
    table = read_trials(args.input, args.reference)
    if not table.trials:
        raise FormatError("input contains no trials")
    return table


def _analyse(labels, stack, opts, args):
    pooled = stack.sum(axis=0)
    result = scale_mle(pooled, opts)
    boot = sig = None
    if args.bootstrap > 0:
        boot = bootstrap_scale(stack, args.bootstrap, opts, seed=args.seed, threads=args.threads)
        sig = pairwise_significance(result.jod, boot.covariance, args.alpha)
    return report.analysis_block(labels, result, boot, sig), result, boot, sig


def cmd_scale(args) -> int:
    table = _load(args)
    opts = _scale_options(args)
    labels = list(table.conditions.labels)
    keys, stack = stack_observers(build_observer_matrices(table))
    block, result, boot, sig = _analyse(labels, stack, opts, args)

    out = {"schema_version": report.SCHEMA_VERSION,
           "provenance": report.provenance("scale", args.input, args.seed, {
               **report.options_dict(opts), "bootstrap": args.bootstrap, "alpha": args.alpha,
               "reference": labels[0], "per_content": args.per_content}),
           "conditions": labels}
    out.update(block)
    out["outliers"] = None
    if stack.shape[0] >= 4:
        rep = outlier_scores(stack, opts, threads=args.threads)
        out["outliers"] = report.outlier_block(observer_labels(keys), rep)
    if args.per_content:
        per = []
        for content, sub in split_by_content(table).items():
            _, sub_stack = stack_observers(build_observer_matrices(sub))
            try:
                sub_block = _analyse(labels, sub_stack, opts, args)[0]
            except (ScalingError, BootstrapError, ValueError) as exc:
                sub_block = {"error": str(exc)}
            per.append({"content": content, **sub_block})
        out["per_content"] = per

    _write(args.output, report.dumps(out))
    if args.plot:
        ci_low = boot.ci_low if boot is not None else None
        ci_high = boot.ci_high if boot is not None else None
        _write(args.plot, report.jod_errorbar_svg(labels, result.jod, ci_low, ci_high))
    if args.graph:
        if sig is None:
            raise ConfigError("--graph needs bootstrap samples (--bootstrap > 0)")
        edges = report.neighbour_edges(labels, result.jod, sig)
        base = Path(args.graph)
        _write(str(base.with_suffix(".svg")), report.significance_graph_svg(labels, result.jod, sig))
        _write(str(base.with_suffix(".csv")), report.edges_csv(edges))
    return 0


def cmd_outliers(args) -> int:
    table = _load(args)
    opts = _scale_options(args)
    labels = list(table.conditions.labels)
    keys, stack = stack_observers(build_observer_matrices(table))
    names = observer_labels(keys)
    if stack.shape[0] < 4:
        raise FormatError(f"outlier analysis needs at least 4 observers, found {stack.shape[0]}")
    rep = outlier_scores(stack, opts, threads=args.threads)
    block = report.outlier_block(names, rep)
    out = {"schema_version": report.SCHEMA_VERSION,
           "provenance": report.provenance("outliers", args.input, None, report.options_dict(opts)),
           "conditions": labels, **block}
    _write(args.output, report.dumps(out))
    if args.table:
        _write(args.table, report.outlier_table_csv(block))
    if args.profile:
        chosen = [k for k in rep.ranking() if rep.flagged[k]]
        profiles = {names[k]: observer_preference_profile(stack, int(k)) for k in chosen}
        _write(args.profile, report.profile_csv(labels, profiles))
    return 0


# --------------------------------------------------------------------------
# simulation grids

PRESETS = {
    "prior-benefit": {
        "spacings": [1.0], "conditions": 5, "designs": ["complete", "chain"],
        "observers": [5, 10, 15, 20, 30, 40, 60], "priors": [True, False], "ties": [False],
    },
    "ties": {
        "spacings": [1.0], "conditions": 5, "designs": ["complete", "chain"],
        "observers": [5, 10, 20, 40], "priors": [True], "ties": [False, True],
    },
    "bias": {
        "spacings": [2.0], "conditions": 6, "designs": ["complete"], "observers": [10],
        "priors": [False, True], "ties": [False], "drop_unanimous": [False, True],
    },
    "qdiff": {
        "spacings": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0], "conditions": 5, "designs": ["complete", "chain"],
        "observers": [20], "priors": [True], "ties": [False, True],
    },
}

GRID_DEFAULTS = {
    "spacings": [1.0], "conditions": 5, "q_true": None, "designs": ["complete"], "observers": [10],
    "priors": [True], "ties": [False], "drop_unanimous": [False], "repetitions": 3, "runs": 1000,
    "sigma": JOD_SIGMA, "gamma": 0.1, "tie_mean": 0.7, "tie_sd": 0.3, "ci_runs": 50,
    "ci_bootstrap": 200, "seed": 0,
}


def _as_list(v):
    return v if isinstance(v, list) else [v]


def build_grid(spec: dict):
    """Expand a grid specification into ``(label, config, spacing)`` triples."""
    unknown = set(spec) - set(GRID_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    g = {**GRID_DEFAULTS, **spec}
    if g["q_true"] is not None:
        qs = [(None, tuple(float(v) for v in g["q_true"]))]
    else:
        qs = [(float(s), tuple(float(s) * k for k in range(int(g["conditions"]))))
              for s in _as_list(g["spacings"])]
    out = []
    axes = itertools.product(qs, _as_list(g["designs"]), _as_list(g["observers"]), _as_list(g["priors"]),
                             _as_list(g["ties"]), _as_list(g["drop_unanimous"]))
    for (spacing, q), design, m, prior, ties, drop in axes:
        try:
            cfg = SimConfig(
                q_true=q, design=Design(design), observers=int(m), repetitions=int(g["repetitions"]),
                runs=int(g["runs"]), sigma_ij=float(g["sigma"]),
                tie_model=TieModel(float(g["tie_mean"]), float(g["tie_sd"])) if ties else None,
                use_prior=bool(prior), gamma=float(g["gamma"]), drop_unanimous=bool(drop),
                ci_runs=min(int(g["ci_runs"]), int(g["runs"])), ci_bootstrap=int(g["ci_bootstrap"]),
                seed=int(g["seed"]))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        label = (f"{design}-m{m}-{'prior' if prior else 'noprior'}"
                 f"{'-ties' if ties else ''}{'-drop' if drop else ''}"
                 + (f"-s{spacing:g}" if spacing is not None else ""))
        out.append((label, cfg, spacing))
    return out


def _grid_spec(args) -> dict:
    spec: dict = {}
    if args.preset:
        spec.update(PRESETS[args.preset])
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        spec.update(loaded)
    flag_map = {"q": "q_true", "spacing": "spacings", "conditions": "conditions", "design": "designs",
                "observers": "observers", "repetitions": "repetitions", "runs": "runs",
                "ci_runs": "ci_runs", "ci_bootstrap": "ci_bootstrap", "seed": "seed",
                "sigma": "sigma", "gamma": "gamma"}
    for attr, key in flag_map.items():
        v = getattr(args, attr)
        if v is not None:
            spec[key] = v
    if args.no_prior:
        spec["priors"] = [False]
    if args.ties:
        spec["ties"] = [True]
    if args.drop_unanimous:
        spec["drop_unanimous"] = [True]
    return spec


def cmd_simulate(args) -> int:
    grid = build_grid(_grid_spec(args))
    rows = []
    for label, cfg, spacing in grid:
        log.info("simulating %s (%d runs)", label, cfg.runs)
        metrics = run_monte_carlo(cfg, threads=args.threads)
        rows.append(report.sim_row(label, cfg, spacing, metrics))
    _write(args.output, report.sim_csv(rows))
    if args.json:
        summary = {"schema_version": report.SCHEMA_VERSION,
                   "provenance": report.provenance("simulate", args.config or args.preset or "flags",
                                                   _grid_spec(args).get("seed", 0), _grid_spec(args)),
                   "points": rows}
        _write(args.json, report.dumps(summary))
    return 0


# --------------------------------------------------------------------------


def _add_scale_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", "-i", required=True, help="trial CSV file")
    p.add_argument("--reference", help="condition label to anchor at 0 JOD")
    p.add_argument("--no-prior", action="store_true", help="disable the finite-distance prior")
    p.add_argument("--gamma", type=float, default=0.1, help="offset added to the prior (default 0.1)")
    p.add_argument("--sigma", type=float, default=JOD_SIGMA, help="difference noise; 1.4826 gives JOD units")
    p.add_argument("--output", "-o", help="JSON report path (default stdout)")
    p.add_argument("--threads", type=int, default=None, help="worker processes (0 = all cores)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwscale", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scale", help="scale trial data to JOD scores with bootstrap intervals")
    _add_scale_flags(p)
    p.add_argument("--per-content", action="store_true", help="also scale every scene separately")
    p.add_argument("--bootstrap", type=int, default=500, help="bootstrap samples, 0 disables (default 500)")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plot", help="write a JOD error-bar SVG here")
    p.add_argument("--graph", help="write the significance graph to PATH.svg and its edge list to PATH.csv")
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("outliers", help="leave-one-out observer screening")
    _add_scale_flags(p)
    p.add_argument("--table", help="write the observer table as CSV here")
    p.add_argument("--profile", help="write selection-rate profiles of flagged observers as CSV here")
    p.set_defaults(func=cmd_outliers)

    p = sub.add_parser("simulate", help="Monte-Carlo evaluation of experimental designs")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="JSON file with grid settings")
    p.add_argument("--q", type=float, nargs="+", help="true scores (first must be 0)")
    p.add_argument("--spacing", type=float, nargs="+", help="equal score spacings to sweep")
    p.add_argument("--conditions", type=int, help="number of conditions when using --spacing")
    p.add_argument("--design", nargs="+", choices=[d.value for d in Design])
    p.add_argument("--observers", type=int, nargs="+")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--ci-runs", type=int, help="runs that also get bootstrap intervals (default 50)")
    p.add_argument("--ci-bootstrap", type=int, help="bootstrap samples per CI run (default 200)")
    p.add_argument("--no-prior", action="store_true")
    p.add_argument("--ties", action="store_true", help="enable the no-preference tie model")
    p.add_argument("--drop-unanimous", action="store_true")
    p.add_argument("--sigma", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--output", "-o", help="CSV metrics path (default stdout)")
    p.add_argument("--json", help="write a JSON summary here")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (FormatError, ConfigError, FileNotFoundError) as exc:
        print(f"pwscale: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ScalingError, BootstrapError, ValueError, RuntimeError) as exc:
        print(f"pwscale: analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
