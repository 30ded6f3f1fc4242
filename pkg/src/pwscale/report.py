"""JSON/CSV report assembly and small hand-written SVG figures."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from html import escape
from importlib import resources
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .outliers import OutlierReport, PreferenceProfile
from .scaling import ScaleOptions, ScaleResult
from .simulate import SimConfig, SimMetrics
from .stats import BootstrapResult, SignificanceReport

SCHEMA_VERSION = "1.0"


def _num(x) -> Optional[float]:
    """JSON-safe float: non-finite values become null."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _vec(v) -> Optional[List[Optional[float]]]:
    return None if v is None else [_num(x) for x in np.asarray(v, dtype=float).ravel()]


def _mat(M) -> List[List[Optional[float]]]:
    return [_vec(row) for row in np.asarray(M, dtype=float)]


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def load_schema(name: str) -> dict:
    """JSON schema shipped with the package, e.g. ``load_schema("scale_report")``."""
    if not name.endswith(".json"):
        name += ".schema.json"
    text = resources.files("pwscale").joinpath("schema", name).read_text(encoding="utf-8")
    return json.loads(text)


def options_dict(opts: ScaleOptions) -> dict:
    return {k: v for k, v in dataclasses.asdict(opts).items()}


def provenance(command: str, input_path: str, seed: Optional[int], options: dict) -> dict:
    return {
        "command": command,
        "input": str(input_path),
        "seed": seed,
        "options": options,
        "tool_version": __version__,
    }


def analysis_block(labels: Sequence[str], result: ScaleResult, boot: Optional[BootstrapResult],
                   sig: Optional[SignificanceReport]) -> dict:
    block = {
        "jod": _vec(result.jod),
        "log_posterior": _num(result.log_posterior),
        "converged": bool(result.converged),
        "bootstrap": None,
        "significance": None,
    }
    if boot is not None:
        low, high = _vec(boot.ci_low), _vec(boot.ci_high)
        # the reference is fixed, so it has no interval
        low[0] = high[0] = None
        block["bootstrap"] = {
            "B": boot.B,
            "ci_low": low,
            "ci_high": high,
            "mean_jod": _vec(boot.mean_jod),
            "covariance": _mat(boot.covariance),
            "redraws": boot.redraws,
        }
    if sig is not None:
        pairs = []
        n = len(labels)
        for i in range(n):
            for j in range(i + 1, n):
                pairs.append({
                    "condition_a": labels[i],
                    "condition_b": labels[j],
                    "z": _num(sig.z_scores[i, j]),
                    "p_value": _num(sig.p_values[i, j]),
                    "significant": bool(sig.significant[i, j]),
                    "degenerate": bool(sig.degenerate[i, j]),
                })
        block["significance"] = {
            "alpha": sig.alpha,
            "correction": "none",
            "pairs": pairs,
        }
    return block


def outlier_block(observers: Sequence[str], rep: OutlierReport) -> dict:
    order = rep.ranking()
    return {
        "threshold": rep.threshold,
        "q1": _num(rep.q1),
        "q3": _num(rep.q3),
        "observers": [
            {
                "observer": observers[k],
                "log_likelihood": _num(rep.log_likelihood[k]),
                "iqr_score": _num(rep.iqr_score[k]),
                "flagged": bool(rep.flagged[k]),
            }
            for k in order
        ],
        "note": "flags are advisory; inspect flagged observers before removing any data",
    }


def outlier_table_csv(block: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["observer", "log_likelihood", "iqr_score", "flagged"])
    for row in block["observers"]:
        w.writerow([row["observer"], _fmt(row["log_likelihood"]), _fmt(row["iqr_score"]),
                    int(row["flagged"])])
    return buf.getvalue()


def profile_csv(labels: Sequence[str], profiles: Dict[str, PreferenceProfile]) -> str:
    """Long-format selection rates: one row per (observer, condition, role)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["flagged_observer", "condition", "role", "value"])
    for name, prof in profiles.items():
        for c, lab in enumerate(labels):
            w.writerow([name, lab, "observer", _fmt(prof.observer[c])])
            for v in prof.others[:, c]:
                w.writerow([name, lab, "population", _fmt(v)])
    return buf.getvalue()


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "" if not math.isfinite(x) else repr(round(x, 10))


# --------------------------------------------------------------------------
# simulation output

SIM_COLUMNS = ["label", "design", "observers", "repetitions", "spacing", "use_prior", "ties",
               "drop_unanimous", "runs", "runs_ok", "failed_runs", "nonconverged",
               "total_comparisons", "effect_size", "mean_ci_size", "rmse", "mean_bias"]


def sim_row(label: str, cfg: SimConfig, spacing: Optional[float], metrics: SimMetrics) -> dict:
    nonanchor = metrics.bias[1:]
    row = {
        "label": label,
        "design": cfg.design.value,
        "observers": cfg.observers,
        "repetitions": cfg.repetitions,
        "spacing": spacing,
        "use_prior": cfg.use_prior,
        "ties": cfg.tie_model is not None,
        "drop_unanimous": cfg.drop_unanimous,
        "runs": cfg.runs,
        "runs_ok": metrics.runs_ok,
        "failed_runs": metrics.failed_runs,
        "nonconverged": metrics.nonconverged,
        "total_comparisons": cfg.total_comparisons(),
        "effect_size": _num(metrics.effect_size),
        "mean_ci_size": _num(metrics.mean_ci_size),
        "rmse": _num(metrics.rmse),
        "mean_bias": _num(np.mean(nonanchor)) if nonanchor.size else None,
        "q_true": list(cfg.q_true),
        "mean_jod": _vec(metrics.mean_jod),
        "bias": _vec(metrics.bias),
        "ci_size": _vec(metrics.ci_size),
        "ci_coverage": _vec(metrics.ci_coverage),
    }
    return row


def sim_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    width = max((len(r["q_true"]) for r in rows), default=0)
    header = SIM_COLUMNS + [f"bias_{k + 1}" for k in range(width)] + [
        f"mean_jod_{k + 1}" for k in range(width)]
    w.writerow(header)
    for r in rows:
        cells = []
        for col in SIM_COLUMNS:
            v = r[col]
            if isinstance(v, bool):
                cells.append(int(v))
            elif isinstance(v, float):
                cells.append(_fmt(v))
            elif v is None:
                cells.append("")
            else:
                cells.append(v)
        for key in ("bias", "mean_jod"):
            vals = r[key] or []
            cells += [_fmt(v) for v in vals] + [""] * (width - len(vals))
        w.writerow(cells)
    return buf.getvalue()


# --------------------------------------------------------------------------
# SVG figures

_W, _H, _PAD = 640, 360, 56


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _svg(body: List[str], width=_W, height=_H) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">')
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>'] + body
                     + ["</svg>"]) + "\n"


def jod_errorbar_svg(labels: Sequence[str], jod, ci_low=None, ci_high=None) -> str:
    """JOD score per condition with bootstrap interval bars (none for the reference)."""
    jod = np.asarray(jod, dtype=float)
    vals = [jod]
    if ci_low is not None:
        vals += [np.asarray(ci_low, dtype=float)[1:], np.asarray(ci_high, dtype=float)[1:]]
    allv = np.concatenate([v.ravel() for v in vals])
    lo, hi = float(np.min(allv)), float(np.max(allv))
    margin = 0.1 * (hi - lo or 1.0)
    y = _scale(lo - margin, hi + margin, _H - _PAD, _PAD / 2)
    n = len(labels)
    x = _scale(-0.5, n - 0.5, _PAD, _W - _PAD / 2)
    body = [f'<line x1="{_PAD}" y1="{_PAD / 2}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
            f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD / 2}" y2="{_H - _PAD}" stroke="black"/>',
            f'<text x="14" y="{_H / 2:.1f}" transform="rotate(-90 14 {_H / 2:.1f})" '
            f'text-anchor="middle">Quality [JOD]</text>']
    for tick in np.linspace(lo - margin, hi + margin, 6):
        body.append(f'<text x="{_PAD - 6}" y="{y(tick) + 4:.1f}" text-anchor="end">{tick:.2f}</text>')
    zero = y(0.0)
    body.append(f'<line x1="{_PAD}" y1="{zero:.1f}" x2="{_W - _PAD / 2}" y2="{zero:.1f}" '
                f'stroke="#999" stroke-dasharray="4 3"/>')
    for k, lab in enumerate(labels):
        cx, cy = x(k), y(jod[k])
        if ci_low is not None and k > 0:
            body.append(f'<line x1="{cx:.1f}" y1="{y(ci_low[k]):.1f}" x2="{cx:.1f}" '
                        f'y2="{y(ci_high[k]):.1f}" stroke="#1f4e9c" stroke-width="2"/>')
            for end in (ci_low[k], ci_high[k]):
                body.append(f'<line x1="{cx - 6:.1f}" y1="{y(end):.1f}" x2="{cx + 6:.1f}" '
                            f'y2="{y(end):.1f}" stroke="#1f4e9c" stroke-width="2"/>')
        body.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="4" fill="#c0392b"/>')
        body.append(f'<text x="{cx:.1f}" y="{_H - _PAD + 18}" text-anchor="middle">{escape(lab)}</text>')
    return _svg(body)


def neighbour_edges(labels: Sequence[str], jod, sig: SignificanceReport) -> List[dict]:
    """Edges between conditions that are adjacent once sorted by score."""
    order = np.argsort(np.asarray(jod, dtype=float), kind="stable")
    edges = []
    for a, b in zip(order[:-1], order[1:]):
        edges.append({"condition_a": labels[a], "condition_b": labels[b],
                      "p_value": _num(sig.p_values[a, b]),
                      "significant": bool(sig.significant[a, b])})
    return edges


def edges_csv(edges: List[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["condition_a", "condition_b", "p_value", "significant"])
    for e in edges:
        w.writerow([e["condition_a"], e["condition_b"], _fmt(e["p_value"]), int(e["significant"])])
    return buf.getvalue()


def significance_graph_svg(labels: Sequence[str], jod, sig: SignificanceReport) -> str:
    """Conditions placed on the JOD axis, neighbours joined by solid (significant) or dashed lines."""
    jod = np.asarray(jod, dtype=float)
    order = np.argsort(jod, kind="stable")
    lo, hi = float(jod.min()), float(jod.max())
    margin = 0.08 * (hi - lo or 1.0)
    x = _scale(lo - margin, hi + margin, _PAD, _W - _PAD)
    levels = [_H / 2 - 50, _H / 2 + 50]
    pos = {}
    for rank, k in enumerate(order):
        pos[k] = (x(jod[k]), levels[rank % 2])
    body = [f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
            f'<text x="{_W / 2}" y="{_H - 14}" text-anchor="middle">Quality [JOD]</text>']
    for tick in np.linspace(lo - margin, hi + margin, 6):
        body.append(f'<text x="{x(tick):.1f}" y="{_H - _PAD + 16}" text-anchor="middle">{tick:.2f}</text>')
    for a, b in zip(order[:-1], order[1:]):
        (x1, y1), (x2, y2) = pos[a], pos[b]
        if sig.significant[a, b]:
            style = 'stroke="#1f4e9c" stroke-width="2"'
        else:
            style = 'stroke="#c0392b" stroke-width="2" stroke-dasharray="6 4"'
        body.append(f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" {style}/>')
    for k in order:
        cx, cy = pos[k]
        body.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="5" fill="#c0392b"/>')
        body.append(f'<text x="{cx:.1f}" y="{cy - 10:.1f}" text-anchor="middle">{escape(labels[k])}</text>')
    return _svg(body)
