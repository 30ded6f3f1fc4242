"""Leave-one-out screening of observers whose answers disagree with the rest."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Optional

import numpy as np

from .parallel import parallel_map
from .scaling import ScaleOptions, compared_pairs, pair_log_likelihood, scale_mle
from .stats import as_observer_stack

IQR_THRESHOLD = 1.5


@dataclass
class OutlierReport:
    log_likelihood: np.ndarray
    iqr_score: np.ndarray
    flagged: np.ndarray
    q1: float
    q3: float
    threshold: float = IQR_THRESHOLD

    def ranking(self) -> np.ndarray:
        """Observer indices ordered by decreasing score (ties keep input order)."""
        return np.argsort(-self.iqr_score, kind="stable")


@dataclass
class PreferenceProfile:
    observer: np.ndarray  # (n,) NaN where the observer never saw the condition
    others: np.ndarray  # (m - 1, n)
    pooled: np.ndarray  # (n,) same statistic on the pooled matrix of all observers


def observer_loo_loglik(per_observer, observer: int, opts: ScaleOptions = ScaleOptions()) -> float:
    """Log-likelihood of one observer's answers under the scale fitted to everyone else."""
    stack = as_observer_stack(per_observer)
    m = stack.shape[0]
    if m < 3:
        raise ValueError("leave-one-out analysis needs at least three observers")
    if not 0 <= observer < m:
        raise IndexError(f"observer index {observer} out of range for {m} observers")
    rest = np.delete(stack, observer, axis=0).sum(axis=0)
    q = scale_mle(rest, opts).jod
    own = stack[observer]
    i, j = compared_pairs(own)
    if len(i) == 0:
        return 0.0
    ll = pair_log_likelihood(q[i] - q[j], own[i, j], own[i, j] + own[j, i], opts.sigma_ij)
    return float(np.sum(ll))


def iqr_scores(values) -> tuple:
    """Distance below the first quartile in multiples of the interquartile range."""
    L = np.asarray(values, dtype=float)
    q1, q3 = np.percentile(L, [25, 75])
    iqr = q3 - q1
    if iqr <= 0:
        return np.zeros_like(L), float(q1), float(q3)
    return np.maximum(0.0, (q1 - L) / iqr), float(q1), float(q3)


def outlier_scores(per_observer, opts: ScaleOptions = ScaleOptions(),
                   threads: Optional[int] = None) -> OutlierReport:
    stack = as_observer_stack(per_observer)
    if stack.shape[0] < 4:
        raise ValueError("outlier scores need at least four observers")
    work = partial(observer_loo_loglik, stack, opts=opts)
    L = np.array(parallel_map(work, range(stack.shape[0]), threads))
    scores, q1, q3 = iqr_scores(L)
    return OutlierReport(L, scores, scores >= IQR_THRESHOLD, q1, q3)


def _selection_rate(C: np.ndarray) -> np.ndarray:
    wins = C.sum(axis=1)
    total = wins + C.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, wins / np.where(total > 0, total, 1), np.nan)


def observer_preference_profile(per_observer, observer: int) -> PreferenceProfile:
    """Per-condition rate of being selected, for one observer and for all the others.

    No scaling is involved; this is the raw material for a box plot that
    shows where a flagged observer departs from the crowd.
    """
    stack = as_observer_stack(per_observer)
    if not 0 <= observer < stack.shape[0]:
        raise IndexError(f"observer index {observer} out of range")
    others = np.array([_selection_rate(stack[k]) for k in range(stack.shape[0]) if k != observer])
    return PreferenceProfile(_selection_rate(stack[observer]),
                             others.reshape(-1, stack.shape[1]),
                             _selection_rate(stack.sum(axis=0)))
