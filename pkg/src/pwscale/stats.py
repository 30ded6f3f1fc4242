"""Observer bootstrap and significance testing for JOD scores."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr

from .parallel import parallel_map
from .scaling import ScaleOptions, ScalingError, check_counts, scale_mle

DEFAULT_BOOTSTRAP = 500


class BootstrapError(RuntimeError):
    pass


@dataclass
class BootstrapResult:
    samples: np.ndarray  # (B, n)
    ci_low: np.ndarray
    ci_high: np.ndarray
    covariance: np.ndarray
    mean_jod: np.ndarray
    redraws: int = 0

    @property
    def B(self) -> int:
        return self.samples.shape[0]


@dataclass
class SignificanceReport:
    alpha: float
    z_scores: np.ndarray
    p_values: np.ndarray
    significant: np.ndarray
    degenerate: np.ndarray  # zero difference variance with unequal scores


def as_observer_stack(per_observer) -> np.ndarray:
    """Turn a collection of per-observer count matrices into an ``(m, n, n)`` array."""
    if isinstance(per_observer, dict):
        per_observer = list(per_observer.values())
    stack = np.asarray([check_counts(m) for m in per_observer]) if len(per_observer) else None
    if stack is None or stack.ndim != 3:
        raise ValueError("need a non-empty collection of equally sized count matrices")
    return stack


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _one_pseudo_sample(index: int, stack: np.ndarray, opts: ScaleOptions, seed: int,
                       max_redraws: int) -> Tuple[np.ndarray, int]:
    rng = _sample_rng(seed, index)
    m = stack.shape[0]
    for redraw in range(max_redraws + 1):
        pick = rng.integers(0, m, size=m)
        try:
            return scale_mle(stack[pick].sum(axis=0), opts).jod, redraw
        except ScalingError:
            continue
    raise BootstrapError(f"pseudo-sample {index} could not be scaled after {max_redraws} redraws")


def bootstrap_scale(per_observer, B: int = DEFAULT_BOOTSTRAP, opts: ScaleOptions = ScaleOptions(),
                    seed: int = 0, threads: Optional[int] = None) -> BootstrapResult:
    """Resample observers with replacement ``B`` times and rescale each pseudo-sample.

    Pseudo-sample ``k`` draws from its own stream seeded by ``(seed, k)``, so
    the result does not depend on ``threads``. A pseudo-sample whose pooled
    comparison graph is disconnected is redrawn; more than ``10 * B`` redraws
    in total is an error.
    """
    stack = as_observer_stack(per_observer)
    if stack.shape[0] < 2:
        raise ValueError("bootstrapping needs at least two observers")
    if B < 1:
        raise ValueError("B must be at least 1")
    cap = 10 * B
    work = partial(_one_pseudo_sample, stack=stack, opts=opts, seed=seed, max_redraws=cap)
    out = parallel_map(work, range(B), threads)
    samples = np.array([jod for jod, _ in out])
    redraws = sum(r for _, r in out)
    if redraws > cap:
        raise BootstrapError(f"{redraws} redraws exceeded the cap of {cap}")
    return summarize_samples(samples, redraws)


def summarize_samples(samples: np.ndarray, redraws: int = 0) -> BootstrapResult:
    samples = np.asarray(samples, dtype=float)
    low, high = np.percentile(samples, [2.5, 97.5], axis=0)
    if samples.shape[0] >= 2:
        cov = np.cov(samples, rowvar=False, ddof=1)
    else:
        cov = np.zeros((samples.shape[1], samples.shape[1]))
    cov = np.atleast_2d(cov)
    cov = 0.5 * (cov + cov.T)
    return BootstrapResult(samples, low, high, cov, samples.mean(axis=0), redraws)


def confidence_intervals(result: BootstrapResult) -> List[Tuple[float, float]]:
    """Per-condition 95% percentile intervals."""
    if result.B < 2:
        raise ValueError("confidence intervals need at least two bootstrap samples")
    return [(float(lo), float(hi)) for lo, hi in zip(result.ci_low, result.ci_high)]


def ci_half_width(result: BootstrapResult) -> np.ndarray:
    """Mean of the distances from the sample mean to the upper and lower bounds."""
    return 0.5 * ((result.ci_high - result.mean_jod) + (result.mean_jod - result.ci_low))


def difference_variance(covariance, i: int, j: int) -> float:
    S = np.asarray(covariance, dtype=float)
    v = S[i, i] + S[j, j] - 2.0 * S[i, j]
    # PSD covariance can still give tiny negative values from rounding
    return max(float(v), 0.0) if v > -1e-12 else float(v)


def pairwise_significance(jod: Sequence[float], covariance, alpha: float = 0.05) -> SignificanceReport:
    """Two-tailed z-tests of every score difference against zero."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    q = np.asarray(jod, dtype=float)
    S = np.asarray(covariance, dtype=float)
    if S.shape != (q.size, q.size):
        raise ValueError("covariance shape does not match the score vector")
    d = np.diag(S)
    v = np.maximum(d[:, None] + d[None, :] - 2.0 * S, 0.0)
    diff = q[:, None] - q[None, :]
    zero_v = v <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(zero_v, np.sign(diff) * np.inf, diff / np.sqrt(np.where(zero_v, 1.0, v)))
    z = np.where(zero_v & (diff == 0), 0.0, z)
    p = 2.0 * ndtr(-np.abs(z))
    np.fill_diagonal(z, 0.0)
    np.fill_diagonal(p, 1.0)
    degenerate = zero_v & (diff != 0)
    return SignificanceReport(alpha, z, p, p < alpha, degenerate)
