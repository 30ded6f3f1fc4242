"""Monte-Carlo simulation of pairwise comparison experiments with known scores.

Observers follow the Thurstone Case V model: the latent difference between
two conditions is drawn from ``Normal(q_i - q_j, sigma_ij)``, so a condition
one JOD better wins 75% of the time. Optionally an observer answers "no
preference" whenever the latent difference is below a personal threshold;
those ties are split evenly between the two conditions before scaling.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .parallel import parallel_map
from .scaling import JOD_SIGMA, ScaleOptions, ScalingError, scale_mle
from .stats import bootstrap_scale, ci_half_width


class Design(str, Enum):
    COMPLETE = "complete"
    CHAIN = "chain"  # quality neighbours only: (1,2), (2,3), ...


class Outcome(Enum):
    I_WINS = "i"
    J_WINS = "j"
    TIE = "tie"


@dataclass(frozen=True)
class TieModel:
    threshold_mean: float = 0.7
    threshold_sd: float = 0.3


@dataclass(frozen=True)
class SimConfig:
    q_true: Tuple[float, ...] = (0.0, 1.0, 2.0, 3.0, 4.0)
    design: Design = Design.COMPLETE
    observers: int = 10
    repetitions: int = 3
    runs: int = 1000
    sigma_ij: float = JOD_SIGMA
    tie_model: Optional[TieModel] = None
    use_prior: bool = True
    gamma: float = 0.1
    drop_unanimous: bool = False
    ci_runs: int = 50
    ci_bootstrap: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "q_true", tuple(float(v) for v in self.q_true))
        object.__setattr__(self, "design", Design(self.design))
        if len(self.q_true) < 2:
            raise ValueError("need at least two conditions")
        if self.q_true[0] != 0:
            raise ValueError("q_true[0] must be 0 (the reference condition)")
        if self.observers < 1 or self.repetitions < 1 or self.runs < 1:
            raise ValueError("observers, repetitions and runs must all be >= 1")
        if not self.sigma_ij > 0:
            raise ValueError("sigma_ij must be positive")
        if self.ci_runs < 0 or self.ci_bootstrap < 0:
            raise ValueError("ci_runs and ci_bootstrap must be non-negative")

    @property
    def n(self) -> int:
        return len(self.q_true)

    def scale_options(self) -> ScaleOptions:
        return ScaleOptions(sigma_ij=self.sigma_ij, use_prior=self.use_prior, gamma=self.gamma)

    def total_comparisons(self) -> int:
        return self.observers * self.repetitions * len(design_pairs(self.n, self.design))

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class SimMetrics:
    mean_jod: np.ndarray
    std_jod: Optional[np.ndarray]
    bias: np.ndarray
    rmse: float
    effect_size: Optional[float]
    mean_ci_size: Optional[float]
    ci_size: Optional[np.ndarray]
    ci_coverage: Optional[np.ndarray]
    runs_ok: int
    failed_runs: int
    nonconverged: int
    run_scores: np.ndarray = field(repr=False)


def design_pairs(n: int, design=Design.COMPLETE) -> List[Tuple[int, int]]:
    """Compared index pairs (0-based, ``i < j``) for a design."""
    if n < 2:
        raise ValueError("need at least two conditions")
    if Design(design) is Design.COMPLETE:
        return list(combinations(range(n), 2))
    return [(k, k + 1) for k in range(n - 1)]


def simulate_trial(q_i: float, q_j: float, sigma_ij: float, tie_threshold: Optional[float],
                   rng: np.random.Generator) -> Outcome:
    """One forced-choice (or tie-allowed) answer for a single pair."""
    delta = rng.normal(q_i - q_j, sigma_ij)
    if tie_threshold is not None and abs(delta) < tie_threshold:
        return Outcome.TIE
    return Outcome.I_WINS if delta > 0 else Outcome.J_WINS


def apply_equal_split(tie_counts, counts, rng: np.random.Generator) -> np.ndarray:
    """Give half of each tie to both conditions, conserving the per-pair total.

    ``tie_counts[i, j]`` for ``i < j`` holds the number of ties of that pair;
    the lower triangle is ignored. An odd number of ties leaves one half-vote
    which goes to a randomly chosen side.
    """
    T = np.triu(np.asarray(tie_counts, dtype=np.int64), 1)
    C = np.array(counts, dtype=np.int64, copy=True)
    if np.any(T < 0):
        raise ValueError("tie tallies must be non-negative")
    half = T // 2
    odd = (T % 2).astype(bool)
    coin = rng.random(T.shape) < 0.5
    C += half + half.T
    C += (odd & coin).astype(np.int64)
    C += (odd & ~coin).astype(np.int64).T
    return C


def _tie_thresholds(model: TieModel, m: int, rng: np.random.Generator) -> np.ndarray:
    out = rng.normal(model.threshold_mean, model.threshold_sd, size=m)
    bad = out < 0
    while np.any(bad):
        out[bad] = rng.normal(model.threshold_mean, model.threshold_sd, size=int(bad.sum()))
        bad = out < 0
    return out


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, run_index]))


def simulate_experiment(config: SimConfig, run_index: int = 0) -> np.ndarray:
    """Per-observer count matrices, shape ``(observers, n, n)``."""
    rng = run_rng(config.seed, run_index)
    return _simulate(config, rng)


def _simulate(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    q = np.asarray(config.q_true)
    n, m, t = config.n, config.observers, config.repetitions
    pairs = np.array(design_pairs(n, config.design))
    pi, pj = pairs[:, 0], pairs[:, 1]
    thresholds = _tie_thresholds(config.tie_model, m, rng) if config.tie_model else None
    delta = rng.normal((q[pi] - q[pj])[None, :, None], config.sigma_ij, size=(m, len(pairs), t))
    if thresholds is not None:
        tie = np.abs(delta) < thresholds[:, None, None]
    else:
        tie = np.zeros(delta.shape, dtype=bool)
    wins = ((delta > 0) & ~tie).sum(axis=2)
    losses = ((delta <= 0) & ~tie).sum(axis=2)
    ties = tie.sum(axis=2)
    out = np.zeros((m, n, n), dtype=np.int64)
    out[:, pi, pj] = wins
    out[:, pj, pi] = losses
    if thresholds is not None:
        T = np.zeros((m, n, n), dtype=np.int64)
        T[:, pi, pj] = ties
        for k in range(m):
            out[k] = apply_equal_split(T[k], out[k], rng)
    return out


def random_responder(config: SimConfig, rng: np.random.Generator, count: int = 1) -> np.ndarray:
    """Observers who pick either condition with probability 0.5 on every trial."""
    n, t = config.n, config.repetitions
    pairs = np.array(design_pairs(n, config.design))
    wins = rng.binomial(t, 0.5, size=(count, len(pairs)))
    out = np.zeros((count, n, n), dtype=np.int64)
    out[:, pairs[:, 0], pairs[:, 1]] = wins
    out[:, pairs[:, 1], pairs[:, 0]] = t - wins
    return out


def drop_unanimous_pairs(C) -> np.ndarray:
    """Zero out every pair whose answers all went one way."""
    C = np.array(C, copy=True)
    unanimous = ((C == 0) | (C.T == 0)) & ((C + C.T) > 0)
    C[unanimous] = 0
    return C


def rmse(q_hat: Sequence[float], q_true: Sequence[float]) -> float:
    """Root-mean-square error over the non-reference conditions."""
    q_hat = np.asarray(q_hat, dtype=float)
    q_true = np.asarray(q_true, dtype=float)
    if q_hat.shape != q_true.shape:
        raise ValueError("score vectors differ in length")
    if q_hat.size < 2:
        raise ValueError("need at least two conditions")
    return float(np.sqrt(np.mean((q_true[1:] - q_hat[1:]) ** 2)))


def effect_size(run_scores) -> float:
    """Mean adjacent score gap divided by the spread of the upper condition's estimates.

    The reference condition never varies, so each gap ``(i, i+1)`` is
    normalized by the standard deviation of condition ``i+1``.
    """
    S = np.asarray(run_scores, dtype=float)
    if S.ndim != 2 or S.shape[0] < 2 or S.shape[1] < 2:
        raise ValueError("need at least two runs and two conditions")
    mean = S.mean(axis=0)
    sd = S.std(axis=0, ddof=1)
    if np.any(sd[1:] == 0):
        raise ValueError("estimates do not vary across runs; effect size is undefined")
    return float(np.mean(np.diff(mean) / sd[1:]))


def _one_run(run_index: int, config: SimConfig):
    rng = run_rng(config.seed, run_index)
    stack = _simulate(config, rng)
    pooled = stack.sum(axis=0)
    if config.drop_unanimous:
        pooled = drop_unanimous_pairs(pooled)
    opts = config.scale_options()
    try:
        res = scale_mle(pooled, opts)
    except ScalingError:
        return None, False, None
    ci = None
    if run_index < config.ci_runs and config.ci_bootstrap >= 2 and not config.drop_unanimous:
        try:
            boot = bootstrap_scale(stack, config.ci_bootstrap, opts,
                                   seed=int(rng.integers(2**63 - 1)), threads=1)
            ci = (boot.ci_low, boot.ci_high, ci_half_width(boot))
        except (ValueError, RuntimeError):
            ci = None
    return res.jod, res.converged, ci


def run_monte_carlo(config: SimConfig, threads: Optional[int] = None) -> SimMetrics:
    """Simulate ``config.runs`` experiments, scale each and aggregate accuracy metrics.

    Bootstrap intervals are only computed for the first ``config.ci_runs``
    runs. Runs that cannot be scaled (disconnected after dropping unanimous
    pairs) are excluded and counted in ``failed_runs``.
    """
    results = parallel_map(partial(_one_run, config=config), range(config.runs), threads)
    ok = [r for r in results if r[0] is not None]
    failed = len(results) - len(ok)
    q = np.asarray(config.q_true)
    n = config.n
    if not ok:
        nan = np.full(n, np.nan)
        return SimMetrics(nan, None, nan, float("nan"), None, None, None, None, 0, failed, 0,
                          np.zeros((0, n)))
    scores = np.array([r[0] for r in ok])
    nonconverged = sum(1 for r in ok if not r[1])
    mean = scores.mean(axis=0)
    std = scores.std(axis=0, ddof=1) if len(ok) >= 2 else None
    try:
        d = effect_size(scores)
    except ValueError:
        d = None
    cis = [r[2] for r in ok if r[2] is not None]
    if cis:
        sizes = np.array([c[2] for c in cis])
        cover = np.array([(c[0] <= q + 1e-12) & (q - 1e-12 <= c[1]) for c in cis])
        ci_size = sizes.mean(axis=0)
        mean_ci = float(ci_size[1:].mean())
        coverage = cover.mean(axis=0)
    else:
        ci_size = mean_ci = coverage = None
    run_rmse = float(np.mean([rmse(s, q) for s in scores]))
    return SimMetrics(mean, std, mean - q, run_rmse, d, mean_ci, ci_size, coverage,
                      len(ok), failed, nonconverged, scores)
