"""Thurstone Case V scaling of pairwise-comparison count matrices.

Scores are expressed in JOD units: with the default ``sigma_ij = 1.4826`` a
preference probability of 0.75 maps to a distance of exactly one unit. The
first condition is the reference and is pinned at zero.

Count matrices are plain ``(n, n)`` integer arrays where entry ``[i, j]``
holds the number of times condition ``i`` was preferred over ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.special import gammaln, log_ndtr, ndtri

from .optimize import bfgs_maximize

JOD_SIGMA = 1.4826

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class ScalingError(ValueError):
    """Raised when a comparison matrix cannot be scaled."""


class DisconnectedGraphError(ScalingError):
    def __init__(self, components: List[List[int]]):
        self.components = components
        parts = "; ".join("{" + ", ".join(map(str, c)) + "}" for c in components)
        super().__init__(f"comparison graph is disconnected, components: {parts}")


@dataclass(frozen=True)
class ScaleOptions:
    sigma_ij: float = JOD_SIGMA
    use_prior: bool = True
    gamma: float = 0.1
    rel_tol: float = 1e-9
    grad_tol: float = 1e-6
    max_iter: int = 10_000

    def __post_init__(self):
        if not self.sigma_ij > 0:
            raise ValueError(f"sigma_ij must be positive, got {self.sigma_ij}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not (self.rel_tol > 0 and self.grad_tol > 0 and self.max_iter > 0):
            raise ValueError("tolerances and max_iter must be positive")


@dataclass
class ScaleResult:
    jod: np.ndarray
    log_posterior: float
    converged: bool
    iterations: int = 0


def check_counts(C) -> np.ndarray:
    """Validate a count matrix and return it as a float array."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"count matrix must be square, got shape {C.shape}")
    if np.any(C < 0) or not np.all(np.isfinite(C)):
        raise ValueError("count matrix entries must be finite and non-negative")
    if np.any(np.diag(C) != 0):
        raise ValueError("count matrix diagonal must be zero")
    return C


def compared_pairs(C: np.ndarray):
    """Unordered compared pairs (i < j) as two index arrays."""
    total = C + C.T
    i, j = np.nonzero(np.triu(total, 1))
    return i, j


def connected_components(C: np.ndarray) -> List[List[int]]:
    n = C.shape[0]
    adj = (C + C.T) > 0
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            k = stack.pop()
            comp.append(k)
            for nb in np.nonzero(adj[k] & ~seen)[0]:
                seen[nb] = True
                stack.append(int(nb))
        comps.append(sorted(comp))
    return comps


def require_connected(C: np.ndarray) -> None:
    comps = connected_components(C)
    if len(comps) > 1:
        raise DisconnectedGraphError(comps)


# --------------------------------------------------------------------------
# probabilities and distances


def empirical_probabilities(C) -> np.ndarray:
    """``c_ij / (c_ij + c_ji)``; NaN marks pairs with no data and the diagonal."""
    C = check_counts(C)
    total = C + C.T
    with np.errstate(invalid="ignore", divide="ignore"):
        P = np.where(total > 0, C / total, np.nan)
    np.fill_diagonal(P, np.nan)
    return P


def prob_to_jod(p, sigma_ij: float = JOD_SIGMA):
    """Map a preference probability in (0, 1) to a signed JOD distance."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise ValueError(f"probability must lie strictly inside (0, 1), got {p}")
    d = sigma_ij * ndtri(p_arr)
    return float(d) if d.ndim == 0 else d


def jod_to_prob(delta, sigma_ij: float = JOD_SIGMA):
    """Probability that a condition ``delta`` JOD better is selected."""
    return np.exp(log_ndtr(np.asarray(delta, dtype=float) / sigma_ij))


def distance_matrix(C, opts: ScaleOptions = ScaleOptions()) -> np.ndarray:
    """Probit distances ``d_ij``; +/-inf for unanimous pairs, NaN when absent."""
    P = empirical_probabilities(C)
    with np.errstate(divide="ignore"):
        D = opts.sigma_ij * ndtri(P)
    return D


def scale_least_squares(D) -> ScaleResult:
    """Least-squares fit of score differences to a finite distance matrix."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    present = ~np.isnan(D)
    np.fill_diagonal(present, False)
    if np.any(np.isinf(D[present])):
        raise ScalingError("unanimous answers present (infinite distances); use scale_mle")
    require_connected(present.astype(float))
    jod = _least_squares(D, present)
    resid = 0.0
    i, j = np.nonzero(np.triu(present | present.T, 1))
    d = _pair_distance(D, i, j)
    resid = float(np.sum(((jod[i] - jod[j]) - d) ** 2))
    return ScaleResult(jod=jod, log_posterior=-resid, converged=True)


def _pair_distance(D, i, j):
    # use whichever orientation is present, averaging when both are
    dij, dji = D[i, j], D[j, i]
    return np.where(np.isnan(dij), -dji, np.where(np.isnan(dji), dij, 0.5 * (dij - dji)))


def _least_squares(D, present) -> np.ndarray:
    n = D.shape[0]
    i, j = np.nonzero(np.triu(present | present.T, 1))
    if n == 1:
        return np.zeros(1)
    A = np.zeros((len(i), n))
    A[np.arange(len(i)), i] = 1.0
    A[np.arange(len(i)), j] = -1.0
    d = _pair_distance(D, i, j)
    sol = np.linalg.lstsq(A[:, 1:], d, rcond=None)[0]
    return np.concatenate([[0.0], sol])


# --------------------------------------------------------------------------
# likelihood


def log_binom_coef(n, c):
    return gammaln(np.asarray(n) + 1.0) - gammaln(np.asarray(c) + 1.0) - gammaln(
        np.asarray(n) - np.asarray(c) + 1.0
    )


def pair_log_likelihood(delta, c, n, sigma_ij: float = JOD_SIGMA):
    """Log binomial likelihood of ``c`` wins out of ``n`` at score difference ``delta``.

    Works on scalars or broadcastable arrays. ``log_ndtr`` keeps both tails
    accurate, so unanimous counts stay finite for any finite ``delta``.
    """
    c = np.asarray(c, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(c > n) or np.any(c < 0):
        raise ValueError("need 0 <= c <= n")
    x = np.asarray(delta, dtype=float) / sigma_ij
    out = log_binom_coef(n, c) + _xlogy_ndtr(c, x) + _xlogy_ndtr(n - c, -x)
    return float(out) if out.ndim == 0 else out


def _xlogy_ndtr(k, x):
    # k * log(Phi(x)) with 0 * (-inf) -> 0
    lp = log_ndtr(x)
    return np.where(k == 0, 0.0, k * lp)


def _mills(x):
    """phi(x) / Phi(x), stable for large negative x."""
    return np.exp(-0.5 * x * x - _LOG_SQRT_2PI - log_ndtr(x))


def pair_log_likelihood_grad(delta, c, n, sigma_ij: float = JOD_SIGMA):
    """Derivative of :func:`pair_log_likelihood` with respect to ``delta``."""
    x = np.asarray(delta, dtype=float) / sigma_ij
    c = np.asarray(c, dtype=float)
    n = np.asarray(n, dtype=float)
    return (c * _mills(x) - (n - c) * _mills(-x)) / sigma_ij


def total_log_likelihood(q, C, opts: ScaleOptions = ScaleOptions()) -> float:
    """Sum of pair log-likelihoods over compared unordered pairs."""
    C = check_counts(C)
    q = np.asarray(q, dtype=float)
    i, j = compared_pairs(C)
    if len(i) == 0:
        return 0.0
    ll = pair_log_likelihood(q[i] - q[j], C[i, j], C[i, j] + C[j, i], opts.sigma_ij)
    return float(np.sum(ll))


def log_likelihood_gradient(q, C, opts: ScaleOptions = ScaleOptions()) -> np.ndarray:
    """Gradient of :func:`total_log_likelihood` with respect to every score."""
    C = check_counts(C)
    q = np.asarray(q, dtype=float)
    i, j = compared_pairs(C)
    grad = np.zeros(C.shape[0])
    if len(i) == 0:
        return grad
    gd = pair_log_likelihood_grad(q[i] - q[j], C[i, j], C[i, j] + C[j, i], opts.sigma_ij)
    np.add.at(grad, i, gd)
    np.add.at(grad, j, -gd)
    return grad


# --------------------------------------------------------------------------
# finite distance prior


def desaturate_counts(c, n):
    """Replace unanimous counts by the nearest non-unanimous integer count."""
    c = np.asarray(c)
    n = np.asarray(n)
    if np.any(c < 0) or np.any(c > n):
        raise ValueError("need 0 <= c <= n")
    out = np.where((c == n) & (n >= 2), n - 1, np.where((c == 0) & (n >= 2), 1, c))
    return out.item() if out.ndim == 0 else out


class DistancePrior:
    """Mixture of per-pair likelihood curves over a signed score difference.

    Each compared pair contributes its likelihood in both orientations, so the
    density is symmetric in the sign of the difference. Unanimous counts are
    desaturated first so that every component has a finite mode.
    """

    def __init__(self, C, sigma_ij: float = JOD_SIGMA):
        C = check_counts(C)
        i, j = compared_pairs(C)
        if len(i) == 0:
            raise ScalingError("no compared pairs; the distance prior is undefined")
        n = C[i, j] + C[j, i]
        c = desaturate_counts(C[i, j], n).astype(float)
        # both orientations: (c, n) and (n - c, n)
        self.c = np.concatenate([c, n - c])
        self.n = np.concatenate([n, n])
        self.log_coef = log_binom_coef(self.n, self.c)
        self.sigma_ij = sigma_ij

    def density_and_slope(self, z):
        """Density and its derivative at ``z``; ``z`` may be an array."""
        x = np.asarray(z, dtype=float) / self.sigma_ij
        lp, lm = log_ndtr(x), log_ndtr(-x)
        return self._from_logcdf(x, lp, lm)

    def _from_logcdf(self, x, lp, lm):
        # every component shares log Phi(x) and log Phi(-x); only weights differ
        comp = np.exp(self.log_coef + np.multiply.outer(lp, self.c)
                      + np.multiply.outer(lm, self.n - self.c))
        logphi = -0.5 * x * x - _LOG_SQRT_2PI
        k = self.c.size
        dens = comp.sum(axis=-1) / k
        slope = (np.exp(logphi - lp) * (comp @ self.c)
                 - np.exp(logphi - lm) * (comp @ (self.n - self.c))) / (k * self.sigma_ij)
        return dens, slope

    def density(self, z):
        return self.density_and_slope(z)[0]


def prior_density(z, C, opts: ScaleOptions = ScaleOptions()):
    """Evaluate the finite-distance prior of ``C`` at difference(s) ``z``."""
    out = DistancePrior(C, opts.sigma_ij).density(z)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# maximum likelihood scaling


class _Posterior:
    """Objective over the free scores ``q[1:]`` for a fixed count matrix."""

    def __init__(self, C: np.ndarray, opts: ScaleOptions):
        self.n_cond = C.shape[0]
        i, j = compared_pairs(C)
        self.i, self.j = i, j
        self.c = C[i, j]
        self.cr = C[j, i]
        self.log_coef = log_binom_coef(self.c + self.cr, self.c)
        self.sigma = opts.sigma_ij
        self.gamma = opts.gamma
        self.prior = DistancePrior(C, opts.sigma_ij) if opts.use_prior else None
        A = np.zeros((len(i), self.n_cond))
        A[np.arange(len(i)), i] = 1.0
        A[np.arange(len(i)), j] = -1.0
        self.A_free = A[:, 1:]

    def full(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate([[0.0], x])

    def __call__(self, x: np.ndarray):
        delta = self.A_free @ x
        z = delta / self.sigma
        lp, lm = log_ndtr(z), log_ndtr(-z)
        # lp, lm are finite for finite z, so zero counts contribute exactly 0
        f = np.sum(self.log_coef + self.c * lp + self.cr * lm)
        logphi = -0.5 * z * z - _LOG_SQRT_2PI
        gd = (self.c * np.exp(logphi - lp) - self.cr * np.exp(logphi - lm)) / self.sigma
        if self.prior is not None:
            dens, slope = self.prior._from_logcdf(z, lp, lm)
            f += np.sum(np.log(dens + self.gamma))
            gd = gd + slope / (dens + self.gamma)
        return float(f), self.A_free.T @ gd


def log_posterior(q, C, opts: ScaleOptions = ScaleOptions()) -> float:
    """Objective maximized by :func:`scale_mle` (likelihood times prior, in logs)."""
    C = check_counts(C)
    q = np.asarray(q, dtype=float)
    post = _Posterior(C, opts)
    if len(post.i) == 0:
        return 0.0
    return post(q[1:] - q[0])[0]


def _initial_scores(C: np.ndarray, opts: ScaleOptions) -> np.ndarray:
    D = distance_matrix(C, opts)
    bound = 4.0 * opts.sigma_ij
    D = np.where(np.isnan(D), np.nan, np.clip(D, -bound, bound))
    present = ~np.isnan(D)
    np.fill_diagonal(present, False)
    try:
        x0 = _least_squares(D, present)
    except np.linalg.LinAlgError:
        x0 = np.zeros(C.shape[0])
    if not np.all(np.isfinite(x0)):
        x0 = np.zeros(C.shape[0])
    return x0


def scale_mle(C, opts: ScaleOptions = ScaleOptions()) -> ScaleResult:
    """Maximum-likelihood JOD scores, optionally with the finite-distance prior."""
    C = check_counts(C)
    n = C.shape[0]
    require_connected(C)
    if n == 1:
        return ScaleResult(np.zeros(1), 0.0, True, 0)
    post = _Posterior(C, opts)
    x0 = _initial_scores(C, opts)[1:]
    res = bfgs_maximize(post, x0, rel_tol=opts.rel_tol, grad_tol=opts.grad_tol,
                        max_iter=opts.max_iter)
    jod = post.full(res.x)
    return ScaleResult(jod=jod, log_posterior=res.fun, converged=res.converged,
                       iterations=res.iterations)
