"""Small dense BFGS maximizer used by the scalers.

The problems solved here have at most a few dozen free parameters, so a
plain inverse-Hessian BFGS with Armijo backtracking is both faster and
easier to control than going through ``scipy.optimize`` for every one of
the many thousand fits a bootstrap or Monte-Carlo run needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

ObjectiveFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]


@dataclass
class MaximizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    converged: bool
    iterations: int


def bfgs_maximize(
    fun: ObjectiveFn,
    x0: np.ndarray,
    rel_tol: float = 1e-9,
    grad_tol: float = 1e-6,
    max_iter: int = 10_000,
) -> MaximizeResult:
    """Maximize ``fun`` (returning value and gradient) starting at ``x0``.

    Stops when the gradient infinity-norm drops below ``grad_tol`` or the
    relative change of the objective between accepted iterates drops below
    ``rel_tol``. ``converged`` is False only when ``max_iter`` is exhausted or
    the line search cannot make progress from a non-stationary point.
    """
    x = np.array(x0, dtype=float)
    dim = x.size
    f, g = fun(x)
    if dim == 0:
        return MaximizeResult(x, f, g, True, 0)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the starting point")

    # inverse Hessian approximation of the *negated* objective
    h_inv = np.eye(dim)
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) < grad_tol:
            return MaximizeResult(x, f, g, True, it - 1)
        direction = h_inv @ g
        slope = g @ direction
        if slope <= 0:
            # lost positive definiteness; restart from steepest ascent
            h_inv = np.eye(dim)
            direction = g.copy()
            slope = g @ g
        # keep the first trial step bounded in JOD units
        step_norm = np.max(np.abs(direction))
        step = 1.0 if step_norm <= 5.0 else 5.0 / step_norm

        accepted = False
        for _ in range(60):
            x_new = x + step * direction
            f_new, g_new = fun(x_new)
            if np.isfinite(f_new) and f_new >= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = np.max(np.abs(g)) < np.sqrt(grad_tol)
            return MaximizeResult(x, f, g, bool(converged), it)

        s = x_new - x
        y = g - g_new  # gradient change of the negated objective
        sy = s @ y
        change = abs(f_new - f)
        x, f, g = x_new, f_new, g_new
        if change <= rel_tol * max(1.0, abs(f)):
            return MaximizeResult(x, f, g, True, it)
        if sy > 1e-12:
            if it == 1:
                h_inv = np.eye(dim) * (sy / (y @ y))
            rho = 1.0 / sy
            hy = h_inv @ y
            h_inv += (rho * rho * (y @ hy) + rho) * np.outer(s, s) - rho * (
                np.outer(hy, s) + np.outer(s, hy)
            )
    return MaximizeResult(x, f, g, False, max_iter)
