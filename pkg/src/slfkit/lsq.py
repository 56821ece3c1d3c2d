"""Damped least squares (Levenberg-Marquardt) with box projection.

Fixed schedule shared by all fitting stages: damping starts at 1e-3, grows
x10 on a rejected step, shrinks /10 on an accepted one; iteration stops when
the relative cost decrease of an accepted step falls below 1e-10 or after
`max_iter` total steps (accepted or not).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAMBDA0 = 1e-3
COST_TOL = 1e-10
MAX_ITER = 100


@dataclass
class LMResult:
    x: np.ndarray
    cost: float  # sum of squared residuals
    rms: float
    n_iter: int
    converged: bool


def numeric_jacobian(residual_fn, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of residual_fn at x."""
    x = np.asarray(x, dtype=np.float64)
    r0 = np.asarray(residual_fn(x))
    jac = np.zeros((len(r0), len(x)))
    for k in range(len(x)):
        h = rel_step * max(1.0, abs(x[k]))
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        jac[:, k] = (np.asarray(residual_fn(xp)) - np.asarray(residual_fn(xm))) / (2 * h)
    return jac


def levenberg_marquardt(
    residual_fn,
    x0,
    jacobian_fn=None,
    bounds=None,
    max_iter: int = MAX_ITER,
    lambda0: float = LAMBDA0,
    cost_tol: float = COST_TOL,
) -> LMResult:
    """Minimize sum(residual_fn(x)**2) from x0.

    `bounds` is an optional (lo, hi) pair of arrays; trial steps are clipped
    into the box before evaluation. `jacobian_fn` defaults to central
    differences.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    if jacobian_fn is None:
        jacobian_fn = lambda xx: numeric_jacobian(residual_fn, xx)
    lo, hi = (None, None) if bounds is None else bounds
    if lo is not None:
        x = np.clip(x, lo, hi)
    r = np.asarray(residual_fn(x), dtype=np.float64)
    cost = float(r @ r)
    lam = lambda0
    converged = False
    it = 0
    jac = None
    while it < max_iter:
        if cost < 1e-300:
            converged = True
            break
        it += 1
        if jac is None:
            jac = np.asarray(jacobian_fn(x), dtype=np.float64)
        jtj = jac.T @ jac
        g = jac.T @ r
        diag = np.maximum(np.diag(jtj), 1e-12)
        try:
            step = np.linalg.solve(jtj + lam * np.diag(diag), -g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        x_try = x + step
        if lo is not None:
            x_try = np.clip(x_try, lo, hi)
        r_try = np.asarray(residual_fn(x_try), dtype=np.float64)
        cost_try = float(r_try @ r_try)
        if cost_try < cost:
            rel_drop = (cost - cost_try) / max(cost, 1e-300)
            x, r, cost = x_try, r_try, cost_try
            jac = None
            lam = max(lam / 10.0, 1e-12)
            if rel_drop < cost_tol:
                converged = True
                break
        else:
            lam *= 10.0
            if lam > 1e15:
                converged = True  # stalled: no representable step improves
                break
    rms = float(np.sqrt(cost / max(len(r), 1)))
    return LMResult(x=x, cost=cost, rms=rms, n_iter=it, converged=converged)
