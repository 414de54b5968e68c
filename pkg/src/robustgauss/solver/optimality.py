from __future__ import annotations

import math

import numpy as np

from .config import FitRaw, SolverConfig

# Columns whose residual norm falls below this fraction of the data scale are
# treated as interpolated: their fidelity subgradient is set-valued.
DEAD_COLUMN_RTOL = 1e-8


def row_norms(m: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", m, m))


def col_norms(m: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->j", m, m))


def offdiag_l1(b: np.ndarray) -> float:
    return float(np.abs(b).sum() - np.abs(np.diag(b)).sum())


def group_soft_threshold(m: np.ndarray, t: float) -> np.ndarray:
    """Row-wise prox of ``t * ||.||_{2,1}``; shrunk rows are exactly zero."""
    norms = row_norms(m)
    scale = np.zeros_like(norms)
    keep = norms > t
    scale[keep] = 1.0 - t / norms[keep]
    return m * scale[:, None]


def soft_threshold(m: np.ndarray, t: float) -> np.ndarray:
    return np.sign(m) * np.maximum(np.abs(m) - t, 0.0)


def residual_matrix(xn: np.ndarray, b: np.ndarray, theta: np.ndarray, c: np.ndarray | None = None) -> np.ndarray:
    """``X B - u c^T - Theta`` for a scaled design."""
    r = xn @ b - theta
    if c is not None:
        r = r - c[None, :] / math.sqrt(xn.shape[0])
    return r


def objective(xn: np.ndarray, b: np.ndarray, theta: np.ndarray, c: np.ndarray | None, config: SolverConfig) -> float:
    """Value of the joint program at ``(B, Theta, c)``."""
    fidelity = float(col_norms(residual_matrix(xn, b, theta, c)).sum())
    pen_b = float(np.abs(b).sum()) if config.penalize_diagonal else offdiag_l1(b)
    return fidelity + config.lam * (float(row_norms(theta).sum()) + config.gamma * pen_b)


def _dead_column_certificate(
    xn: np.ndarray, b_col: np.ndarray, j: int, targets: np.ndarray, rows: np.ndarray,
    lg: float, fit_intercept: bool,
) -> tuple[np.ndarray, float]:
    """Least-norm fidelity subgradient for an interpolated column.

    Solves the linear conditions that stationarity imposes on ``g_j``
    (prescribed entries on active rows of Theta, the intercept condition and
    the conditions from the support of ``B_{., j}``) in the minimum-norm
    sense.  Returns ``g_j`` and the residual of that linear system.
    """
    n, p = xn.shape
    eq_rows, eq_rhs = [], []
    for i, t in zip(rows, targets):
        e = np.zeros(n)
        e[i] = 1.0
        eq_rows.append(e)
        eq_rhs.append(t)
    if fit_intercept:
        eq_rows.append(np.full(n, 1.0 / math.sqrt(n)))
        eq_rhs.append(0.0)
    for k in range(p):
        if k == j:
            continue
        if b_col[k] != 0:
            eq_rows.append(xn[:, k])
            eq_rhs.append(-lg * np.sign(b_col[k]))
        elif lg == 0:
            eq_rows.append(xn[:, k])
            eq_rhs.append(0.0)
    if not eq_rows:
        return np.zeros(n), 0.0
    a = np.array(eq_rows)
    f = np.array(eq_rhs)
    g, *_ = np.linalg.lstsq(a, f, rcond=None)
    return g, float(np.abs(a @ g - f).max())


def kkt_residual(fit: FitRaw, xn: np.ndarray, config: SolverConfig, *, zero_tol: float = 0.0) -> float:
    """Largest violation of the subgradient optimality conditions.

    With ``R = X B - u c^T - Theta`` and ``g_j = R_j / ||R_j||`` for each
    column with a nonzero residual, an optimum satisfies, row by row,
    ``g_i = lam * Theta_i / ||Theta_i||`` on active rows and
    ``||g_i|| <= lam`` elsewhere; for off-diagonal ``B_kj``,
    ``X_k^T g_j = -lam * gamma * sign(B_kj)`` on the support and
    ``|X_k^T g_j| <= lam * gamma`` off it; and ``u^T g_j = 0`` when an
    intercept is fitted.  Interpolated columns (zero residual) admit any
    ``g_j`` in the unit ball: the least-norm one meeting the linear
    conditions is used and its excess norm counts as a violation.
    """
    xn = np.asarray(xn, dtype=float)
    n, p = xn.shape
    c = fit.c_hat if config.fit_intercept else None
    r = residual_matrix(xn, fit.b_hat, fit.theta_hat, c)
    norms = col_norms(r)
    scale = max(float(col_norms(xn).max()), np.finfo(float).tiny)
    dead = norms <= DEAD_COLUMN_RTOL * scale
    g = np.zeros_like(r)
    g[:, ~dead] = r[:, ~dead] / norms[~dead]

    lam = config.lam
    lg = lam * config.gamma
    theta = fit.theta_hat
    tn = row_norms(theta)
    active = tn > zero_tol
    direction = np.zeros_like(theta)
    direction[active] = theta[active] / tn[active, None]

    worst = 0.0
    act_rows = np.flatnonzero(active)
    for j in np.flatnonzero(dead):
        gj, infeas = _dead_column_certificate(
            xn, fit.b_hat[:, j], int(j), lam * direction[act_rows, j], act_rows, lg, config.fit_intercept
        )
        g[:, j] = gj
        worst = max(worst, infeas, float(np.linalg.norm(gj)) - 1.0)

    if act_rows.size:
        worst = max(worst, float(row_norms(g[active] - lam * direction[active]).max()))
    if (~active).any():
        worst = max(worst, float(np.maximum(row_norms(g[~active]) - lam, 0.0).max()))

    grad_b = xn.T @ g
    off = ~np.eye(p, dtype=bool)
    gb = grad_b[off]
    bb = fit.b_hat[off]
    nz = np.abs(bb) > zero_tol
    if nz.any():
        worst = max(worst, float(np.abs(gb[nz] + lg * np.sign(bb[nz])).max()))
    if (~nz).any():
        worst = max(worst, float(np.maximum(np.abs(gb[~nz]) - lg, 0.0).max()))

    if config.fit_intercept:
        worst = max(worst, float(np.abs(g.sum(axis=0) / math.sqrt(n)).max()))
    return worst
