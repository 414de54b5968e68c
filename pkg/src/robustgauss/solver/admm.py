"""Splitting solvers for the moderate and high-dimensional programs.

Both programs are solved by ADMM on data rescaled to unit column RMS, so the
iterates for ``c * X`` are those for ``X`` multiplied by ``c``.  Each
nonsmooth term gets its own copy of the variables, which makes every
subproblem closed form: a block-shrink per fidelity column, a
group-soft-threshold for ``Theta`` and an entrywise soft-threshold for ``B``.
The returned point is the best iterate of the penalty-side copies, which are
exactly sparse.
"""

from __future__ import annotations

import math

import numpy as np

from .config import FitRaw, Mode, SolverConfig, Status
from .optimality import (
    DEAD_COLUMN_RTOL,
    col_norms,
    group_soft_threshold,
    kkt_residual,
    objective,
    row_norms,
    soft_threshold,
)
from .projectors import ProjectorCache, build_projectors

RESIDUAL_TOL = 1e-12
CHECK_EVERY = 20
STALL_WINDOW = 50
RECORD_SLACK = 1e-14


def data_scale(xn: np.ndarray) -> float:
    """Column RMS of ``xn``: ``||xn||_F / sqrt(p)``."""
    return float(np.sqrt((xn * xn).sum() / xn.shape[1]))


def coefficients_from_theta(xn: np.ndarray, theta: np.ndarray, fit_intercept: bool) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form ``B`` and intercept given ``Theta``.

    Column j solves ``min || x_j - theta_j + X_{-j} b - c u ||`` and takes the
    minimum-norm solution when the design is rank deficient.
    """
    n, p = xn.shape
    u = np.full((n, 1), 1.0 / math.sqrt(n))
    b = np.eye(p)
    c = np.zeros(p)
    for j in range(p):
        design = np.delete(xn, j, axis=1)
        if fit_intercept:
            design = np.hstack([design, -u])
        coef, *_ = np.linalg.lstsq(design, -(xn[:, j] - theta[:, j]), rcond=None)
        b[np.arange(p) != j, j] = coef[: p - 1]
        if fit_intercept:
            c[j] = coef[p - 1]
    return b, c


class _Progress:
    """Best-iterate bookkeeping and the shared stopping rule."""

    def __init__(self, config: SolverConfig, kkt):
        self.config = config
        self.kkt = kkt
        self.best_val = math.inf
        self.best = None
        self.trace: list[float] = []
        self.last_kkt = math.inf

    def record(self, value: float, point) -> None:
        # Near the optimum the objective is flat to second order, so later
        # iterates within rounding of the best value are preferred.
        if value <= self.best_val + RECORD_SLACK * max(abs(self.best_val), 1.0) or self.best is None:
            self.best = tuple(np.copy(a) for a in point)
        self.best_val = min(self.best_val, value)
        self.trace.append(self.best_val)

    def stalled(self) -> bool:
        if len(self.trace) <= STALL_WINDOW:
            return False
        ref = self.trace[-1 - STALL_WINDOW]
        return (ref - self.trace[-1]) <= self.config.tolerance_objective * max(abs(self.trace[-1]), 1e-300)

    def should_stop(self, it: int, primal: float, dual: float) -> bool:
        tight = primal < RESIDUAL_TOL and dual < RESIDUAL_TOL
        if it % CHECK_EVERY and not tight:
            return False
        if tight:
            self.last_kkt = self.kkt(self.best)
            return True
        if self.stalled():
            self.last_kkt = self.kkt(self.best)
            return self.last_kkt <= self.config.tolerance_kkt
        return False


def _adapt_rho(rho: float, primal: float, dual: float, duals: list[np.ndarray]) -> float:
    if primal > 10.0 * dual:
        factor = 2.0
    elif dual > 10.0 * primal:
        factor = 0.5
    else:
        return rho
    for d in duals:
        d /= factor
    return rho * factor


def _finish(fit: FitRaw, xn: np.ndarray, config: SolverConfig, degenerate: bool) -> FitRaw:
    c = fit.c_hat if config.fit_intercept else None
    fit.objective = objective(xn, fit.b_hat, fit.theta_hat, c, config)
    fit.kkt_residual = kkt_residual(fit, xn, config)
    r = xn @ fit.b_hat - fit.theta_hat
    if c is not None:
        r = r - c[None, :] / math.sqrt(xn.shape[0])
    scale = max(float(col_norms(xn).max()), np.finfo(float).tiny)
    fit.degenerate_columns = [int(j) for j in np.flatnonzero(col_norms(r) <= DEAD_COLUMN_RTOL * scale)]
    if degenerate or fit.degenerate_columns:
        fit.status = Status.DEGENERATE
    elif fit.kkt_residual <= config.tolerance_kkt:
        fit.status = Status.CONVERGED
    else:
        fit.status = Status.ITERATION_BUDGET
    return fit


def check_moderate_inputs(xn: np.ndarray, config: SolverConfig) -> None:
    n, p = xn.shape
    if config.mode is not Mode.MODERATE:
        raise ValueError("solve_moderate requires mode=moderate")
    if config.lam == 0:
        raise ValueError(
            "lambda = 0: objective has non-unique trivial minimizers (Theta = X zeroes the fidelity)"
        )
    if n <= p:
        raise ValueError(f"moderate mode needs n > p (got n={n}, p={p}); use high-dimensional mode")


def _moderate_iterations(proj: ProjectorCache, xs: np.ndarray, lam: float, progress: _Progress, max_iter: int) -> int:
    n, p = xs.shape
    a = proj.apply(xs)
    phi = np.zeros((n, p))
    dual = np.zeros((n, p))
    rho = 1.0

    def value(th):
        return float(col_norms(a - proj.apply(th)).sum() + lam * row_norms(th).sum())

    progress.record(value(phi), (phi,))
    it = 0
    for it in range(1, max_iter + 1):
        v = phi - dual
        e = a - proj.apply(v)
        en = col_norms(e)
        shrink = np.minimum(1.0, (1.0 / rho) / np.maximum(en, 1e-300))
        theta = v + e * shrink
        phi_old = phi
        phi = group_soft_threshold(theta + dual, lam / rho)
        dual += theta - phi
        progress.record(value(phi), (phi,))
        primal = float(np.linalg.norm(theta - phi))
        dres = rho * float(np.linalg.norm(phi - phi_old))
        if progress.should_stop(it, primal, dres):
            break
        if it % CHECK_EVERY == 0:
            rho = _adapt_rho(rho, primal, dres, [dual])
    return it


def solve_moderate(xn: np.ndarray, config: SolverConfig) -> FitRaw:
    """Solve the profiled moderate-dimensional program.

    Minimizes ``sum_j ||Z^j (x_j - theta_j)|| + lam * ||Theta||_{2,1}`` over
    ``Theta`` and recovers ``B`` column by column in closed form.
    """
    xn = np.asarray(xn, dtype=float)
    check_moderate_inputs(xn, config)
    n, p = xn.shape
    s = data_scale(xn)
    if s == 0:
        fit = FitRaw(np.eye(p), np.zeros((n, p)), np.zeros(p), [0.0], 0.0, Status.DEGENERATE)
        return _finish(fit, xn, config, True)
    xs = xn / s
    proj = build_projectors(xs, config.fit_intercept)

    def kkt(point):
        theta = point[0] * s
        b, c = coefficients_from_theta(xn, theta, config.fit_intercept)
        return kkt_residual(FitRaw(b, theta, c, [], 0.0, Status.CONVERGED), xn, config)

    progress = _Progress(config, kkt)
    iters = _moderate_iterations(proj, xs, config.lam, progress, config.max_outer_iterations)
    theta = progress.best[0] * s
    b, c = coefficients_from_theta(xn, theta, config.fit_intercept)
    if not config.fit_intercept:
        c = np.zeros(p)
    trace = [v * s for v in progress.trace]
    fit = FitRaw(b, theta, c, trace, 0.0, Status.CONVERGED, iters)
    return _finish(fit, xn, config, proj.degenerate)


def _highdim_iterations(x: np.ndarray, config: SolverConfig, b_weight: float, progress: _Progress, max_iter: int) -> int:
    n, p = x.shape
    lam = config.lam
    if config.fit_intercept:
        def center(m):
            return m - m.mean(axis=0)
    else:
        def center(m):
            return m
    off = ~np.eye(p, dtype=bool)
    offidx = np.array([[k for k in range(p) if k != j] for j in range(p)], dtype=int).reshape(p, p - 1)
    cx = center(x)
    gram = x.T @ cx
    minv = np.empty((p, p - 1, p - 1))
    for j in range(p):
        sub = gram[np.ix_(offidx[j], offidx[j])]
        minv[j] = np.linalg.inv(sub / 2.0 + np.eye(p - 1))

    b = np.eye(p)
    theta = np.zeros((n, p))
    pb = b.copy()
    phi = theta.copy()
    s_var = center(x @ b - theta)
    du = np.zeros((n, p))
    dv = np.zeros((p, p))
    dw = np.zeros((n, p))
    rho = 1.0

    def value(bb, th):
        fid = col_norms(center(x @ bb - th)).sum()
        return float(fid + lam * row_norms(th).sum() + b_weight * np.abs(bb[off]).sum())

    progress.record(value(pb, phi), (pb, phi))
    it = 0
    for it in range(1, max_iter + 1):
        t_aux = s_var - du - cx
        v_aux = phi - dw
        q_aux = pb - dv
        rhs_full = (x.T @ center(t_aux + v_aux) / 2.0 + q_aux).T
        rhs = np.take_along_axis(rhs_full, offidx, axis=1)
        coef = np.einsum("jab,jb->ja", minv, rhs)
        bt = np.eye(p)
        np.put_along_axis(bt, offidx, coef, axis=1)
        b = bt.T
        theta = v_aux - center(v_aux + t_aux - x @ (b * off)) / 2.0

        k_mat = center(x @ b - theta)
        a_mat = k_mat + du
        an = col_norms(a_mat)
        s_old, pb_old, phi_old = s_var, pb, phi
        s_var = a_mat * np.maximum(0.0, 1.0 - (1.0 / rho) / np.maximum(an, 1e-300))
        pb = soft_threshold(b + dv, b_weight / rho)
        np.fill_diagonal(pb, 1.0)
        phi = group_soft_threshold(theta + dw, lam / rho)

        du += k_mat - s_var
        dv += b - pb
        dw += theta - phi
        progress.record(value(pb, phi), (pb, phi))
        primal = math.sqrt(
            float(np.sum((k_mat - s_var) ** 2) + np.sum((b - pb) ** 2) + np.sum((theta - phi) ** 2))
        )
        dres = rho * math.sqrt(
            float(np.sum((s_var - s_old) ** 2) + np.sum((pb - pb_old) ** 2) + np.sum((phi - phi_old) ** 2))
        )
        if progress.should_stop(it, primal, dres):
            break
        if it % CHECK_EVERY == 0:
            rho = _adapt_rho(rho, primal, dres, [du, dv, dw])
    return it


def intercept_from(xn: np.ndarray, b: np.ndarray, theta: np.ndarray, fit_intercept: bool) -> np.ndarray:
    """Optimal ``c`` for fixed ``(B, Theta)``: ``u^T (X B - Theta)``."""
    if not fit_intercept:
        return np.zeros(xn.shape[1])
    return (xn @ b - theta).sum(axis=0) / math.sqrt(xn.shape[0])


def check_highdim_inputs(xn: np.ndarray, config: SolverConfig) -> None:
    if config.mode is not Mode.HIGHDIM:
        raise ValueError("solve_highdim requires mode=highdim")
    if config.lam <= 0:
        raise ValueError("lambda must be positive in high-dimensional mode")
    if xn.shape[1] < 2:
        raise ValueError("high-dimensional mode needs at least two variables")


def solve_highdim(xn: np.ndarray, config: SolverConfig) -> FitRaw:
    """Solve the joint program with penalties on both ``Theta`` and ``B``.

    The optional intercept is profiled out by centring every residual column.
    """
    xn = np.asarray(xn, dtype=float)
    check_highdim_inputs(xn, config)
    n, p = xn.shape
    zero_cols = np.flatnonzero(col_norms(xn) == 0)
    s = data_scale(xn)
    if zero_cols.size:
        fit = FitRaw(np.eye(p), np.zeros((n, p)), np.zeros(p), [], 0.0, Status.DEGENERATE)
        fit.c_hat = intercept_from(xn, fit.b_hat, fit.theta_hat, config.fit_intercept)
        fit = _finish(fit, xn, config, True)
        fit.objective_trace = [fit.objective]
        return fit
    xs = xn / s
    b_weight = config.lam * config.gamma / s

    def kkt(point):
        b, phi = point
        theta = phi * s
        c = intercept_from(xn, b, theta, config.fit_intercept)
        return kkt_residual(FitRaw(b, theta, c, [], 0.0, Status.CONVERGED), xn, config)

    progress = _Progress(config, kkt)
    iters = _highdim_iterations(xs, config, b_weight, progress, config.max_outer_iterations)
    b, phi = progress.best
    theta = phi * s
    c = intercept_from(xn, b, theta, config.fit_intercept)
    diag_pen = config.lam * config.gamma * p if config.penalize_diagonal else 0.0
    trace = [v * s + diag_pen for v in progress.trace]
    fit = FitRaw(b.copy(), theta, c, trace, 0.0, Status.CONVERGED, iters)
    return _finish(fit, xn, config, False)
