"""Accelerated proximal gradient on a smoothed fidelity.

Each fidelity term ``||r||`` is replaced by ``sqrt(||r||^2 + eps^2)`` and
``eps`` follows ``SolverConfig.smoothing_schedule``.  This is the slower
alternative to the splitting solver; it stalls when the optimum interpolates
a column, because the smoothed curvature then grows like ``1 / eps``.
"""

from __future__ import annotations

import math

import numpy as np

from .admm import (
    _finish,
    check_highdim_inputs,
    check_moderate_inputs,
    coefficients_from_theta,
    data_scale,
    intercept_from,
)
from .config import FitRaw, SolverConfig, Status
from .optimality import col_norms, group_soft_threshold, row_norms, soft_threshold
from .projectors import build_projectors


def _apg(smooth, penalty, prox, true_value, z0, config: SolverConfig, lipschitz0: float):
    """FISTA with backtracking, function-value restart and best-iterate tracking."""
    z = z0.copy()
    best = z.copy()
    best_val = true_value(best)
    trace = [best_val]
    total = 0
    lip = lipschitz0
    for eps in config.smoothing_schedule:
        y = z.copy()
        z_prev = z.copy()
        t_mom = 1.0
        history = [smooth(z, eps)[0] + penalty(z)]
        for _ in range(config.max_outer_iterations):
            total += 1
            fy, gy = smooth(y, eps)
            lip = max(lip * 0.5, 1e-12)
            while True:
                cand = prox(y - gy / lip, 1.0 / lip)
                d = cand - y
                fc = smooth(cand, eps)[0]
                if fc <= fy + float(np.vdot(gy, d)) + 0.5 * lip * float(np.vdot(d, d)) + 1e-15 * abs(fy):
                    break
                lip *= 2.0
                if lip > 1e20:
                    break
            fc_total = fc + penalty(cand)
            if fc_total > history[-1]:
                t_mom = 1.0
                if np.array_equal(y, z):
                    break
                y = z.copy()
                continue
            z_prev, z = z, cand
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
            y = z + ((t_mom - 1.0) / t_next) * (z - z_prev)
            t_mom = t_next
            history.append(fc_total)
            tv = true_value(z)
            if tv < best_val:
                best_val = tv
                best = z.copy()
            trace.append(best_val)
            if len(history) > 10:
                ref = history[-11]
                if (ref - history[-1]) <= config.tolerance_objective * max(abs(history[-1]), 1e-300):
                    break
    return best, trace, total


def solve_moderate_smoothed(xn: np.ndarray, config: SolverConfig) -> FitRaw:
    xn = np.asarray(xn, dtype=float)
    check_moderate_inputs(xn, config)
    n, p = xn.shape
    s = data_scale(xn)
    if s == 0:
        return _finish(FitRaw(np.eye(p), np.zeros((n, p)), np.zeros(p), [0.0], 0.0, Status.DEGENERATE), xn, config, True)
    xs = xn / s
    proj = build_projectors(xs, config.fit_intercept)
    a = proj.apply(xs)
    lam = config.lam

    def resid(z):
        return a - proj.apply(z.reshape(n, p))

    def smooth(z, eps):
        r = resid(z)
        phi = np.sqrt(col_norms(r) ** 2 + eps * eps)
        return float(phi.sum()), (-proj.apply(r / phi)).ravel()

    def penalty(z):
        return lam * float(row_norms(z.reshape(n, p)).sum())

    def prox(z, t):
        return group_soft_threshold(z.reshape(n, p), t * lam).ravel()

    def true_value(z):
        return float(col_norms(resid(z)).sum()) + penalty(z)

    z, trace, iters = _apg(smooth, penalty, prox, true_value, np.zeros(n * p), config, 1.0)
    theta = z.reshape(n, p) * s
    b, c = coefficients_from_theta(xn, theta, config.fit_intercept)
    if not config.fit_intercept:
        c = np.zeros(p)
    fit = FitRaw(b, theta, c, [v * s for v in trace], 0.0, Status.CONVERGED, iters)
    return _finish(fit, xn, config, proj.degenerate)


def solve_highdim_smoothed(xn: np.ndarray, config: SolverConfig) -> FitRaw:
    xn = np.asarray(xn, dtype=float)
    check_highdim_inputs(xn, config)
    n, p = xn.shape
    if np.any(col_norms(xn) == 0):
        from .admm import solve_highdim

        return solve_highdim(xn, config)
    s = data_scale(xn)
    x = xn / s
    lam = config.lam
    b_weight = lam * config.gamma / s
    off = ~np.eye(p, dtype=bool)
    pp = p * p

    def unpack(z):
        return z[:pp].reshape(p, p), z[pp:].reshape(n, p)

    def resid(z):
        b, theta = unpack(z)
        r = x @ b - theta
        return r - r.mean(axis=0) if config.fit_intercept else r

    def smooth(z, eps):
        r = resid(z)
        g = r / np.sqrt(col_norms(r) ** 2 + eps * eps)
        gb = x.T @ g
        gb[~off] = 0.0
        return float(np.sqrt(col_norms(r) ** 2 + eps * eps).sum()), np.concatenate([gb.ravel(), -g.ravel()])

    def penalty(z):
        b, theta = unpack(z)
        return lam * float(row_norms(theta).sum()) + b_weight * float(np.abs(b[off]).sum())

    def prox(z, t):
        b, theta = unpack(z)
        b = soft_threshold(b, t * b_weight)
        np.fill_diagonal(b, 1.0)
        return np.concatenate([b.ravel(), group_soft_threshold(theta, t * lam).ravel()])

    def true_value(z):
        return float(col_norms(resid(z)).sum()) + penalty(z)

    z0 = np.concatenate([np.eye(p).ravel(), np.zeros(n * p)])
    lip0 = 1.0 + float(np.linalg.norm(x, 2)) ** 2
    z, trace, iters = _apg(smooth, penalty, prox, true_value, z0, config, lip0)
    b, phi = unpack(z)
    theta = phi * s
    c = intercept_from(xn, b, theta, config.fit_intercept)
    diag_pen = lam * config.gamma * p if config.penalize_diagonal else 0.0
    fit = FitRaw(b.copy(), theta, c, [v * s + diag_pen for v in trace], 0.0, Status.CONVERGED, iters)
    return _finish(fit, xn, config, False)
