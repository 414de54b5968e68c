"""Projected-subgradient reference solver for tiny instances.

Deliberately naive: plain subgradient steps of length ``step0 / sqrt(k)`` on
the raw nonsmooth joint objective, with the unit diagonal of ``B`` restored
after every step.  It shares no code with the main solver and serves only as
an independent upper bound on the optimal value.
"""

from __future__ import annotations

import math

import numba
import numpy as np

DEFAULT_ITERATIONS = 1_000_000


@numba.njit(cache=True)
def _value(x, b, theta, c, lam, lg, intercept, pen_diag):
    n, p = x.shape
    u = 1.0 / math.sqrt(n)
    total = 0.0
    for j in range(p):
        s = 0.0
        for i in range(n):
            r = -theta[i, j]
            for k in range(p):
                r += x[i, k] * b[k, j]
            if intercept:
                r -= c[j] * u
            s += r * r
        total += math.sqrt(s)
    for i in range(n):
        s = 0.0
        for j in range(p):
            s += theta[i, j] * theta[i, j]
        total += lam * math.sqrt(s)
    for k in range(p):
        for j in range(p):
            if k != j or pen_diag:
                total += lg * abs(b[k, j])
    return total


@numba.njit(cache=True)
def _run(x, lam, lg, intercept, pen_diag, iterations, step0):
    n, p = x.shape
    u = 1.0 / math.sqrt(n)
    b = np.eye(p)
    theta = np.zeros((n, p))
    c = np.zeros(p)
    best = _value(x, b, theta, c, lam, lg, intercept, pen_diag)
    best_b = b.copy()
    best_theta = theta.copy()
    best_c = c.copy()
    r = np.zeros((n, p))
    gb = np.zeros((p, p))
    gt = np.zeros((n, p))
    gc = np.zeros(p)
    for it in range(1, iterations + 1):
        for j in range(p):
            s = 0.0
            for i in range(n):
                v = -theta[i, j]
                for k in range(p):
                    v += x[i, k] * b[k, j]
                if intercept:
                    v -= c[j] * u
                r[i, j] = v
                s += v * v
            nrm = math.sqrt(s)
            for i in range(n):
                r[i, j] = r[i, j] / nrm if nrm > 0 else 0.0
        for k in range(p):
            for j in range(p):
                s = 0.0
                for i in range(n):
                    s += x[i, k] * r[i, j]
                if k != j or pen_diag:
                    if b[k, j] > 0:
                        s += lg
                    elif b[k, j] < 0:
                        s -= lg
                gb[k, j] = s
        for i in range(n):
            s = 0.0
            for j in range(p):
                s += theta[i, j] * theta[i, j]
            nrm = math.sqrt(s)
            for j in range(p):
                gt[i, j] = -r[i, j] + (lam * theta[i, j] / nrm if nrm > 0 else 0.0)
        for j in range(p):
            s = 0.0
            for i in range(n):
                s += r[i, j]
            gc[j] = -s * u
        sq = 0.0
        for k in range(p):
            for j in range(p):
                if k != j:
                    sq += gb[k, j] * gb[k, j]
        for i in range(n):
            for j in range(p):
                sq += gt[i, j] * gt[i, j]
        if intercept:
            for j in range(p):
                sq += gc[j] * gc[j]
        if sq == 0.0:
            break
        step = step0 / math.sqrt(it) / math.sqrt(sq)
        for k in range(p):
            for j in range(p):
                if k != j:
                    b[k, j] -= step * gb[k, j]
        for i in range(n):
            for j in range(p):
                theta[i, j] -= step * gt[i, j]
        if intercept:
            for j in range(p):
                c[j] -= step * gc[j]
        val = _value(x, b, theta, c, lam, lg, intercept, pen_diag)
        if val < best:
            best = val
            best_b[:, :] = b
            best_theta[:, :] = theta
            best_c[:] = c
    return best, best_b, best_theta, best_c


def oracle_solve(
    xn: np.ndarray,
    lam: float,
    gamma: float = 0.0,
    fit_intercept: bool = False,
    penalize_diagonal: bool = False,
    iterations: int = DEFAULT_ITERATIONS,
    step0: float | None = None,
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Best objective value found and the iterate attaining it.

    Steps are normalized subgradients of length ``step0 / sqrt(k)``;
    ``step0`` defaults to a tenth of the column RMS of ``xn``.
    """
    x = np.ascontiguousarray(xn, dtype=float)
    if step0 is None:
        step0 = 0.1 * math.sqrt(float((x * x).sum()) / x.shape[1])
    return _run(x, float(lam), float(lam * gamma), bool(fit_intercept), bool(penalize_diagonal), int(iterations), float(step0))
