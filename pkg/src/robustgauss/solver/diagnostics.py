from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .optimality import col_norms, row_norms
from .projectors import ProjectorCache, build_projectors


def _check_sizes(n: int, p: int, delta: float) -> None:
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def universal_lambda_moderate(n: int, p: int, delta: float) -> float:
    """``6 * sqrt(p * log(2 n p / delta) / n)``."""
    _check_sizes(n, p, delta)
    return 6.0 * math.sqrt(p * math.log(2 * n * p / delta) / n)


def universal_lambda_highdim(n: int, p: int, delta: float, outlier_budget: int = 0) -> float:
    """``6 * sqrt(log(2 n p / delta) / (n - outlier_budget))``."""
    _check_sizes(n, p, delta)
    if outlier_budget < 0 or outlier_budget >= n:
        raise ValueError(f"outlier_budget must lie in [0, n), got {outlier_budget} with n={n}")
    return 6.0 * math.sqrt(math.log(2 * n * p / delta) / (n - outlier_budget))


def lambda_condition_statistic(
    xn: np.ndarray,
    noise: np.ndarray,
    fit_intercept: bool = False,
    projectors: ProjectorCache | None = None,
) -> float:
    """``max_i sqrt(sum_j (Z^j_i eps_j)^2 / ||Z^j eps_j||^2)``.

    Invariant to positive rescaling of the columns of ``noise``.
    """
    proj = projectors if projectors is not None else build_projectors(xn, fit_intercept)
    zn = proj.apply(np.asarray(noise, dtype=float))
    norms = col_norms(zn)
    if np.any(norms == 0):
        raise ValueError("projected noise column is identically zero")
    return float(row_norms(zn / norms).max())


def lambda_max(xn: np.ndarray, fit_intercept: bool = False) -> float:
    """Smallest ``lam`` at which ``Theta = 0`` solves the moderate program.

    At ``Theta = 0`` the fidelity gradient of column j is the normalized
    projected column ``Z^j x_j / ||Z^j x_j||``; zero is optimal exactly when
    every row of that matrix has norm at most ``lam``.
    """
    return lambda_condition_statistic(xn, xn, fit_intercept=fit_intercept)


@dataclass(frozen=True)
class ConeCheck:
    lhs: float
    rhs: float
    in_cone: bool


def cone_check(theta_hat: np.ndarray, theta_star: np.ndarray, outliers, factor: float = 2.0) -> ConeCheck:
    """Compare ``||D_{O^c}||_{2,1}`` with ``factor * ||D_O||_{2,1}`` for ``D = Theta_hat - Theta*``."""
    delta = np.asarray(theta_hat, dtype=float) - np.asarray(theta_star, dtype=float)
    mask = np.zeros(delta.shape[0], dtype=bool)
    mask[np.asarray(list(outliers), dtype=int)] = True
    norms = row_norms(delta)
    lhs = float(norms[~mask].sum())
    rhs = factor * float(norms[mask].sum())
    return ConeCheck(lhs, rhs, lhs <= rhs)
