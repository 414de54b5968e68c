"""Convex solvers for the penalized square-root robust regression program."""

from __future__ import annotations

import numpy as np

from .admm import coefficients_from_theta, data_scale, solve_highdim, solve_moderate
from .config import Algorithm, FitRaw, Mode, SolverConfig, Status
from .diagnostics import (
    ConeCheck,
    cone_check,
    lambda_condition_statistic,
    lambda_max,
    universal_lambda_highdim,
    universal_lambda_moderate,
)
from .optimality import group_soft_threshold, kkt_residual, objective, residual_matrix, soft_threshold
from .projectors import ProjectorCache, build_projectors
from .smoothed import solve_highdim_smoothed, solve_moderate_smoothed


def solve(xn: np.ndarray, config: SolverConfig) -> FitRaw:
    """Dispatch on ``config.mode`` and ``config.algorithm``."""
    smoothed = config.algorithm is Algorithm.SMOOTHED_APG
    if config.mode is Mode.MODERATE:
        return solve_moderate_smoothed(xn, config) if smoothed else solve_moderate(xn, config)
    return solve_highdim_smoothed(xn, config) if smoothed else solve_highdim(xn, config)


def cone_diagnostic(fit: FitRaw, dataset) -> ConeCheck:
    """Cone membership of ``Theta_hat - Theta*`` for a synthetic dataset.

    ``dataset`` must expose ``theta_star`` and ``outliers``.
    """
    return cone_check(fit.theta_hat, dataset.theta_star, dataset.outliers)


__all__ = [
    "Algorithm",
    "ConeCheck",
    "FitRaw",
    "Mode",
    "ProjectorCache",
    "SolverConfig",
    "Status",
    "build_projectors",
    "coefficients_from_theta",
    "cone_check",
    "cone_diagnostic",
    "data_scale",
    "group_soft_threshold",
    "kkt_residual",
    "lambda_condition_statistic",
    "lambda_max",
    "objective",
    "residual_matrix",
    "soft_threshold",
    "solve",
    "solve_highdim",
    "solve_moderate",
    "universal_lambda_highdim",
    "universal_lambda_moderate",
]
