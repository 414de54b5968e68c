"""Statistical estimates assembled from a solver fit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampling import scaled_design
from .solver import FitRaw, SolverConfig, residual_matrix, solve
from .solver.optimality import row_norms

DEFAULT_PD_FLOOR = 1e-8
DEFAULT_TAU = 1e-8


def diag_precision(xn: np.ndarray, b_hat: np.ndarray, theta_hat: np.ndarray, center: bool = True) -> np.ndarray:
    """``omega_jj = (2n / pi) * ||r_j||_1^{-2}`` with ``r_j`` the (centred) residual ``X b_j - theta_j``."""
    xn = np.asarray(xn, dtype=float)
    n = xn.shape[0]
    r = xn @ b_hat - theta_hat
    if center:
        r = r - r.mean(axis=0)
    l1 = np.abs(r).sum(axis=0)
    bad = np.flatnonzero(l1 <= 0)
    if bad.size:
        raise ValueError(
            f"zero residual in column(s) {bad.tolist()}: degenerate fit (lambda too small or exact interpolation)"
        )
    return (2.0 * n / math.pi) / l1**2


def assemble_precision(b_hat: np.ndarray, omega_diag: np.ndarray) -> np.ndarray:
    """``B_hat diag(omega_diag)``."""
    return np.asarray(b_hat, dtype=float) * np.asarray(omega_diag, dtype=float)[None, :]


def repair_pd(omega: np.ndarray, pd_floor: float = DEFAULT_PD_FLOOR) -> np.ndarray:
    """Nearest symmetric matrix with eigenvalues at least ``pd_floor`` in Frobenius norm.

    Symmetrizes, then clips the spectrum from below.  Matrices that already
    qualify are returned symmetrized but otherwise untouched.
    """
    if pd_floor <= 0:
        raise ValueError("pd_floor must be positive")
    omega = np.asarray(omega, dtype=float)
    s = (omega + omega.T) / 2.0
    w, v = np.linalg.eigh(s)
    if w.min() >= pd_floor:
        return s
    out = (v * np.maximum(w, pd_floor)) @ v.T
    out = (out + out.T) / 2.0
    # symmetrizing can nudge the smallest eigenvalue below the floor by rounding
    margin = 8 * np.finfo(float).eps * max(1.0, float(np.abs(w).max()))
    for _ in range(4):
        lo = float(np.linalg.eigvalsh(out).min())
        if lo >= pd_floor:
            break
        out += (pd_floor - lo + margin) * np.eye(out.shape[0])
    return out


def recover_corruption(theta_hat: np.ndarray, b_hat: np.ndarray, n: int) -> np.ndarray:
    """``sqrt(n) * Theta_hat * pinv(B_hat)``."""
    return math.sqrt(n) * np.asarray(theta_hat, dtype=float) @ np.linalg.pinv(b_hat)


def estimate_mean(x: np.ndarray, e_hat: np.ndarray) -> np.ndarray:
    """Column means of ``X - E_hat``."""
    return (np.asarray(x, dtype=float) - e_hat).mean(axis=0)


def classify_outliers(theta_hat: np.ndarray, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Rows of ``Theta_hat`` with Euclidean norm above ``tau``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return np.flatnonzero(row_norms(np.asarray(theta_hat, dtype=float)) > tau)


@dataclass(frozen=True)
class MLEEstimate:
    omega: np.ndarray
    mu: np.ndarray


def reestimate_mle(x: np.ndarray, outliers) -> MLEEstimate:
    """Gaussian MLE on the rows not listed in ``outliers``.

    The covariance uses divisor m (the number of kept rows); the precision
    is its pseudo-inverse, which stays defined when the covariance is
    singular.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    out = np.asarray(list(outliers), dtype=int).reshape(-1)
    if out.size and (out.min() < 0 or out.max() >= n):
        raise IndexError(f"outlier indices must lie in [0, {n})")
    keep = np.ones(n, dtype=bool)
    keep[out] = False
    inl = x[keep]
    if inl.shape[0] < 2:
        raise ValueError(f"need at least 2 inliers, got {inl.shape[0]}")
    mu = inl.mean(axis=0)
    centered = inl - mu
    cov = centered.T @ centered / inl.shape[0]
    return MLEEstimate(np.linalg.pinv(cov, hermitian=True), mu)


def naive_mle(x: np.ndarray) -> MLEEstimate:
    """Gaussian MLE on all rows: the non-robust baseline."""
    return reestimate_mle(x, [])


@dataclass
class FitResult:
    """Estimates derived from one solve.

    ``mle`` holds the re-estimation on the rows classified as inliers when
    it was requested.
    """

    raw: FitRaw
    config: SolverConfig
    omega_diag_hat: np.ndarray
    omega_hat: np.ndarray
    omega_hat_pd: np.ndarray
    e_hat: np.ndarray
    mu_hat: np.ndarray
    outliers_hat: np.ndarray
    xi_hat: np.ndarray
    mle: MLEEstimate | None = None

    def summary(self) -> dict:
        return {
            **self.raw.summary(),
            "lambda": self.config.lam,
            "gamma": self.config.gamma,
            "mode": self.config.mode.value,
            "omega_diag_hat": self.omega_diag_hat.tolist(),
            "n": int(self.e_hat.shape[0]),
            "p": int(self.e_hat.shape[1]),
            "outlier_count": int(self.outliers_hat.size),
            "degenerate": self.raw.status.value == "degenerate",
        }


def estimates_from_raw(
    x: np.ndarray,
    raw: FitRaw,
    config: SolverConfig,
    *,
    center: bool = True,
    tau: float = DEFAULT_TAU,
    pd_floor: float = DEFAULT_PD_FLOOR,
    reestimate: bool = False,
) -> FitResult:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    xn = scaled_design(x)
    omega_diag = diag_precision(xn, raw.b_hat, raw.theta_hat, center)
    omega = assemble_precision(raw.b_hat, omega_diag)
    e_hat = recover_corruption(raw.theta_hat, raw.b_hat, n)
    outliers = classify_outliers(raw.theta_hat, tau)
    # with the closed-form B this equals Z^j (x_j - theta_j) column by column
    xi = residual_matrix(xn, raw.b_hat, raw.theta_hat, raw.c_hat if config.fit_intercept else None)
    result = FitResult(
        raw=raw,
        config=config,
        omega_diag_hat=omega_diag,
        omega_hat=omega,
        omega_hat_pd=repair_pd(omega, pd_floor),
        e_hat=e_hat,
        mu_hat=estimate_mean(x, e_hat),
        outliers_hat=outliers,
        xi_hat=xi,
    )
    if reestimate:
        result.mle = reestimate_mle(x, outliers)
    return result


def fit_pipeline(
    x: np.ndarray,
    config: SolverConfig,
    *,
    center: bool = True,
    tau: float = DEFAULT_TAU,
    pd_floor: float = DEFAULT_PD_FLOOR,
    reestimate: bool = False,
) -> FitResult:
    """Solve on ``X / sqrt(n)`` and assemble every estimate."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("x must be a matrix")
    raw = solve(scaled_design(x), config)
    return estimates_from_raw(x, raw, config, center=center, tau=tau, pd_floor=pd_floor, reestimate=reestimate)
