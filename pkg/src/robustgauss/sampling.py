"""Inlier sampling, row-wise contamination and ground-truth bookkeeping.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .models import PrecisionModel

GENERATOR_NAME = "numpy.random.PCG64"


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def child_seeds(seed: int, count: int) -> list[int]:
    """Independent 64-bit seeds derived from ``seed`` through ``SeedSequence``."""
    state = np.random.SeedSequence(int(seed)).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]


class Scheme(str, enum.Enum):
    REPLACE_STANDARD_NORMAL = "replace_standard_normal"
    ADDITIVE_BOUNDED_ROWS = "additive_bounded_rows"


def outlier_count(epsilon: float, n: int) -> int:
    """``round(epsilon * n)`` with ties rounded up."""
    return int(math.floor(epsilon * n + 0.5))


@dataclass(frozen=True)
class ContaminationSpec:
    """Outlier proportion, contamination scheme and seed.

    ``m_e`` is the row-norm constant of the additive scheme: every corrupted
    row of ``E* Sigma*^{-1/2}`` has norm ``m_e * sqrt(p)``.
    """

    epsilon: float
    scheme: Scheme = Scheme.REPLACE_STANDARD_NORMAL
    seed: int = 0
    m_e: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not 0 <= self.epsilon < 1:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.scheme is Scheme.ADDITIVE_BOUNDED_ROWS and not self.m_e > 0:
            raise ValueError(f"m_e must be positive, got {self.m_e}")

    def to_dict(self) -> dict:
        d = {"epsilon": self.epsilon, "scheme": self.scheme.value, "seed": int(self.seed)}
        if self.scheme is Scheme.ADDITIVE_BOUNDED_ROWS:
            d["m_e"] = float(self.m_e)
        return d


@dataclass(frozen=True, eq=False)
class ContaminatedDataset:
    """Observed data with the ground truth needed for evaluation.

    ``theta_star = e_star @ B* / sqrt(n)`` and
    ``noise = (y - mu*) @ B* / sqrt(n)``, so that
    ``x @ B* / sqrt(n) - mu*^T B* / sqrt(n) = theta_star + noise``.
    """

    x: np.ndarray
    y: np.ndarray
    e_star: np.ndarray
    theta_star: np.ndarray
    noise: np.ndarray
    outliers: np.ndarray
    model_ref: str
    spec: ContaminationSpec | None = None
    model: PrecisionModel | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def inliers(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.outliers] = False
        return np.flatnonzero(mask)


def scaled_design(x: np.ndarray) -> np.ndarray:
    """``X / sqrt(n)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("x must be a matrix with at least one row")
    return x / math.sqrt(x.shape[0])


def sample_inliers(model: PrecisionModel, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. rows from ``N(mu*, Sigma*)`` as ``Z L^T + 1 mu*^T``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    try:
        chol = np.linalg.cholesky(model.sigma_star)
    except np.linalg.LinAlgError:
        raise ValueError("covariance is not positive definite") from None
    z = rng_from_seed(seed).standard_normal((n, model.p))
    return z @ chol.T + model.mu_star[None, :]


def _sym_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.T


def contaminate(y: np.ndarray, model: PrecisionModel, spec: ContaminationSpec) -> ContaminatedDataset:
    """Corrupt ``round(epsilon * n)`` rows of ``y`` drawn without replacement."""
    y = np.asarray(y, dtype=float)
    n, p = y.shape
    if n < 2:
        raise ValueError(f"contamination needs at least two rows, got {n}")
    if p != model.p:
        raise ValueError(f"y has {p} columns but the model has dimension {model.p}")
    k = outlier_count(spec.epsilon, n)
    if k >= n:
        raise ValueError(f"epsilon={spec.epsilon} with n={n} would corrupt all {k} rows")
    rng = rng_from_seed(spec.seed)
    outliers = np.sort(rng.choice(n, size=k, replace=False)).astype(int)
    e_star = np.zeros_like(y)
    if k:
        if spec.scheme is Scheme.REPLACE_STANDARD_NORMAL:
            e_star[outliers] = rng.standard_normal((k, p)) - y[outliers]
        else:
            w = rng.standard_normal((k, p))
            w *= (spec.m_e * math.sqrt(p)) / np.linalg.norm(w, axis=1)[:, None]
            e_star[outliers] = w @ _sym_sqrt(model.sigma_star)
    # built as a sum so that x == y + e_star holds bit for bit
    x = y + e_star
    root = math.sqrt(n)
    theta_star = e_star @ model.b_star / root
    noise = (y - model.mu_star[None, :]) @ model.b_star / root
    return ContaminatedDataset(x, y, e_star, theta_star, noise, outliers, model.ref, spec, model)


def generate_dataset(model: PrecisionModel, n: int, spec: ContaminationSpec) -> ContaminatedDataset:
    """Sample inliers and contaminate them with seeds derived from ``spec.seed``."""
    inlier_seed, contamination_seed = child_seeds(spec.seed, 2)
    y = sample_inliers(model, n, inlier_seed)
    data = contaminate(y, model, replace(spec, seed=contamination_seed))
    return replace(data, spec=spec)
