"""Ground-truth Gaussian models: base matrices, normalization and ``B*``."""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

SYMMETRY_TOL = 1e-12


class Variant(str, enum.Enum):
    TOEPLITZ06 = "toeplitz06"
    PENTADIAGONAL = "pentadiagonal"
    STAR = "star"
    EQUICORRELATION = "equicorrelation"
    CUSTOM = "custom"


# Model numbers used by the benchmark protocol.
MODEL_NUMBERS = {
    1: Variant.TOEPLITZ06,
    2: Variant.PENTADIAGONAL,
    3: Variant.STAR,
    4: Variant.EQUICORRELATION,
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _symmetrized(a: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} has non-finite entries")
    dev = float(np.abs(a - a.T).max()) if a.size else 0.0
    if dev > SYMMETRY_TOL:
        raise ValueError(f"{what} is not symmetric (max deviation {dev:.3e})")
    return (a + a.T) / 2.0


@dataclass(frozen=True)
class ModelSpec:
    """Selects the base matrix ``A``; ``matrix`` is used only by the custom variant."""

    variant: Variant
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.CUSTOM:
            if self.matrix is None:
                raise ValueError("the custom variant needs a matrix")
            a = _symmetrized(self.matrix, "custom matrix")
            lo = float(np.linalg.eigvalsh(a).min())
            tol = SYMMETRY_TOL * max(1.0, float(np.abs(a).max()))
            if lo < -tol:
                raise ValueError(f"custom matrix is not positive semidefinite: smallest eigenvalue {lo:.6g}")
            object.__setattr__(self, "matrix", _frozen(a))
        elif self.matrix is not None:
            raise ValueError(f"variant {self.variant.value} takes no matrix")

    @classmethod
    def model(cls, number: int) -> ModelSpec:
        if number not in MODEL_NUMBERS:
            raise ValueError(f"model number must be one of {sorted(MODEL_NUMBERS)}, got {number}")
        return cls(MODEL_NUMBERS[number])


def build_base_matrix(spec: ModelSpec, p: int) -> np.ndarray:
    """The base matrix ``A`` of the selected model in dimension ``p``."""
    if p < 2:
        raise ValueError(f"p must be at least 2, got {p}")
    v = spec.variant
    idx = np.arange(p)
    dist = np.abs(idx[:, None] - idx[None, :])
    if v is Variant.TOEPLITZ06:
        return 0.6 ** dist.astype(float)
    if v is Variant.PENTADIAGONAL:
        if p < 3:
            raise ValueError(f"the pentadiagonal model needs p >= 3, got {p}")
        band = np.zeros((p, p))
        band[dist == 0] = 1.0
        band[dist == 1] = -1.0 / 3.0
        band[dist == 2] = -1.0 / 10.0
        a = np.linalg.inv(band)
        a[dist > 2] = 0.0
        a = (a + a.T) / 2.0
        lo = float(np.linalg.eigvalsh(a).min())
        if lo <= 0:
            raise ValueError(f"truncated pentadiagonal matrix is not positive definite for p={p}: smallest eigenvalue {lo:.6g}")
        return a
    if v is Variant.STAR:
        a = 2.0 * np.eye(p)
        a[0, 0] = float(p)
        a[0, 1:] = math.sqrt(2.0)
        a[1:, 0] = math.sqrt(2.0)
        return a
    if v is Variant.EQUICORRELATION:
        return np.where(dist == 0, 1.0, 0.5)
    if spec.matrix.shape != (p, p):
        raise ValueError(f"custom matrix has shape {spec.matrix.shape}, expected ({p}, {p})")
    return np.array(spec.matrix)


def coefficient_matrix(omega: np.ndarray) -> np.ndarray:
    """``B = Omega diag(Omega)^{-1}``: column j divided by ``omega_jj``."""
    omega = np.asarray(omega, dtype=float)
    d = np.diag(omega).copy()
    if np.any(d == 0):
        raise ValueError("precision matrix has a zero diagonal entry")
    b = omega / d[None, :]
    np.fill_diagonal(b, 1.0)
    return b


@dataclass(frozen=True, eq=False)
class PrecisionModel:
    """Gaussian model with precision ``omega_star`` and mean ``mu_star``.

    Derived fields are computed at construction; arrays are read-only.
    """

    omega_star: np.ndarray
    mu_star: np.ndarray | None = None
    variant: Variant = Variant.CUSTOM
    sigma_star: np.ndarray = field(init=False)
    b_star: np.ndarray = field(init=False)
    phi_star: np.ndarray = field(init=False)

    def __post_init__(self):
        omega = _symmetrized(self.omega_star, "precision matrix")
        p = omega.shape[0]
        try:
            np.linalg.cholesky(omega)
        except np.linalg.LinAlgError:
            raise ValueError("precision matrix is not positive definite") from None
        sigma = np.linalg.inv(omega)
        sigma = (sigma + sigma.T) / 2.0
        mu = np.zeros(p) if self.mu_star is None else np.asarray(self.mu_star, dtype=float)
        if mu.shape != (p,):
            raise ValueError(f"mu_star must have length {p}, got shape {mu.shape}")
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "omega_star", _frozen(omega))
        object.__setattr__(self, "mu_star", _frozen(mu))
        object.__setattr__(self, "sigma_star", _frozen(sigma))
        object.__setattr__(self, "b_star", _frozen(coefficient_matrix(omega)))
        object.__setattr__(self, "phi_star", _frozen(1.0 / np.sqrt(np.diag(omega))))

    @property
    def p(self) -> int:
        return self.omega_star.shape[0]

    @property
    def ref(self) -> str:
        """Stable identifier: variant, dimension and a digest of the parameters."""
        h = hashlib.sha256(self.omega_star.tobytes() + self.mu_star.tobytes()).hexdigest()[:12]
        return f"{self.variant.value}-p{self.p}-{h}"

    def with_mean(self, mu: np.ndarray) -> PrecisionModel:
        return PrecisionModel(self.omega_star, mu, self.variant)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "variant": self.variant.value,
            "omega_star": self.omega_star.ravel().tolist(),
            "mu_star": self.mu_star.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> PrecisionModel:
        p = int(d["p"])
        omega = np.asarray(d["omega_star"], dtype=float).reshape(p, p)
        return cls(omega, np.asarray(d.get("mu_star", np.zeros(p)), dtype=float), d.get("variant", "custom"))

    @classmethod
    def from_json(cls, text: str) -> PrecisionModel:
        return cls.from_dict(json.loads(text))


def normalize_precision(a: np.ndarray, variant: Variant = Variant.CUSTOM) -> PrecisionModel:
    """``Omega* = D^{1/2} A D^{1/2}`` with ``D = diag(A^{-1})``.

    The resulting covariance has unit diagonal.  The square root is taken
    entrywise on the diagonal matrix ``D``.
    """
    a = _symmetrized(a, "base matrix")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise ValueError("base matrix is singular or not positive definite") from None
    d = np.sqrt(np.diag(np.linalg.inv(a)))
    omega = a * d[:, None] * d[None, :]
    return PrecisionModel(omega, None, variant)


def make_model(spec: ModelSpec | int | str, p: int, mu: np.ndarray | None = None) -> PrecisionModel:
    """Normalized model for a spec, a model number (1-4) or a variant name."""
    if isinstance(spec, int):
        spec = ModelSpec.model(spec)
    elif isinstance(spec, str):
        spec = ModelSpec(Variant(spec))
    model = normalize_precision(build_base_matrix(spec, p), spec.variant)
    return model if mu is None else model.with_mean(mu)
