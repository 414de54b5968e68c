from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

DEFAULT_SMOOTHING = tuple(10.0 ** -k for k in range(1, 9))


class Mode(str, enum.Enum):
    MODERATE = "moderate"
    HIGHDIM = "highdim"


class Status(str, enum.Enum):
    CONVERGED = "converged"
    ITERATION_BUDGET = "iteration_budget"
    DEGENERATE = "degenerate"


class Algorithm(str, enum.Enum):
    ADMM = "admm"
    SMOOTHED_APG = "smoothed_apg"


@dataclass(frozen=True)
class SolverConfig:
    """Tuning and stopping parameters for one solve.

    ``lam`` is the robustness penalty and ``gamma`` the ratio of the entrywise
    penalty on ``B`` to ``lam``.  ``fit_intercept=None`` resolves to False in
    moderate mode and True in high-dimensional mode.  ``max_outer_iterations``
    caps the number of splitting (or proximal-gradient) iterations; for the
    smoothed scheme the cap applies per smoothing stage.
    """

    lam: float
    gamma: float = 0.0
    delta: float = 0.05
    mode: Mode = Mode.MODERATE
    fit_intercept: bool | None = None
    max_outer_iterations: int = 20000
    tolerance_objective: float = 1e-9
    tolerance_kkt: float = 1e-6
    smoothing_schedule: tuple[float, ...] = DEFAULT_SMOOTHING
    penalize_diagonal: bool = False
    algorithm: Algorithm = Algorithm.ADMM

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "smoothing_schedule", tuple(float(e) for e in self.smoothing_schedule))
        if self.fit_intercept is None:
            object.__setattr__(self, "fit_intercept", self.mode is Mode.HIGHDIM)
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be a finite nonnegative number, got {self.lam}")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be a finite nonnegative number, got {self.gamma}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be positive")
        if self.tolerance_objective <= 0 or self.tolerance_kkt <= 0:
            raise ValueError("tolerances must be positive")
        sched = self.smoothing_schedule
        if not sched or any(e <= 0 for e in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError("smoothing_schedule must be a strictly decreasing sequence of positive reals")
        if self.mode is Mode.MODERATE and self.gamma != 0:
            raise ValueError("gamma must be 0 in moderate mode")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["mode"] = self.mode.value
        d["algorithm"] = self.algorithm.value
        d["smoothing_schedule"] = list(self.smoothing_schedule)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> SolverConfig:
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        if "smoothing_schedule" in d:
            d["smoothing_schedule"] = tuple(d["smoothing_schedule"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> SolverConfig:
        return cls.from_dict(json.loads(text))


@dataclass
class FitRaw:
    """Solver output in the units of the scaled design ``X / sqrt(n)``."""

    b_hat: np.ndarray
    theta_hat: np.ndarray
    c_hat: np.ndarray
    objective_trace: list[float]
    kkt_residual: float
    status: Status
    iterations: int = 0
    objective: float = float("nan")
    degenerate_columns: list[int] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "status": self.status.value,
        }
