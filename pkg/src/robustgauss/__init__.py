"""Robust estimation of Gaussian precision matrices from outlier-contaminated samples."""

from __future__ import annotations

__version__ = "0.1.0"

from .estimator import FitResult, fit_pipeline
from .models import ModelSpec, PrecisionModel, Variant, make_model, normalize_precision
from .sampling import ContaminatedDataset, ContaminationSpec, Scheme, generate_dataset
from .solver import FitRaw, Mode, SolverConfig, Status, solve

__all__ = [
    "ContaminatedDataset",
    "ContaminationSpec",
    "FitRaw",
    "FitResult",
    "Mode",
    "ModelSpec",
    "PrecisionModel",
    "Scheme",
    "SolverConfig",
    "Status",
    "Variant",
    "__version__",
    "fit_pipeline",
    "generate_dataset",
    "make_model",
    "normalize_precision",
    "solve",
]
