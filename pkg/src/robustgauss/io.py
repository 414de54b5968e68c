"""Plain CSV/JSON import and export for datasets and fits.

Floats are written with ``repr`` so that reading a file back yields the
same doubles bit for bit.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .estimator import FitResult
from .models import PrecisionModel
from .sampling import GENERATOR_NAME, ContaminatedDataset, ContaminationSpec
from .solver import FitRaw


def _fmt(v: float) -> str:
    return repr(float(v))


def write_matrix(path: Path, m: np.ndarray, header: list[str] | None = None) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in m:
            w.writerow([_fmt(v) for v in row])


def write_vector(path: Path, v: np.ndarray, name: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", name])
        for i, x in enumerate(np.asarray(v, dtype=float)):
            w.writerow([i, _fmt(x)])


def write_json(path: Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


class DataFormatError(ValueError):
    pass


def read_matrix(path: Path, header: bool = True) -> np.ndarray:
    """Numeric CSV as a float matrix; the first row is skipped when ``header``.

    Errors name the offending (1-based, file) line.
    """
    path = Path(path)
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DataFormatError(f"{path}: line {lineno} is not numeric: {row}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise DataFormatError(f"{path}: line {lineno} has {len(vals)} fields, expected {width}")
            if not all(np.isfinite(vals)):
                raise DataFormatError(f"{path}: line {lineno} has non-finite values")
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_dataset(out: Path, data: ContaminatedDataset, model: PrecisionModel | None = None) -> None:
    """``data.csv`` with header ``x0, x1, ...`` plus a ``truth.json`` sidecar."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "data.csv", data.x, [f"x{j}" for j in range(data.p)])
    model = model if model is not None else data.model
    truth = {
        "n": data.n,
        "p": data.p,
        "outliers": [int(i) for i in data.outliers],
        "outlier_count": int(len(data.outliers)),
        "model_ref": data.model_ref,
        "generator": GENERATOR_NAME,
    }
    if data.spec is not None:
        truth.update(data.spec.to_dict())
    if model is not None:
        truth["model"] = model.to_dict()
    write_json(out / "truth.json", truth)


def read_dataset(directory: Path) -> tuple[np.ndarray, dict]:
    directory = Path(directory)
    x = read_matrix(directory / "data.csv")
    truth = json.loads((directory / "truth.json").read_text())
    return x, truth


def load_dataset(directory: Path) -> ContaminatedDataset:
    """Rebuild a dataset, with its ground truth, from ``write_dataset`` output.

    Needs the embedded model; ``y`` is not stored, so it is regenerated from
    the seed and checked against the stored ``x``.
    """
    from .sampling import generate_dataset

    x, truth = read_dataset(directory)
    if "model" not in truth:
        raise DataFormatError("truth.json carries no model; cannot rebuild the ground truth")
    model = PrecisionModel.from_dict(truth["model"])
    spec = ContaminationSpec(truth["epsilon"], truth["scheme"], truth["seed"], truth.get("m_e", 1.0))
    data = generate_dataset(model, x.shape[0], spec)
    if not np.array_equal(data.x, x):
        raise DataFormatError("stored data do not match the regenerated dataset")
    return data


def write_fit_raw(out: Path, raw: FitRaw) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "b_hat.csv", raw.b_hat)
    write_matrix(out / "theta_hat.csv", raw.theta_hat)
    write_vector(out / "c_hat.csv", raw.c_hat, "c_hat")
    write_json(out / "solver_summary.json", raw.summary())


def write_fit_result(out: Path, result: FitResult) -> None:
    """Export directory with the precision, corruption and mean estimates."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "omega_hat.csv", result.omega_hat)
    write_matrix(out / "omega_hat_pd.csv", result.omega_hat_pd)
    write_matrix(out / "e_hat.csv", result.e_hat)
    write_vector(out / "mu_hat.csv", result.mu_hat, "mu_hat")
    write_json(out / "outliers.json", {"outliers": [int(i) for i in result.outliers_hat]})
    write_json(out / "summary.json", result.summary())
