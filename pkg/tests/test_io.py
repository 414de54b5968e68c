from __future__ import annotations

import json

import numpy as np
import pytest

from robustgauss.estimator import fit_pipeline
from robustgauss.io import (
    DataFormatError,
    load_dataset,
    read_dataset,
    read_matrix,
    write_dataset,
    write_fit_raw,
    write_fit_result,
    write_matrix,
)
from robustgauss.models import make_model
from robustgauss.sampling import ContaminationSpec, generate_dataset
from robustgauss.solver import SolverConfig


def test_matrix_round_trip_is_exact(tmp_path, rng):
    m = rng.standard_normal((5, 3)) * 10.0 ** rng.integers(-20, 20, (5, 3))
    write_matrix(tmp_path / "m.csv", m, ["a", "b", "c"])
    assert np.array_equal(read_matrix(tmp_path / "m.csv"), m)
    write_matrix(tmp_path / "raw.csv", m)
    assert np.array_equal(read_matrix(tmp_path / "raw.csv", header=False), m)


@pytest.mark.parametrize(
    "text,line",
    [("x0,x1\n1,2\n3,abc\n", "line 3"), ("x0,x1\n1,2\n3\n", "line 3"), ("x0,x1\n1,nan\n", "line 2")],
)
def test_read_matrix_names_bad_line(tmp_path, text, line):
    (tmp_path / "bad.csv").write_text(text)
    with pytest.raises(DataFormatError, match=line):
        read_matrix(tmp_path / "bad.csv")


def test_read_matrix_empty(tmp_path):
    (tmp_path / "e.csv").write_text("x0\n")
    with pytest.raises(DataFormatError, match="no data"):
        read_matrix(tmp_path / "e.csv")


def test_dataset_round_trip(tmp_path):
    m = make_model(2, 4).with_mean(np.array([1.0, 0.0, -1.0, 2.0]))
    d = generate_dataset(m, 30, ContaminationSpec(0.2, seed=5))
    write_dataset(tmp_path, d)
    x, truth = read_dataset(tmp_path)
    assert np.array_equal(x, d.x)
    assert truth["outliers"] == d.outliers.tolist() and truth["outlier_count"] == 6
    back = load_dataset(tmp_path)
    assert np.array_equal(back.theta_star, d.theta_star)


def test_load_dataset_detects_tampering(tmp_path):
    d = generate_dataset(make_model(1, 3), 20, ContaminationSpec(0.1, seed=1))
    write_dataset(tmp_path, d)
    text = (tmp_path / "data.csv").read_text().splitlines()
    text[1] = ",".join(["0.0"] * 3)
    (tmp_path / "data.csv").write_text("\n".join(text) + "\n")
    with pytest.raises(DataFormatError, match="do not match"):
        load_dataset(tmp_path)


def test_fit_exports(tmp_path):
    d = generate_dataset(make_model(1, 3), 40, ContaminationSpec(0.1, seed=2))
    res = fit_pipeline(d.x, SolverConfig(lam=0.3))
    write_fit_result(tmp_path, res)
    write_fit_raw(tmp_path, res.raw)
    for name in ("omega_hat.csv", "omega_hat_pd.csv", "e_hat.csv", "mu_hat.csv", "b_hat.csv", "theta_hat.csv", "c_hat.csv"):
        assert (tmp_path / name).exists()
    assert np.array_equal(read_matrix(tmp_path / "omega_hat.csv", header=False), res.omega_hat)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["lambda"] == 0.3 and summary["outlier_count"] == res.outliers_hat.size
    assert json.loads((tmp_path / "outliers.json").read_text())["outliers"] == res.outliers_hat.tolist()
