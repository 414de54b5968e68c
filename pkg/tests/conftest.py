from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

try:
    import cvxpy as cp

    HAVE_CVXPY = True
except ImportError:  # pragma: no cover
    HAVE_CVXPY = False

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixture_json():
    def load(name: str):
        return json.loads((FIXTURES / name).read_text())

    return load


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def contaminated_design(rng, n, p, k=2, shift=3.0):
    x = rng.standard_normal((n, p))
    x[:k] += shift * rng.standard_normal((k, p))
    return x / np.sqrt(n)


def clarabel_value(xn, lam, gamma=0.0, intercept=False):
    """Optimal value of the joint program from an interior-point conic solver."""
    n, p = xn.shape
    b = cp.Variable((p, p))
    t = cp.Variable((n, p))
    c = cp.Variable(p)
    r = xn @ b - t
    if intercept:
        r = r - np.ones((n, 1)) / math.sqrt(n) @ cp.reshape(c, (1, p), order="C")
    off = 1 - np.eye(p)
    obj = cp.sum(cp.norm(r, 2, axis=0)) + lam * (
        cp.sum(cp.norm(t, 2, axis=1)) + gamma * cp.sum(cp.abs(cp.multiply(off, b)))
    )
    prob = cp.Problem(cp.Minimize(obj), [cp.diag(b) == 1])
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return prob.value
