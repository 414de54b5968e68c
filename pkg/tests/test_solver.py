from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import HAVE_CVXPY, clarabel_value, contaminated_design
from hypothesis import given
from hypothesis import strategies as st

from robustgauss.solver import (
    FitRaw,
    Mode,
    SolverConfig,
    Status,
    build_projectors,
    coefficients_from_theta,
    cone_check,
    kkt_residual,
    lambda_condition_statistic,
    lambda_max,
    objective,
    solve,
    solve_highdim,
    solve_moderate,
    universal_lambda_highdim,
    universal_lambda_moderate,
)
from robustgauss.solver.optimality import row_norms

# ---------------------------------------------------------------------------
# universal lambdas
# ---------------------------------------------------------------------------


def test_universal_lambda_moderate_value():
    # 6 * sqrt(5 * ln(10000) / 100), cross-checked at 30 digits
    import mpmath

    mpmath.mp.dps = 30
    expected = float(6 * mpmath.sqrt(5 * mpmath.log(10000) / 100))
    assert universal_lambda_moderate(100, 5, 0.1) == pytest.approx(expected, rel=1e-14)
    assert universal_lambda_moderate(100, 5, 0.1) == pytest.approx(4.0717, abs=5e-5)


def test_universal_lambda_moderate_quadrupled_n():
    ratio = universal_lambda_moderate(400, 5, 0.1) / universal_lambda_moderate(100, 5, 0.1)
    assert 0.5 < ratio < 0.56


def test_universal_lambda_moderate_unit_log():
    # n = p = 1 and delta = 2 / e give ln(2np / delta) = 1
    assert universal_lambda_moderate(1, 1, 2 / math.e) == pytest.approx(6.0, rel=1e-14)


def test_universal_lambda_highdim_value():
    import mpmath

    mpmath.mp.dps = 30
    expected = float(6 * mpmath.sqrt(mpmath.log(400000) / 180))
    got = universal_lambda_highdim(200, 50, 0.05, 20)
    assert got == pytest.approx(expected, rel=1e-14)
    # the quoted value 1.607 is a loose rounding of 1.60619
    assert got == pytest.approx(1.607, abs=1e-3)


def test_universal_lambda_highdim_budget():
    assert universal_lambda_highdim(200, 5, 0.1, 0) == pytest.approx(universal_lambda_moderate(200, 1, 0.1 / 5))
    assert universal_lambda_highdim(200, 5, 0.1, 10) > universal_lambda_highdim(200, 5, 0.1, 9)
    with pytest.raises(ValueError):
        universal_lambda_highdim(20, 5, 0.1, 20)


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------


def test_projector_hand_example():
    xn = np.array([[0.0, 1.0], [1.0, 0.0]])
    proj = build_projectors(np.vstack([xn, [[0.0, 0.0]]]))
    z1 = proj.matrix(0)
    np.testing.assert_allclose(z1, np.diag([0.0, 1.0, 1.0]), atol=1e-15)


def test_projector_two_by_two_requires_tall():
    with pytest.raises(ValueError, match="n > p"):
        build_projectors(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_projector_properties(rng):
    xn = rng.standard_normal((20, 4)) / math.sqrt(20)
    proj = build_projectors(xn)
    for j in range(4):
        z = proj.matrix(j)
        v = rng.standard_normal(20)
        assert np.linalg.norm(z @ (z @ v) - z @ v) <= 1e-10 * np.linalg.norm(v)
        assert np.trace(z) == pytest.approx(20 - 3, abs=1e-8)
        for k in range(4):
            if k != j:
                assert np.linalg.norm(proj.apply_column(j, xn[:, k])) <= 1e-10


def test_projector_orthogonal_columns():
    xn = np.zeros((6, 3))
    xn[0, 0] = xn[1, 1] = xn[2, 2] = 1.0
    proj = build_projectors(xn)
    for j in range(3):
        np.testing.assert_allclose(proj.apply_column(j, xn[:, j]), xn[:, j], atol=1e-15)


def test_projector_rank_deficient_flagged(rng):
    xn = rng.standard_normal((10, 3))
    xn[:, 2] = xn[:, 1]
    proj = build_projectors(xn)
    assert proj.degenerate
    fit = solve_moderate(xn, SolverConfig(lam=0.5))
    assert fit.status is Status.DEGENERATE


def test_projector_intercept(rng):
    xn = rng.standard_normal((12, 3))
    proj = build_projectors(xn, fit_intercept=True)
    ones = np.ones(12)
    for j in range(3):
        assert np.linalg.norm(proj.apply_column(j, ones)) < 1e-12


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def test_config_json_round_trip():
    cfg = SolverConfig(lam=0.7, gamma=0.25, mode="highdim", tolerance_kkt=1e-7)
    back = SolverConfig.from_json(cfg.to_json())
    assert back == cfg
    assert '"lambda": 0.7' in cfg.to_json()
    assert cfg.fit_intercept is True
    assert SolverConfig(lam=1.0).fit_intercept is False


@pytest.mark.parametrize(
    "kwargs",
    [
        {"lam": -1.0},
        {"lam": 1.0, "gamma": -0.1, "mode": "highdim"},
        {"lam": 1.0, "gamma": 0.5},
        {"lam": 1.0, "tolerance_kkt": 0.0},
        {"lam": 1.0, "smoothing_schedule": (1e-2, 1e-1)},
        {"lam": 1.0, "max_outer_iterations": 0},
        {"lam": 1.0, "delta": 1.0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


# ---------------------------------------------------------------------------
# moderate solver
# ---------------------------------------------------------------------------


def test_moderate_errors(rng):
    xn = rng.standard_normal((10, 3))
    with pytest.raises(ValueError, match="non-unique trivial minimizers"):
        solve_moderate(xn, SolverConfig(lam=0.0))
    with pytest.raises(ValueError, match="high-dimensional"):
        solve_moderate(rng.standard_normal((3, 3)), SolverConfig(lam=1.0))
    with pytest.raises(ValueError):
        solve_moderate(xn, SolverConfig(lam=1.0, mode="highdim"))


def test_lambda_above_max_gives_zero_theta(rng):
    xn = contaminated_design(rng, 15, 3)
    lm = lambda_max(xn)
    fit = solve_moderate(xn, SolverConfig(lam=1.01 * lm))
    assert not np.any(fit.theta_hat)
    b0, _ = coefficients_from_theta(xn, np.zeros_like(xn), False)
    np.testing.assert_allclose(fit.b_hat, b0, atol=1e-12)
    assert fit.kkt_residual <= 1e-10
    below = solve_moderate(xn, SolverConfig(lam=0.9 * lm))
    assert np.any(below.theta_hat)


def test_closed_form_b(rng):
    xn = contaminated_design(rng, 14, 3)
    fit = solve_moderate(xn, SolverConfig(lam=0.6))
    proj = build_projectors(xn)
    for j in range(3):
        others = [k for k in range(3) if k != j]
        lhs = xn[:, others] @ fit.b_hat[others, j]
        v = xn[:, j] - fit.theta_hat[:, j]
        rhs = -(v - proj.apply_column(j, v))
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)
    assert np.all(np.diag(fit.b_hat) == 1.0)


@pytest.mark.skipif(not HAVE_CVXPY, reason="cvxpy not installed")
@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("lam", [0.2, 0.5, 1.0])
def test_moderate_matches_clarabel(seed, lam):
    g = np.random.default_rng(seed)
    xn = contaminated_design(g, int(g.integers(8, 16)), int(g.integers(2, 5)))
    fit = solve_moderate(xn, SolverConfig(lam=lam))
    ref = clarabel_value(xn, lam)
    assert abs(fit.objective - ref) / ref <= 1e-6


@pytest.mark.skipif(not HAVE_CVXPY, reason="cvxpy not installed")
@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("lam,gamma", [(0.2, 0.5), (1.0, 0.0), (0.5, 0.5), (5.0, 0.5)])
def test_highdim_matches_clarabel(seed, lam, gamma):
    g = np.random.default_rng(100 + seed)
    xn = contaminated_design(g, int(g.integers(6, 16)), int(g.integers(2, 5)))
    fit = solve_highdim(xn, SolverConfig(lam=lam, gamma=gamma, mode="highdim"))
    ref = clarabel_value(xn, lam, gamma, intercept=True)
    assert abs(fit.objective - ref) / ref <= 1e-6


@pytest.mark.skipif(not HAVE_CVXPY, reason="cvxpy not installed")
def test_highdim_wide_matches_clarabel():
    g = np.random.default_rng(7)
    xn = contaminated_design(g, 8, 12)
    fit = solve_highdim(xn, SolverConfig(lam=0.5, gamma=0.5, mode="highdim"))
    ref = clarabel_value(xn, 0.5, 0.5, intercept=True)
    assert abs(fit.objective - ref) / ref <= 1e-6


def test_highdim_gamma_zero_matches_moderate(rng):
    for _ in range(5):
        xn = contaminated_design(rng, 20, 4)
        a = solve_moderate(xn, SolverConfig(lam=0.4))
        b = solve_highdim(xn, SolverConfig(lam=0.4, mode="highdim", fit_intercept=False))
        assert abs(a.objective - b.objective) / a.objective <= 1e-8


def test_highdim_huge_lambda(rng):
    xn = contaminated_design(rng, 20, 4)
    fit = solve_highdim(xn, SolverConfig(lam=1e6, gamma=0.0, mode="highdim"))
    assert not np.any(fit.theta_hat)
    xc = xn - xn.mean(axis=0)
    b0, _ = coefficients_from_theta(xc, np.zeros_like(xn), False)
    np.testing.assert_allclose(fit.b_hat, b0, atol=1e-8)


def test_highdim_huge_lambda_with_gamma_is_sqrt_lasso(rng):
    # Theta = 0, each column a square-root lasso with weight lam * gamma.
    xn = contaminated_design(rng, 25, 3)
    lam, gamma = 1e6, 1e-7
    fit = solve_highdim(xn, SolverConfig(lam=lam, gamma=gamma, mode="highdim"))
    assert not np.any(fit.theta_hat)
    cfg = SolverConfig(lam=lam, gamma=gamma, mode="highdim")
    assert fit.kkt_residual <= cfg.tolerance_kkt


def test_highdim_zero_column_degenerate(rng):
    xn = rng.standard_normal((10, 3))
    xn[:, 1] = 0.0
    fit = solve_highdim(xn, SolverConfig(lam=1.0, mode="highdim"))
    assert fit.status is Status.DEGENERATE


def test_highdim_rejects_zero_lambda(rng):
    with pytest.raises(ValueError):
        solve_highdim(rng.standard_normal((5, 3)), SolverConfig(lam=0.0, mode="highdim"))


@pytest.mark.parametrize("mode,gamma", [("moderate", 0.0), ("highdim", 0.0), ("highdim", 0.5)])
def test_trace_monotone_and_sparse_rows(rng, mode, gamma):
    for _ in range(3):
        xn = contaminated_design(rng, 15, 3, k=3, shift=5.0)
        fit = solve(xn, SolverConfig(lam=0.4, gamma=gamma, mode=mode))
        tr = np.array(fit.objective_trace)
        assert np.all(np.diff(tr) <= 1e-12)
        norms = row_norms(fit.theta_hat)
        assert np.all((norms == 0) | (norms > 1e-10))
        assert np.all(np.diag(fit.b_hat) == 1.0)


@pytest.mark.parametrize("mode", ["moderate", "highdim"])
def test_scale_equivariance(rng, mode):
    for _ in range(3):
        xn = contaminated_design(rng, 20, 3)
        cfg = SolverConfig(lam=0.35, mode=mode)
        f1, f7 = solve(xn, cfg), solve(7 * xn, cfg)
        np.testing.assert_allclose(f7.b_hat, f1.b_hat, rtol=0, atol=1e-8)
        np.testing.assert_allclose(f7.theta_hat, 7 * f1.theta_hat, rtol=0, atol=1e-8 * max(1, np.abs(f7.theta_hat).max()))
        np.testing.assert_allclose(f7.c_hat, 7 * f1.c_hat, atol=1e-8 * max(1, np.abs(f7.c_hat).max()))
        assert f7.objective == pytest.approx(7 * f1.objective, rel=1e-10)


def test_permutation_equivariance(rng):
    xn = contaminated_design(rng, 18, 3)
    perm = rng.permutation(18)
    cfg = SolverConfig(lam=0.4)
    a, b = solve(xn, cfg), solve(xn[perm], cfg)
    np.testing.assert_allclose(b.theta_hat, a.theta_hat[perm], atol=1e-8)
    np.testing.assert_allclose(b.b_hat, a.b_hat, atol=1e-8)


def test_smoothed_alternative_agrees(rng):
    xn = contaminated_design(rng, 15, 3)
    for mode, gamma in [("moderate", 0.0), ("highdim", 0.5)]:
        a = solve(xn, SolverConfig(lam=0.5, gamma=gamma, mode=mode))
        b = solve(xn, SolverConfig(lam=0.5, gamma=gamma, mode=mode, algorithm="smoothed_apg"))
        assert np.any(a.theta_hat)
        assert abs(a.objective - b.objective) / a.objective <= 1e-6
        assert np.all(np.diff(b.objective_trace) <= 1e-12)


# ---------------------------------------------------------------------------
# KKT residual
# ---------------------------------------------------------------------------


def _one_dim_fit(theta):
    x = np.array([[1.0], [-2.0], [0.5]])
    return x, FitRaw(np.eye(1), theta, np.zeros(1), [], 0.0, Status.CONVERGED)


def test_kkt_exact_one_dimensional_optimum():
    x, fit = _one_dim_fit(np.zeros((3, 1)))
    cfg = SolverConfig(lam=10.0)
    assert kkt_residual(fit, x, cfg) <= 1e-12


def test_kkt_detects_perturbation():
    x, fit = _one_dim_fit(np.zeros((3, 1)))
    fit.theta_hat = fit.theta_hat.copy()
    fit.theta_hat[1, 0] += 0.1
    assert kkt_residual(fit, x, SolverConfig(lam=10.0)) > 0.01


def test_kkt_converged_fits_within_tolerance(rng):
    for mode, gamma in [("moderate", 0.0), ("highdim", 0.5)]:
        xn = contaminated_design(rng, 20, 3)
        cfg = SolverConfig(lam=0.5, gamma=gamma, mode=mode)
        fit = solve(xn, cfg)
        if fit.status is Status.CONVERGED:
            assert fit.kkt_residual <= cfg.tolerance_kkt


def test_kkt_interpolating_optimum_certified():
    # lam small enough that some columns are interpolated at the optimum
    g = np.random.default_rng(3)
    xn = contaminated_design(g, 8, 3)
    fit = solve_moderate(xn, SolverConfig(lam=0.2))
    assert fit.degenerate_columns
    assert fit.kkt_residual <= 1e-6


def test_objective_definition(rng):
    xn = rng.standard_normal((6, 3))
    b = np.eye(3) + 0.1
    np.fill_diagonal(b, 1.0)
    theta = rng.standard_normal((6, 3))
    cfg = SolverConfig(lam=0.7, gamma=0.3, mode="highdim")
    r = xn @ b - theta
    expected = np.linalg.norm(r, axis=0).sum() + 0.7 * (np.linalg.norm(theta, axis=1).sum() + 0.3 * 0.6)
    assert objective(xn, b, theta, None, cfg) == pytest.approx(expected, rel=1e-14)
    cfg_diag = SolverConfig(lam=0.7, gamma=0.3, mode="highdim", penalize_diagonal=True)
    assert objective(xn, b, theta, None, cfg_diag) - objective(xn, b, theta, None, cfg) == pytest.approx(0.7 * 0.3 * 3)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def test_cone_examples():
    theta = np.arange(12.0).reshape(4, 3)
    c = cone_check(theta, theta, [1])
    assert c.lhs == 0 and c.rhs == 0 and c.in_cone
    c = cone_check(np.zeros((4, 3)), np.zeros((4, 3)), [])
    assert c.lhs == 0 and c.in_cone


def test_lambda_statistic_single_column():
    eps = np.array([[3.0], [-4.0], [0.0], [1.0]])
    xn = np.ones((4, 1))
    stat = lambda_condition_statistic(xn, eps)
    assert stat == pytest.approx(4.0 / np.linalg.norm(eps), rel=1e-15)


@given(st.lists(st.floats(0.01, 100.0), min_size=3, max_size=3), st.integers(0, 1000))
def test_lambda_statistic_column_scale_invariant(scales, seed):
    g = np.random.default_rng(seed)
    xn = g.standard_normal((12, 3))
    eps = g.standard_normal((12, 3))
    a = lambda_condition_statistic(xn, eps)
    b = lambda_condition_statistic(xn, eps * np.array(scales))
    assert a == pytest.approx(b, rel=1e-10)


def test_lambda_max_is_threshold(rng):
    xn = contaminated_design(rng, 12, 3)
    lm = lambda_max(xn)
    assert lm == pytest.approx(lambda_condition_statistic(xn, xn))
    assert Mode.MODERATE.value == "moderate"
