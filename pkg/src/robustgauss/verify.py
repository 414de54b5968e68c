"""Verification suites: oracle equivalence, the lambda-statistic bound, cone
membership and the error-rate law.

Each suite returns a ``SuiteResult`` whose checks carry the measured value
and the threshold it was compared against.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .bench import rate_regression
from .models import make_model
from .sampling import ContaminationSpec, generate_dataset, rng_from_seed, scaled_design
from .solver import (
    Mode,
    SolverConfig,
    cone_diagnostic,
    lambda_condition_statistic,
    solve,
    universal_lambda_moderate,
)

SUITES = ("solver-oracle", "lemma-stats", "cone", "rates")


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass
class SuiteResult:
    suite: str
    passed: bool
    checks: list[Check]
    stats: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def failing(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]


# ---------------------------------------------------------------------------
# solver against the subgradient oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TinyInstance:
    index: int
    n: int
    p: int
    mode: Mode
    lam: float
    gamma: float

    def design(self) -> np.ndarray:
        rng = rng_from_seed(7919 + self.index)
        x = rng.standard_normal((self.n, self.p))
        x[:2] += 3.0 * rng.standard_normal((2, self.p))
        return x / math.sqrt(self.n)

    def config(self) -> SolverConfig:
        return SolverConfig(lam=self.lam, gamma=self.gamma, mode=self.mode)


def tiny_instances(count: int = 20) -> list[TinyInstance]:
    """The frozen oracle instance set: n <= 15, p <= 4, both modes."""
    out = []
    for i in range(count):
        rng = rng_from_seed(104729 + i)
        n = int(rng.integers(6, 16))
        p = int(rng.integers(2, 5))
        mode = Mode.MODERATE if i % 2 == 0 else Mode.HIGHDIM
        lam = (0.2, 1.0, 5.0)[i % 3]
        gamma = 0.0 if mode is Mode.MODERATE else (0.0, 0.5)[(i // 2) % 2]
        out.append(TinyInstance(i, n, p, mode, lam, gamma))
    return out


def solver_oracle_suite(
    count: int = 20, iterations: int | None = None, tolerance: float = 1e-6
) -> SuiteResult:
    """Solver objective never exceeds the oracle's best value by more than ``tolerance``."""
    from ._oracle import DEFAULT_ITERATIONS, oracle_solve

    iterations = DEFAULT_ITERATIONS if iterations is None else iterations
    t0 = time.perf_counter()
    checks = []
    gaps = []
    for inst in tiny_instances(count):
        xn = inst.design()
        cfg = inst.config()
        fit = solve(xn, cfg)
        ref, *_ = oracle_solve(xn, cfg.lam, cfg.gamma, cfg.fit_intercept, cfg.penalize_diagonal, iterations)
        gap = (fit.objective - ref) / abs(ref)
        gaps.append(gap)
        checks.append(Check(f"instance {inst.index} ({inst.mode.value}, n={inst.n}, p={inst.p}, "
                            f"lambda={inst.lam:g}, gamma={inst.gamma:g})", gap, tolerance, gap <= tolerance))
    stats = {"max_gap": max(gaps), "min_gap": min(gaps), "oracle_iterations": iterations}
    return SuiteResult("solver-oracle", all(c.passed for c in checks), checks, stats, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# lambda-statistic bound
# ---------------------------------------------------------------------------


def statistic_bound(n: int, p: int, delta: float) -> float:
    return math.sqrt(4.0 * math.log(2 * n * p / delta) / n)


def lemma_stats_suite(
    n: int = 200, p: int = 5, delta: float = 0.1, seeds: int = 500, slack: float = 0.03, model: int = 1
) -> SuiteResult:
    """Frequency with which the statistic exceeds its high-probability bound."""
    t0 = time.perf_counter()
    m = make_model(model, p)
    bound = statistic_bound(n, p, delta)
    values = []
    for s in range(seeds):
        data = generate_dataset(m, n, ContaminationSpec(0.0, seed=s))
        values.append(lambda_condition_statistic(scaled_design(data.x), data.noise))
    values = np.array(values)
    freq = float(np.mean(values > bound))
    check = Check("exceedance frequency", freq, delta + slack, freq <= delta + slack)
    stats = {"bound": bound, "statistic_mean": float(values.mean()), "statistic_max": float(values.max()), "seeds": seeds}
    return SuiteResult("lemma-stats", check.passed, [check], stats, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# cone membership
# ---------------------------------------------------------------------------


def cone_suite(
    n: int = 400, p: int = 5, epsilon: float = 0.05, delta: float = 0.05, replications: int = 200,
    model: int = 1, seed_base: int = 20_000,
) -> SuiteResult:
    """Fraction of fits whose error lies in the dimension-reduction cone."""
    t0 = time.perf_counter()
    m = make_model(model, p)
    lam = universal_lambda_moderate(n, p, delta)
    inside = []
    zero = 0
    for r in range(replications):
        data = generate_dataset(m, n, ContaminationSpec(epsilon, seed=seed_base + r))
        fit = solve(scaled_design(data.x), SolverConfig(lam=lam, delta=delta))
        inside.append(cone_diagnostic(fit, data).in_cone)
        zero += int(not np.any(fit.theta_hat))
    frac = float(np.mean(inside))
    threshold = 1.0 - 3.0 * delta
    check = Check("in-cone fraction", frac, threshold, frac >= threshold)
    stats = {"lambda": lam, "replications": replications, "zero_theta_fraction": zero / replications}
    return SuiteResult("cone", check.passed, [check], stats, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# rate law
# ---------------------------------------------------------------------------


def rates_suite(
    ns=(250, 500, 1000, 2000), p: int = 5, outliers: int = 10, delta: float = 0.05, replications: int = 30,
    model: int = 1, seed_base: int = 30_000, bounds=(-0.65, -0.35),
) -> SuiteResult:
    """Log-log slope of the mean ``||Theta_hat - Theta*||_F`` against n."""
    t0 = time.perf_counter()
    m = make_model(model, p)
    means = []
    zero = 0
    total = 0
    for k, n in enumerate(ns):
        lam = universal_lambda_moderate(n, p, delta)
        errs = []
        for r in range(replications):
            data = generate_dataset(m, n, ContaminationSpec(outliers / n, seed=seed_base + 1000 * k + r))
            fit = solve(scaled_design(data.x), SolverConfig(lam=lam, delta=delta))
            errs.append(float(np.linalg.norm(fit.theta_hat - data.theta_star)))
            zero += int(not np.any(fit.theta_hat))
            total += 1
        means.append((n, float(np.mean(errs))))
    fit_rate = rate_regression(means)
    lo, hi = bounds
    check = Check("log-log slope", fit_rate.slope, lo, lo <= fit_rate.slope <= hi)
    stats = {
        "slope": fit_rate.slope,
        "intercept": fit_rate.intercept,
        "r2": fit_rate.r2,
        "slope_bounds": list(bounds),
        "mean_errors": {str(n): e for n, e in means},
        "zero_theta_fraction": zero / total,
    }
    return SuiteResult("rates", check.passed, [check], stats, time.perf_counter() - t0)


def quick_settings(suite: str) -> dict:
    """Reduced sizes for smoke runs."""
    return {
        "solver-oracle": {"count": 4, "iterations": 100_000, "tolerance": 1e-3},
        "lemma-stats": {"seeds": 60, "slack": 0.1},
        "cone": {"replications": 20},
        "rates": {"replications": 3},
    }[suite]


def run_suite(suite: str, quick: bool = False) -> SuiteResult:
    runners = {
        "solver-oracle": solver_oracle_suite,
        "lemma-stats": lemma_stats_suite,
        "cone": cone_suite,
        "rates": rates_suite,
    }
    if suite not in runners:
        raise ValueError(f"unknown suite {suite!r}; choose from {list(SUITES)}")
    return runners[suite](**(quick_settings(suite) if quick else {}))
