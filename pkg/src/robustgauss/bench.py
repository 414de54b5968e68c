"""Synthetic benchmark harness: scenarios, oracle tuning, metrics and reports.

A scenario crosses a contamination grid with replications.  Each
(epsilon, replication) cell draws one dataset and evaluates every requested
estimator on it, so estimators are compared on paired data.  Cells are
independent and seeded from the scenario alone; the report is assembled in
cell order, so running cells in parallel never changes the output bytes.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import math
import time
import warnings
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .estimator import DEFAULT_PD_FLOOR, DEFAULT_TAU, fit_pipeline, naive_mle, reestimate_mle, repair_pd
from .models import ModelSpec, PrecisionModel, Variant, make_model
from .sampling import GENERATOR_NAME, ContaminatedDataset, ContaminationSpec, Scheme, generate_dataset
from .solver import Mode, SolverConfig, universal_lambda_highdim, universal_lambda_moderate

ESTIMATORS = ("Our1", "Our2", "NaiveMLE")
CSV_COLUMNS = [
    "model", "p", "n", "epsilon", "estimator", "replication", "lambda", "gamma",
    "frob_error", "theta_err_11", "theta_err_21", "theta_err_22", "runtime_ms",
]
SEED_MIX = "splitmix64 chain over (seed_base, crc32(model_ref), n, epsilon_index, replication)"
_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def frobenius_error(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def _vector_norm(v: np.ndarray, q: float, axis: int) -> np.ndarray:
    return np.linalg.norm(v, ord=q, axis=axis)


def mixed_norm(m: np.ndarray, q1: float, q2: float) -> float:
    """``q2``-norm of the vector of row ``q1``-norms; ``q1, q2`` in {1, 2, inf}."""
    for q in (q1, q2):
        if q not in (1, 2, math.inf):
            raise ValueError(f"norm index must be 1, 2 or inf, got {q}")
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return 0.0
    rows = _vector_norm(m, q1, axis=1)
    return float(np.linalg.norm(rows, ord=q2))


def theta_errors(theta_hat: np.ndarray, theta_star: np.ndarray) -> tuple[float, float, float]:
    d = np.asarray(theta_hat) - np.asarray(theta_star)
    return mixed_norm(d, 1, 1), mixed_norm(d, 2, 1), mixed_norm(d, 2, 2)


def norm_chain_holds(err11: float, err21: float, err22: float, rows: int, p: int, slack: float = 1e-9) -> bool:
    """``||D||_{2,1} <= sqrt(rows) ||D||_{2,2}`` and ``||D||_{1,1} <= sqrt(p) ||D||_{2,1}``."""
    ok21 = err21 <= math.sqrt(rows) * err22 * (1 + slack) + slack
    ok11 = err11 <= math.sqrt(p) * err21 * (1 + slack) + slack
    return ok21 and ok11


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float


def rate_regression(results) -> RateFit:
    """Least-squares fit of ``log(error)`` on ``log(n)``.

    ``results`` is a sequence of ``(n, error)`` pairs; pairs with a
    nonpositive error are dropped with a warning.
    """
    pairs = [(float(n), float(e)) for n, e in results]
    kept = [(n, e) for n, e in pairs if e > 0 and n > 0]
    if len(kept) < len(pairs):
        warnings.warn(f"dropped {len(pairs) - len(kept)} nonpositive error(s) from the rate regression", stacklevel=2)
    if len({n for n, _ in kept}) < 4:
        raise ValueError("rate regression needs at least 4 distinct sample sizes")
    ln = np.log([n for n, _ in kept])
    le = np.log([e for _, e in kept])
    design = np.column_stack([ln, np.ones_like(ln)])
    (slope, intercept), *_ = np.linalg.lstsq(design, le, rcond=None)
    fitted = design @ np.array([slope, intercept])
    ss_res = float(((le - fitted) ** 2).sum())
    ss_tot = float(((le - le.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2)


# ---------------------------------------------------------------------------
# seeds
# ---------------------------------------------------------------------------


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def cell_seed(seed_base: int, model_ref: str, n: int, eps_index: int, replication: int) -> int:
    h = int(seed_base) & _MASK64
    for v in (zlib.crc32(model_ref.encode()), n, eps_index, replication):
        h = splitmix64(h ^ (int(v) & _MASK64))
    return h


# ---------------------------------------------------------------------------
# tuning
# ---------------------------------------------------------------------------


class TuningError(ValueError):
    pass


@dataclass
class GridPoint:
    lam: float
    gamma: float
    errors: dict[str, float]
    theta_errors: tuple[float, float, float] | None = None
    failure: str | None = None


def _solver_config(lam: float, gamma: float, mode: Mode, delta: float) -> SolverConfig:
    return SolverConfig(lam=lam, gamma=gamma if mode is Mode.HIGHDIM else 0.0, delta=delta, mode=mode)


def evaluate_grid(
    dataset: ContaminatedDataset,
    lambda_grid,
    gamma_grid,
    model: PrecisionModel,
    mode: Mode = Mode.MODERATE,
    delta: float = 0.05,
    *,
    tau: float = DEFAULT_TAU,
    pd_floor: float = DEFAULT_PD_FLOOR,
    center: bool = True,
) -> list[GridPoint]:
    """Errors of Our1 and Our2 at every ``(lambda, gamma)`` grid point."""
    points = []
    for lam in lambda_grid:
        for gamma in gamma_grid:
            try:
                cfg = _solver_config(float(lam), float(gamma), mode, delta)
                res = fit_pipeline(dataset.x, cfg, center=center, tau=tau, pd_floor=pd_floor)
            except (ValueError, np.linalg.LinAlgError) as exc:
                points.append(GridPoint(float(lam), float(gamma), {}, None, f"{type(exc).__name__}: {exc}"))
                continue
            errs = {"Our1": frobenius_error(res.omega_hat_pd, model.omega_star)}
            failure = None
            # Our2 can fail on its own when nearly every row is flagged
            try:
                mle = reestimate_mle(dataset.x, res.outliers_hat)
                errs["Our2"] = frobenius_error(repair_pd(mle.omega, pd_floor), model.omega_star)
            except (ValueError, np.linalg.LinAlgError) as exc:
                failure = f"Our2 {type(exc).__name__}: {exc}"
            points.append(GridPoint(float(lam), float(gamma), errs, theta_errors(res.raw.theta_hat, dataset.theta_star), failure))
    return points


def select_oracle(points: list[GridPoint], estimator: str) -> GridPoint:
    """Grid point with the smallest error; ties go to larger lambda, then larger gamma."""
    ok = [pt for pt in points if estimator in pt.errors and math.isfinite(pt.errors[estimator])]
    if not ok:
        detail = "; ".join(f"(lambda={pt.lam:g}, gamma={pt.gamma:g}): {pt.failure}" for pt in points)
        raise TuningError(f"every grid point failed for {estimator}: {detail}")
    ok.sort(key=lambda pt: (pt.errors[estimator], -pt.lam, -pt.gamma))
    return ok[0]


@dataclass(frozen=True)
class OracleChoice:
    lam: float
    gamma: float
    error: float


def oracle_tune(
    dataset: ContaminatedDataset,
    lambda_grid,
    gamma_grid,
    model: PrecisionModel,
    estimator: str = "Our1",
    mode: Mode = Mode.MODERATE,
    delta: float = 0.05,
) -> OracleChoice:
    """Grid point minimizing ``||Omega_hat_pd - Omega*||_F`` for one estimator."""
    if estimator not in ("Our1", "Our2"):
        raise ValueError(f"oracle tuning applies to Our1 and Our2, not {estimator}")
    if not len(lambda_grid) or not len(gamma_grid):
        raise ValueError("grids must be nonempty")
    best = select_oracle(evaluate_grid(dataset, lambda_grid, gamma_grid, model, Mode(mode), delta), estimator)
    return OracleChoice(best.lam, best.gamma, best.errors[estimator])


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

_MODEL_ALIASES = {
    "toeplitz": Variant.TOEPLITZ06, "toeplitz06": Variant.TOEPLITZ06, "model1": Variant.TOEPLITZ06,
    "penta": Variant.PENTADIAGONAL, "pentadiagonal": Variant.PENTADIAGONAL, "model2": Variant.PENTADIAGONAL,
    "star": Variant.STAR, "model3": Variant.STAR,
    "equi": Variant.EQUICORRELATION, "equicorrelation": Variant.EQUICORRELATION, "model4": Variant.EQUICORRELATION,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["model", "p", "n", "epsilon_grid", "replications"],
    "additionalProperties": False,
    "properties": {
        "model": {"anyOf": [{"type": "integer", "minimum": 1, "maximum": 4}, {"enum": sorted(_MODEL_ALIASES)}]},
        "p": {"type": "integer", "minimum": 2},
        "n": {"type": "integer", "minimum": 2},
        "epsilon_grid": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}},
        "replications": {"type": "integer", "minimum": 1},
        "lambda_grid": {"type": ["array", "null"], "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "gamma_grid": {"type": ["array", "null"], "minItems": 1, "items": {"type": "number", "minimum": 0}},
        "estimators": {"type": "array", "minItems": 1, "uniqueItems": True, "items": {"enum": list(ESTIMATORS)}},
        "seed_base": {"type": "integer", "minimum": 0, "maximum": _MASK64},
        "mode": {"enum": ["auto", "moderate", "highdim"]},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "scheme": {"enum": [s.value for s in Scheme]},
        "m_e": {"type": "number", "exclusiveMinimum": 0},
        "tau": {"type": "number", "minimum": 0},
        "pd_floor": {"type": "number", "exclusiveMinimum": 0},
        "center": {"type": "boolean"},
    },
}


def _variant(model) -> Variant:
    if isinstance(model, int):
        return ModelSpec.model(model).variant
    key = str(model).lower()
    if key in _MODEL_ALIASES:
        return _MODEL_ALIASES[key]
    return Variant(key)


@dataclass(frozen=True)
class Scenario:
    """One benchmark configuration.

    ``lambda_grid=None`` uses 8 log-spaced points over
    ``[lambda_univ / 8, 8 * lambda_univ]``; ``gamma_grid=None`` uses ``[0]``
    in moderate mode and ``[0, 0.25, 0.5, 1]`` in high-dimensional mode.
    ``mode="auto"`` picks moderate when ``n > p``.
    """

    model: int | str
    p: int
    n: int
    epsilon_grid: tuple[float, ...]
    replications: int
    lambda_grid: tuple[float, ...] | None = None
    gamma_grid: tuple[float, ...] | None = None
    estimators: tuple[str, ...] = ESTIMATORS
    seed_base: int = 0
    mode: str = "auto"
    delta: float = 0.05
    scheme: str = Scheme.REPLACE_STANDARD_NORMAL.value
    m_e: float = 1.0
    tau: float = DEFAULT_TAU
    pd_floor: float = DEFAULT_PD_FLOOR
    center: bool = True

    def __post_init__(self):
        for name in ("epsilon_grid", "lambda_grid", "gamma_grid", "estimators"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(v))
        _variant(self.model)
        if not self.epsilon_grid:
            raise ValueError("epsilon_grid must be nonempty")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown or not self.estimators:
            raise ValueError(f"unknown estimator(s) {unknown}; choose from {list(ESTIMATORS)}")
        if self.lambda_grid is not None and (not self.lambda_grid or min(self.lambda_grid) <= 0):
            raise ValueError("lambda_grid must be nonempty and positive")
        if self.gamma_grid is not None and (not self.gamma_grid or min(self.gamma_grid) < 0):
            raise ValueError("gamma_grid must be nonempty and nonnegative")
        if self.resolved_mode() is Mode.MODERATE and self.n <= self.p:
            raise ValueError("moderate mode needs n > p")

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        import jsonschema

        jsonschema.validate(d, SCENARIO_SCHEMA)
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def resolved_mode(self) -> Mode:
        if self.mode == "auto":
            return Mode.MODERATE if self.n > self.p else Mode.HIGHDIM
        return Mode(self.mode)

    def build_model(self) -> PrecisionModel:
        return make_model(ModelSpec(_variant(self.model)), self.p)

    def universal_lambda(self) -> float:
        if self.resolved_mode() is Mode.MODERATE:
            return universal_lambda_moderate(self.n, self.p, self.delta)
        return universal_lambda_highdim(self.n, self.p, self.delta)

    def lambdas(self) -> tuple[float, ...]:
        if self.lambda_grid is not None:
            return self.lambda_grid
        lu = self.universal_lambda()
        return tuple(float(v) for v in np.geomspace(lu / 8.0, 8.0 * lu, 8))

    def gammas(self) -> tuple[float, ...]:
        if self.gamma_grid is not None:
            return self.gamma_grid if self.resolved_mode() is Mode.HIGHDIM else (0.0,)
        return (0.0, 0.25, 0.5, 1.0) if self.resolved_mode() is Mode.HIGHDIM else (0.0,)


@dataclass
class CellRecord:
    estimator: str
    epsilon: float
    replication: int
    lam: float | None
    gamma: float | None
    frob_error: float | None
    theta_err: tuple[float, float, float] | None
    runtime_ms: float | None
    failure: str | None = None


def run_cell(scenario: Scenario, eps_index: int, replication: int, timing: bool = False) -> list[CellRecord]:
    """All estimators on one freshly generated dataset."""
    with threadpool_limits(1):
        return _run_cell(scenario, eps_index, replication, timing)


def _run_cell(scenario: Scenario, eps_index: int, replication: int, timing: bool) -> list[CellRecord]:
    model = scenario.build_model()
    eps = scenario.epsilon_grid[eps_index]
    seed = cell_seed(scenario.seed_base, model.ref, scenario.n, eps_index, replication)
    records: list[CellRecord] = []
    try:
        spec = ContaminationSpec(eps, Scheme(scenario.scheme), seed, scenario.m_e)
        data = generate_dataset(model, scenario.n, spec)
    except ValueError as exc:
        return [CellRecord(e, eps, replication, None, None, None, None, None, f"ValueError: {exc}") for e in scenario.estimators]

    tuned = [e for e in scenario.estimators if e != "NaiveMLE"]
    points = None
    grid_ms = None
    if tuned:
        t0 = time.perf_counter()
        points = evaluate_grid(
            data, scenario.lambdas(), scenario.gammas(), model, scenario.resolved_mode(), scenario.delta,
            tau=scenario.tau, pd_floor=scenario.pd_floor, center=scenario.center,
        )
        grid_ms = (time.perf_counter() - t0) * 1e3
    for est in scenario.estimators:
        if est == "NaiveMLE":
            t0 = time.perf_counter()
            try:
                omega = repair_pd(naive_mle(data.x).omega, scenario.pd_floor)
                err = frobenius_error(omega, model.omega_star)
                records.append(CellRecord(est, eps, replication, None, None, err, None, None))
            except (ValueError, np.linalg.LinAlgError) as exc:
                records.append(CellRecord(est, eps, replication, None, None, None, None, None, f"{type(exc).__name__}: {exc}"))
            if timing:
                records[-1].runtime_ms = (time.perf_counter() - t0) * 1e3
            continue
        try:
            best = select_oracle(points, est)
            records.append(CellRecord(est, eps, replication, best.lam, best.gamma, best.errors[est], best.theta_errors, None))
        except TuningError as exc:
            records.append(CellRecord(est, eps, replication, None, None, None, None, None, str(exc)))
        if timing:
            records[-1].runtime_ms = grid_ms
    return records


@dataclass
class BenchmarkReport:
    scenario: Scenario
    records: list[CellRecord] = field(default_factory=list)

    def _fmt(self, v) -> str:
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        s = self.scenario
        model_name = _variant(s.model).value
        for r in self.records:
            t = r.theta_err or (None, None, None)
            w.writerow([self._fmt(v) for v in (
                model_name, s.p, s.n, r.epsilon, r.estimator, r.replication, r.lam, r.gamma,
                r.frob_error, t[0], t[1], t[2], r.runtime_ms,
            )])
        return buf.getvalue()

    def summary(self) -> dict:
        s = self.scenario
        stats = []
        violations = 0
        for est in s.estimators:
            for eps in s.epsilon_grid:
                recs = [r for r in self.records if r.estimator == est and r.epsilon == eps]
                ok = [r for r in recs if r.frob_error is not None]
                errs = np.array([r.frob_error for r in ok], dtype=float)
                entry = {
                    "estimator": est,
                    "epsilon": eps,
                    "replications": len(recs),
                    "failed": len(recs) - len(ok),
                    "frob_error_mean": float(np.mean(errs)) if ok else None,
                    "frob_error_std": float(np.std(errs, ddof=1)) if len(ok) > 1 else (0.0 if ok else None),
                }
                th = [r.theta_err for r in ok if r.theta_err is not None]
                if th:
                    arr = np.array(th)
                    entry["theta_err_11_mean"] = float(np.mean(arr[:, 0]))
                    entry["theta_err_21_mean"] = float(np.mean(arr[:, 1]))
                    entry["theta_err_22_mean"] = float(np.mean(arr[:, 2]))
                    violations += sum(not norm_chain_holds(a, b, c, s.n, s.p) for a, b, c in th)
                lams = [r.lam for r in ok if r.lam is not None]
                if lams:
                    entry["oracle_lambda_median"] = float(np.median(lams))
                    entry["oracle_gamma_median"] = float(np.median([r.gamma for r in ok]))
                stats.append(entry)
        failures = [
            {"estimator": r.estimator, "epsilon": r.epsilon, "replication": r.replication, "error": r.failure}
            for r in self.records if r.failure
        ]
        from . import __version__

        return {
            "version": __version__,
            "generator": GENERATOR_NAME,
            "seed_mix": SEED_MIX,
            "scenario": s.to_dict(),
            "mode": s.resolved_mode().value,
            "lambda_grid": list(s.lambdas()),
            "gamma_grid": list(s.gammas()),
            "model_ref": s.build_model().ref,
            "statistics": stats,
            "norm_chain_violations": int(violations),
            "failed_cells": failures,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def mean_error(self, estimator: str, epsilon: float) -> float:
        for entry in self.summary()["statistics"]:
            if entry["estimator"] == estimator and entry["epsilon"] == epsilon:
                return entry["frob_error_mean"]
        raise KeyError((estimator, epsilon))


def _cell_task(args):
    scenario, i, r, timing = args
    return run_cell(scenario, i, r, timing)


def run_scenario(scenario: Scenario, jobs: int = 1, timing: bool = False) -> BenchmarkReport:
    """Run every cell and merge the results in (epsilon, replication) order.

    ``timing=True`` fills the ``runtime_ms`` column, which makes the report
    depend on wall-clock time; it is off by default so reports are
    reproducible byte for byte.
    """
    tasks = [(scenario, i, r, timing) for i in range(len(scenario.epsilon_grid)) for r in range(scenario.replications)]
    if jobs <= 1 or len(tasks) == 1:
        results = [_cell_task(t) for t in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    report = BenchmarkReport(scenario)
    for recs in results:
        report.records.extend(recs)
    return report
