"""Command-line interface: generate, fit, benchmark, verify.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .sampling import GENERATOR_NAME

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

MODEL_CHOICES = {"toeplitz": 1, "penta": 2, "star": 3, "equi": 4}
SCHEME_CHOICES = {"replace": "replace_standard_normal", "additive": "additive_bounded_rows"}


class UsageError(Exception):
    pass


def _say(args, msg: str) -> None:
    if not getattr(args, "quiet", False):
        print(msg)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _lambda_arg(text: str):
    if text == "auto":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--lambda must be a number or 'auto', got {text!r}") from None
    return v


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    from .io import read_matrix, write_dataset
    from .models import ModelSpec, Variant, make_model, normalize_precision
    from .sampling import ContaminationSpec, generate_dataset

    if not 0 <= args.epsilon < 1:
        raise UsageError("epsilon must be < 1 (and nonnegative)")
    if args.p is None or args.n is None:
        raise UsageError("--p and --n are required")
    if args.model == "custom":
        if not args.matrix:
            raise UsageError("--model custom needs --matrix <csv>")
        a = read_matrix(Path(args.matrix), header=False)
        if a.shape != (args.p, args.p):
            raise UsageError(f"custom matrix has shape {a.shape}, expected ({args.p}, {args.p})")
        model = normalize_precision(ModelSpec(Variant.CUSTOM, a).matrix)
    else:
        model = make_model(MODEL_CHOICES[args.model], args.p)
    if args.mu is not None:
        if len(args.mu) != args.p:
            raise UsageError(f"--mu needs {args.p} values")
        model = model.with_mean(np.array(args.mu))
    try:
        spec = ContaminationSpec(args.epsilon, SCHEME_CHOICES[args.scheme], args.seed, args.m_e)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = generate_dataset(model, args.n, spec)
    write_dataset(Path(args.out), data, model)
    _say(args, f"wrote {args.out}/data.csv ({data.n}x{data.p}) and truth.json with |O| = {len(data.outliers)}")
    return EXIT_OK


def cmd_fit(args) -> int:
    from .estimator import estimates_from_raw
    from .io import read_matrix, write_fit_raw, write_fit_result, write_json
    from .sampling import scaled_design
    from .solver import (
        Mode,
        SolverConfig,
        Status,
        solve,
        universal_lambda_highdim,
        universal_lambda_moderate,
    )

    x = read_matrix(Path(args.data))
    n, p = x.shape
    mode = args.mode
    if mode == "auto":
        mode = "moderate" if n > p else "highdim"
    if mode == "moderate" and n <= p:
        raise UsageError(f"moderate mode needs n > p (got n={n}, p={p}); use --mode highdim")
    if args.lam == "auto":
        lam = (universal_lambda_moderate(n, p, args.delta) if mode == "moderate"
               else universal_lambda_highdim(n, p, args.delta, args.outlier_budget))
    else:
        lam = args.lam
    try:
        cfg = SolverConfig(
            lam=lam, gamma=args.gamma if mode == "highdim" else 0.0, delta=args.delta, mode=Mode(mode),
            fit_intercept=args.fit_intercept, algorithm=args.algorithm,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if mode == "moderate" and args.gamma:
        _warn("--gamma is ignored in moderate mode")
    raw = solve(scaled_design(x), cfg)
    out = Path(args.out)
    try:
        result = estimates_from_raw(
            x, raw, cfg, center=not args.no_center, tau=args.tau, pd_floor=args.pd_floor, reestimate=args.reestimate
        )
    except ValueError as exc:
        if raw.status is not Status.DEGENERATE:
            raise
        write_fit_raw(out, raw)
        write_json(out / "summary.json", {
            **raw.summary(), "lambda": lam, "gamma": cfg.gamma, "mode": mode,
            "degenerate": True, "warning": str(exc),
        })
        _warn(f"degenerate fit: {exc}")
        _say(args, f"objective={raw.objective:.10g} kkt_residual={raw.kkt_residual:.3e} status=degenerate")
        return EXIT_OK
    write_fit_result(out, result)
    write_fit_raw(out, raw)
    if result.mle is not None:
        from .io import write_matrix

        write_matrix(out / "omega_mle.csv", result.mle.omega)
    if raw.status is Status.DEGENERATE:
        _warn("solver reported a degenerate problem; see summary.json")
    _say(args, f"objective={raw.objective:.10g} outliers={result.outliers_hat.size} "
               f"kkt_residual={raw.kkt_residual:.3e} status={raw.status.value}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    import jsonschema

    from .bench import Scenario, run_scenario

    try:
        doc = json.loads(Path(args.scenario).read_text())
    except FileNotFoundError:
        raise UsageError(f"scenario file not found: {args.scenario}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"scenario is not valid JSON: {exc}") from None
    try:
        scenario = Scenario.from_dict(doc)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(v) for v in exc.absolute_path) or "<root>"
        raise UsageError(f"invalid scenario at {path}: {exc.message}") from None
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid scenario: {exc}") from None
    report = run_scenario(scenario, jobs=args.jobs, timing=args.timing)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.json").write_text(report.to_json())
    failed = sum(1 for r in report.records if r.failure)
    _say(args, f"wrote {out}/report.csv and report.json ({len(report.records)} rows, {failed} failed)")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .io import write_json
    from .verify import run_suite

    result = run_suite(args.suite, quick=args.quick)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / f"verify_{args.suite}.json", result.to_dict())
    if result.passed:
        _say(args, f"{args.suite}: pass ({len(result.checks)} checks)")
        return EXIT_OK
    print(f"{args.suite}: FAIL: {', '.join(result.failing())}", file=sys.stderr)
    return EXIT_RUNTIME


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", default="out", help="output directory, created if absent (default ./out)")
    p.add_argument("--config", help="JSON file of option defaults; command-line flags take precedence")
    p.add_argument("--quiet", action="store_true", help="suppress console output (files are unchanged)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustgauss",
        description="Robust Gaussian precision-matrix estimation under row-wise contamination.",
        epilog="Options may also come from --config <json>; keys are option names "
               "(dashes or underscores), and explicit flags override them.",
    )
    parser.add_argument("--version", action="version", version=f"robustgauss {__version__} (generator {GENERATOR_NAME})")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a contaminated synthetic dataset")
    _common(g)
    g.add_argument("--model", choices=[*MODEL_CHOICES, "custom"], default="toeplitz")
    g.add_argument("--matrix", help="CSV base matrix for --model custom (no header)")
    g.add_argument("--p", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--epsilon", type=float, default=0.0)
    g.add_argument("--scheme", choices=list(SCHEME_CHOICES), default="replace")
    g.add_argument("--m-e", dest="m_e", type=float, default=1.0, help="row-norm constant of the additive scheme")
    g.add_argument("--mu", type=_float_list, help="comma-separated population mean (default zero)")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit the robust estimator to a CSV data file")
    _common(f)
    f.add_argument("--data", required=True, help="CSV with a header row and one observation per line")
    f.add_argument("--mode", choices=["auto", "moderate", "highdim"], default="auto")
    f.add_argument("--lambda", dest="lam", type=_lambda_arg, default="auto", help="penalty level or 'auto'")
    f.add_argument("--gamma", type=float, default=0.0)
    f.add_argument("--delta", type=float, default=0.05)
    f.add_argument("--outlier-budget", dest="outlier_budget", type=int, default=0,
                   help="outlier count assumed by the high-dimensional 'auto' lambda")
    f.add_argument("--fit-intercept", dest="fit_intercept", action=argparse.BooleanOptionalAction, default=None,
                   help="estimate the intercept (default: off in moderate mode, on in highdim)")
    f.add_argument("--tau", type=float, default=1e-8, help="row-norm threshold for outlier classification")
    f.add_argument("--pd-floor", dest="pd_floor", type=float, default=1e-8)
    f.add_argument("--no-center", dest="no_center", action="store_true", help="skip centring in the diagonal estimate")
    f.add_argument("--reestimate", action="store_true", help="also write the MLE on classified inliers")
    f.add_argument("--algorithm", choices=["admm", "smoothed_apg"], default="admm")
    f.set_defaults(func=cmd_fit)

    b = sub.add_parser("benchmark", help="run a benchmark scenario")
    _common(b)
    b.add_argument("--scenario", required=True, help="scenario JSON")
    b.add_argument("--jobs", type=int, default=1, help="parallel worker processes; output is identical for any value")
    b.add_argument("--timing", action="store_true", help="fill runtime_ms (makes reports time-dependent)")
    b.set_defaults(func=cmd_benchmark)

    v = sub.add_parser("verify", help="run a verification suite")
    _common(v)
    v.add_argument("--suite", required=True, choices=["solver-oracle", "lemma-stats", "cone", "rates"])
    v.add_argument("--quick", action="store_true", help="reduced sizes for a smoke run")
    v.set_defaults(func=cmd_verify)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Turn the JSON named by ``--config`` into subparser defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    command = next((a for a in argv if a in ("generate", "fit", "benchmark", "verify")), None)
    if command is None:
        return
    subparser = parser._subparsers._group_actions[0].choices[command]
    dests = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = {"lambda": "lam"}.get(key, key.replace("-", "_"))
        if dest not in dests:
            raise UsageError(f"unknown config key {key!r} for {command}")
        defaults[dest] = value
    subparser.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
