from __future__ import annotations

import json
import subprocess
import sys

import pytest

from robustgauss import __version__
from robustgauss.cli import main


def _generate(out, *extra):
    return main(["generate", "--model", "toeplitz", "--p", "5", "--n", "100", "--epsilon", "0.1",
                 "--seed", "7", "--out", str(out), "--quiet", *extra])


def test_generate_writes_files(tmp_path):
    assert _generate(tmp_path / "d") == 0
    truth = json.loads((tmp_path / "d" / "truth.json").read_text())
    assert truth["outlier_count"] == 10
    assert (tmp_path / "d" / "data.csv").read_text().startswith("x0,x1,x2,x3,x4\n")


def test_generate_is_byte_identical(tmp_path):
    _generate(tmp_path / "a")
    _generate(tmp_path / "b")
    for name in ("data.csv", "truth.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_quiet_only_changes_console(tmp_path, capsys):
    main(["generate", "--p", "3", "--n", "20", "--out", str(tmp_path / "loud")])
    assert "truth.json" in capsys.readouterr().out
    main(["generate", "--p", "3", "--n", "20", "--out", str(tmp_path / "quiet"), "--quiet"])
    assert capsys.readouterr().out == ""
    assert (tmp_path / "loud" / "data.csv").read_bytes() == (tmp_path / "quiet" / "data.csv").read_bytes()


def test_generate_epsilon_one_is_usage_error(tmp_path, capsys):
    assert main(["generate", "--p", "5", "--n", "100", "--epsilon", "1.0", "--out", str(tmp_path)]) == 2
    assert "epsilon must be < 1" in capsys.readouterr().err


def test_generate_custom(tmp_path):
    (tmp_path / "a.csv").write_text("2,1\n1,2\n")
    assert main(["generate", "--model", "custom", "--matrix", str(tmp_path / "a.csv"), "--p", "2", "--n", "10",
                 "--out", str(tmp_path / "o"), "--quiet"]) == 0
    (tmp_path / "bad.csv").write_text("1,0\n0,-1\n")
    assert main(["generate", "--model", "custom", "--matrix", str(tmp_path / "bad.csv"), "--p", "2", "--n", "10",
                 "--out", str(tmp_path / "o2"), "--quiet"]) == 1


def test_bad_flag_is_usage_error(tmp_path):
    assert main(["generate", "--model", "nope", "--out", str(tmp_path)]) == 2
    assert main([]) == 2


def test_fit_auto_lambda(tmp_path):
    _generate(tmp_path / "d")
    rc = main(["fit", "--data", str(tmp_path / "d" / "data.csv"), "--mode", "moderate", "--lambda", "auto",
               "--delta", "0.1", "--out", str(tmp_path / "f"), "--quiet", "--reestimate"])
    assert rc == 0
    summary = json.loads((tmp_path / "f" / "summary.json").read_text())
    assert summary["lambda"] == pytest.approx(4.0717, abs=5e-5)
    assert (tmp_path / "f" / "omega_mle.csv").exists()


def test_fit_missing_file(tmp_path):
    assert main(["fit", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "f")]) == 1


def test_fit_parse_error_names_row(tmp_path, capsys):
    (tmp_path / "x.csv").write_text("x0,x1\n1,2\n3,oops\n")
    assert main(["fit", "--data", str(tmp_path / "x.csv"), "--out", str(tmp_path / "f")]) == 1
    assert "line 3" in capsys.readouterr().err


def test_fit_degenerate_exits_zero(tmp_path):
    # constant column: every residual in it is zero
    rows = "\n".join(f"{i},{(i * 7) % 5},1" for i in range(12))
    (tmp_path / "x.csv").write_text("x0,x1,x2\n" + rows + "\n")
    assert main(["fit", "--data", str(tmp_path / "x.csv"), "--lambda", "0.5", "--out", str(tmp_path / "f"),
                 "--quiet"]) == 0
    summary = json.loads((tmp_path / "f" / "summary.json").read_text())
    assert summary["degenerate"] is True


def test_config_precedence(tmp_path):
    _generate(tmp_path / "d")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 0.9, "delta": 0.2}))
    main(["fit", "--config", str(cfg), "--data", str(tmp_path / "d" / "data.csv"), "--out", str(tmp_path / "a"), "--quiet"])
    assert json.loads((tmp_path / "a" / "summary.json").read_text())["lambda"] == 0.9
    main(["fit", "--config", str(cfg), "--lambda", "0.4", "--data", str(tmp_path / "d" / "data.csv"),
          "--out", str(tmp_path / "b"), "--quiet"])
    assert json.loads((tmp_path / "b" / "summary.json").read_text())["lambda"] == 0.4
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["fit", "--config", str(cfg), "--data", "x", "--out", str(tmp_path / "c")]) == 2


def _scenario(tmp_path, **kw):
    doc = {"model": "toeplitz", "p": 4, "n": 40, "epsilon_grid": [0.1], "replications": 1,
           "lambda_grid": [0.3], "seed_base": 3}
    doc.update(kw)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


def test_benchmark_jobs_identical(tmp_path):
    sc = _scenario(tmp_path, epsilon_grid=[0.05, 0.2], replications=2)
    assert main(["benchmark", "--scenario", str(sc), "--out", str(tmp_path / "j1"), "--quiet"]) == 0
    assert main(["benchmark", "--scenario", str(sc), "--jobs", "8", "--out", str(tmp_path / "j8"), "--quiet"]) == 0
    for name in ("report.csv", "report.json"):
        assert (tmp_path / "j1" / name).read_bytes() == (tmp_path / "j8" / name).read_bytes()


def test_benchmark_minimal_one_cell(tmp_path):
    sc = _scenario(tmp_path, estimators=["Our1"])
    assert main(["benchmark", "--scenario", str(sc), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    assert len((tmp_path / "o" / "report.csv").read_text().splitlines()) == 2


def test_benchmark_unknown_estimator(tmp_path, capsys):
    sc = _scenario(tmp_path, estimators=["Magic"])
    assert main(["benchmark", "--scenario", str(sc), "--out", str(tmp_path / "o")]) == 2
    assert "estimators" in capsys.readouterr().err


def test_verify_quick(tmp_path):
    assert main(["verify", "--suite", "lemma-stats", "--quick", "--out", str(tmp_path), "--quiet"]) == 0
    result = json.loads((tmp_path / "verify_lemma-stats.json").read_text())
    assert result["passed"] is True


def test_verify_failure_exit_code(tmp_path, monkeypatch, capsys):
    from robustgauss import verify

    def failing(suite, quick=False):
        return verify.SuiteResult(suite, False, [verify.Check("made up", 1.0, 0.0, False)])

    monkeypatch.setattr(verify, "run_suite", failing)
    assert main(["verify", "--suite", "cone", "--out", str(tmp_path)]) == 1
    assert "made up" in capsys.readouterr().err


def test_version_and_module_entry():
    out = subprocess.run([sys.executable, "-m", "robustgauss", "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.strip() == f"robustgauss {__version__} (generator numpy.random.PCG64)"
