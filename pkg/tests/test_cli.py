import json
import math
import subprocess
import sys

import pytest

from slelab import cli


def run(argv, tmp_path):
    return cli.run([*argv, "--out", str(tmp_path)])


def test_exponents_example(tmp_path):
    assert run(["exponents", "--kappa", "2"], tmp_path) == 0
    rec = json.loads((tmp_path / "exponents.json").read_text())
    assert rec["r_c"] == 2.5 and rec["p_var_exponent"] == 1.25
    assert rec["schema_version"]
    meta = json.loads((tmp_path / "exponents.meta.json").read_text())
    assert meta["command"] == "exponents" and "timestamp" in meta


def test_trace_example(tmp_path):
    assert run(["trace", "--kappa", "0", "--seed", "1", "--steps", "256"], tmp_path) == 0
    rows = [ln for ln in (tmp_path / "trace.csv").read_text().splitlines() if not ln.startswith("#")]
    t, re_g, im_g = map(float, rows[-1].split(","))
    assert t == 1.0 and abs(re_g) < 1e-12 and abs(im_g - 2.0) < 1e-3
    assert (tmp_path / "driver.csv").exists()


def test_unknown_subcommand_writes_nothing(tmp_path):
    out = tmp_path / "nowhere"
    assert cli.run(["bogus", "--out", str(out)]) == 2
    assert not out.exists()


def test_missing_seed(tmp_path, capsys):
    assert run(["trace", "--kappa", "2"], tmp_path) == 2
    assert "--seed" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []


def test_invalid_value(tmp_path):
    assert run(["exponents", "--kappa", "-1"], tmp_path) == 2
    assert run(["exponents", "--kappa", "2", "--r", "3"], tmp_path) == 2
    assert list(tmp_path.iterdir()) == []


def test_config_then_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kappa = 4  # comment\nr = 1.0\n")
    out = tmp_path / "a"
    assert cli.run(["exponents", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads((out / "exponents.json").read_text())["kappa"] == 4.0
    out = tmp_path / "b"
    assert cli.run(["exponents", "--config", str(cfg), "--kappa", "2", "--out", str(out)]) == 0
    assert json.loads((out / "exponents.json").read_text())["kappa"] == 2.0
    cfg.write_text("colour = red\n")
    assert cli.run(["exponents", "--config", str(cfg), "--kappa", "2", "--out", str(out)]) == 2


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SLELAB_OUTPUT_DIR", str(tmp_path / "env"))
    assert cli.run(["exponents", "--kappa", "8"]) == 0
    assert (tmp_path / "env" / "exponents.json").exists()


def test_reruns_byte_identical(tmp_path):
    argv = ["field", "--kappa-min", "1", "--kappa-max", "2", "--n-kappa", "3",
            "--steps", "32", "--seed", "4"]
    assert cli.run([*argv, "--out", str(tmp_path / "x")]) == 0
    assert cli.run([*argv, "--out", str(tmp_path / "y")]) == 0
    for name in ("field.csv", "field.json"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()


def test_check_command_reports_pass(tmp_path, capsys):
    argv = ["verify-hdiff", "--kappa", "2", "--kappa-tilde", "3", "--n", "5", "--steps", "64",
            "--seed", "1"]
    assert run(argv, tmp_path) == 0
    assert "h_diff_pathwise: PASS" in capsys.readouterr().out
    assert (tmp_path / "h_diff_pathwise.csv").exists()


def test_grr_and_norms(tmp_path):
    assert run(["grr-check", "--synthetic", "sum", "--n-grid", "5"], tmp_path) == 0
    rep = json.loads((tmp_path / "grr_report.json").read_text())
    assert rep["source"] == "synthetic:sum" and 0 < rep["empirical_constant"] < math.inf
    assert run(["trace", "--kappa", "2", "--seed", "3", "--steps", "64"], tmp_path) == 0
    assert run(["norms", "--csv", str(tmp_path / "trace.csv"), "--delta", "0.25"], tmp_path) == 0
    norms = json.loads((tmp_path / "norms.json").read_text())
    assert math.isfinite(norms["holder_constant"])


def test_numeric_failure_and_replay(tmp_path, monkeypatch, capsys):
    calls = []

    def boom(args):
        calls.append(args.kappa)
        raise ArithmeticError("synthetic failure")

    monkeypatch.setitem(cli.COMMANDS, "exponents", boom)
    monkeypatch.chdir(tmp_path)
    assert run(["exponents", "--kappa", "3"], tmp_path) == 1
    failure = tmp_path / "failure_exponents.json"
    data = json.loads(failure.read_text())
    assert data["error"] == "ArithmeticError" and "exponents" in data["argv"]
    assert "--replay" in capsys.readouterr().err
    assert cli.run(["--replay", str(failure)]) == 1
    assert calls == [3.0, 3.0]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "slelab", "exponents", "--kappa", "2",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
