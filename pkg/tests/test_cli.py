import io
import json
import os
import subprocess
import sys

import pytest

from gridsched.cli import main

SMALL = {"schema_version": 1, "grid": {"n_time": 8, "n_freq": 6, "window_ms": 1.0, "bandwidth_mhz": 12 / 11},
         "services": {"q_kbps": [512, 512], "tau_ms": [0.5, 0.5], "n_embb": 2}}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def _grid(n_time, n_freq):
    return {"schema_version": 1, "grid": {"n_time": n_time, "n_freq": n_freq}}


def test_enumerate_default():
    assert _run(["enumerate"]) == (0, "shape1=143 shape2=150 shape3=128 shape4=128 total=549\n")


def test_enumerate_small_grids(tmp_path):
    code, out = _run(["enumerate", "--config", _write(tmp_path, _grid(1, 1))])
    assert code == 0 and out == "shape1=0 shape2=0 shape3=0 shape4=0 total=0\n"
    code, out = _run(["enumerate", "--config", _write(tmp_path, _grid(4, 4))])
    assert code == 0 and out.strip().endswith("total=21")


def test_unknown_solver_is_usage_error(capsys):
    assert _run(["solve", "--solver", "simulated-annealing"])[0] == 1
    assert "invalid choice" in capsys.readouterr().err


def test_bruteforce_refuses_large_instance(capsys):
    assert _run(["solve", "--solver", "bruteforce"])[0] == 1
    assert "blocks" in capsys.readouterr().err


def test_solve_is_deterministic(tmp_path):
    cfg = _write(tmp_path, SMALL)
    a = _run(["solve", "--config", cfg, "--solver", "bpb", "--seed", "4", "--format", "json"])
    b = _run(["solve", "--config", cfg, "--solver", "bpb", "--seed", "4", "--format", "json"])
    assert a == b and a[0] == 0
    doc = json.loads(a[1])
    assert doc["seed"] == 4 and doc["solver"] == "bpb"
    assert all(set(x) == {"block_id", "service_id", "fraction"} for x in doc["assignments"])


def test_solve_formats(tmp_path):
    cfg = _write(tmp_path, SMALL)
    code, out = _run(["solve", "--config", cfg, "--solver", "exact", "--format", "csv"])
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# solver='exact'") and lines[1] == "block_id,service_id,fraction"
    code, out = _run(["solve", "--config", cfg, "--solver", "exact"])
    assert code == 0 and "status: optimal" in out


def test_p1_equals_exact_on_integral_config(tmp_path):
    # shape-1 blocks on a one-row grid with no URLLC: interval packing, so the relaxation is integral
    doc = {"schema_version": 1, "grid": {"n_time": 8, "n_freq": 1, "window_ms": 1.0, "bandwidth_mhz": 2 / 11},
           "services": {"q_kbps": [], "tau_ms": [], "n_embb": 2},
           "numerology": {"mode": "fixed", "fixed_shape": 1}}
    cfg = _write(tmp_path, doc)
    objs = [json.loads(_run(["solve", "--config", cfg, "--solver", s, "--format", "json"])[1])["objective_kbps"]
            for s in ("p1", "exact")]
    assert objs[0] == pytest.approx(objs[1], rel=1e-9)


def test_montecarlo_single_trial(tmp_path):
    doc = dict(SMALL, monte_carlo={"n_trials": 1, "roster": ["bpb"]})
    cfg = _write(tmp_path, doc)
    out = tmp_path / "run"
    assert _run(["montecarlo", "--config", cfg, "--out", str(out)])[0] == 0
    trials = (out / "trials.csv").read_text().splitlines()
    assert trials[0] == "# gridsched trials v1" and len(trials) == 3
    first = (out / "trials.csv").read_bytes(), (out / "summary.csv").read_bytes()
    assert _run(["montecarlo", "--config", cfg, "--out", str(out)])[0] == 0
    assert ((out / "trials.csv").read_bytes(), (out / "summary.csv").read_bytes()) == first


def test_bad_configs(tmp_path, capsys):
    assert _run(["enumerate", "--config", _write(tmp_path, {"schema_version": 1, "gird": {}})])[0] == 1
    assert "gird" in capsys.readouterr().err
    assert _run(["enumerate", "--config", _write(tmp_path, {"grid": {}})])[0] == 1
    assert _run(["enumerate", "--config", str(tmp_path / "missing.json")])[0] == 1
    (tmp_path / "broken.json").write_text("{not json")
    assert _run(["enumerate", "--config", str(tmp_path / "broken.json")])[0] == 1
    assert _run(["montecarlo", "--config", _write(tmp_path, SMALL), "--out", str(tmp_path), "--jobs", "0"])[0] == 1


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    doc = dict(SMALL, monte_carlo={"n_trials": 1, "roster": ["baseline"]})
    code = _run(["montecarlo", "--config", _write(tmp_path, doc), "--out", str(blocker / "sub")])[0]
    assert code == 2


def test_log_level_env(monkeypatch, capsys):
    monkeypatch.setenv("GRIDSCHED_LOG", "chatty")
    assert _run(["enumerate"])[0] == 1
    assert "GRIDSCHED_LOG" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gridsched.cli", "enumerate"], capture_output=True, text=True,
                          env=dict(os.environ, GRIDSCHED_LOG="error"))
    assert proc.returncode == 0 and proc.stdout.strip().endswith("total=549")
