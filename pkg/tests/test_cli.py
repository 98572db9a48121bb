import json
import math
import subprocess
import sys

import numpy as np
import pytest

from randnls.cli import EXIT_ABORT, EXIT_INVALID, EXIT_OK, EXIT_UNKNOWN, SUBCOMMANDS, bundled_config, main
from randnls.evolution import read_trajectory
from randnls.experiments import read_csv
from randnls.grid import read_snapshot


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


@pytest.mark.parametrize("sub", [s for s in SUBCOMMANDS if s != "dilate"])
def test_bundled_configs_run(sub, tmp_path):
    out = tmp_path / sub
    assert main([sub, "--out", str(out), "--quiet"]) == EXIT_OK
    res = json.loads((out / "results.json").read_text())
    assert res["subcommand"] == sub
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok" and man["input_hash"] == res["input_hash"]


def test_unknown_subcommand(capsys):
    assert main(["integrate"]) == EXIT_UNKNOWN
    assert "unknown subcommand" in capsys.readouterr().err


def test_bad_flag_is_invalid():
    assert main(["pvar", "--bogus"]) == EXIT_INVALID


def test_missing_seed_names_field(tmp_path, capsys):
    cfg = bundled_config("tail")
    del cfg["randomization"]["seed"]
    assert main(["tail", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_INVALID
    assert "randomization.seed" in capsys.readouterr().err


def test_wrong_type_and_bad_json(tmp_path, capsys):
    cfg = bundled_config("evolve")
    cfg["evolve"]["dt"] = "small"
    assert main(["evolve", "--config", write_config(tmp_path, cfg)]) == EXIT_INVALID
    assert "evolve.dt" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["evolve", "--config", str(bad)]) == EXIT_INVALID
    assert main(["evolve", "--config", str(tmp_path / "missing.json")]) == EXIT_INVALID


def test_numerical_abort_exit_code(tmp_path, capsys):
    cfg = bundled_config("evolve")
    cfg["profile"]["amplitude"] = 1e200
    assert main(["evolve", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_ABORT
    assert "numerical abort" in capsys.readouterr().err


def test_pvar_prints_sqrt2(tmp_path, capsys):
    assert main(["pvar", "--out", str(tmp_path)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == repr(math.sqrt(2))


def test_default_tail_fit_valid(tmp_path):
    assert main(["tail", "--out", str(tmp_path), "--quiet"]) == EXIT_OK
    fit = json.loads((tmp_path / "results.json").read_text())["results"]["tail"]["fit"]
    assert fit["valid"] and fit["slope"] < 0 and fit["r_squared"] >= 0.9
    header, rows = read_csv(tmp_path / "survival.csv")
    assert header == ["threshold", "survival"]
    surv = np.array([float(r[1]) for r in rows])
    assert surv[0] == 1.0 and np.all(np.diff(surv) <= 0)


def test_results_identical_across_workers(tmp_path):
    texts = []
    for w in (1, 4):
        out = tmp_path / f"w{w}"
        assert main(["tail", "--out", str(out), "--workers", str(w), "--quiet"]) == EXIT_OK
        texts.append((out / "results.json").read_bytes())
    assert texts[0] == texts[1]


def test_workers_env_and_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("RANDNLS_WORKERS", "2")
    assert main(["pvar", "--out", str(tmp_path / "a"), "--quiet"]) == EXIT_OK
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["workers"] == 2
    monkeypatch.setenv("RANDNLS_WORKERS", "many")
    assert main(["pvar", "--out", str(tmp_path / "b")]) == EXIT_INVALID
    assert main(["pvar", "--workers", "0"]) == EXIT_INVALID


def test_seed_override(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["randomize", "--out", str(a), "--quiet"])
    main(["randomize", "--out", str(b), "--quiet", "--seed-override", "99"])
    ra = json.loads((a / "results.json").read_text())
    rb = json.loads((b / "results.json").read_text())
    assert rb["config"]["randomization"]["seed"] == 99
    assert ra["input_hash"] != rb["input_hash"]
    assert ra["results"]["samples"] != rb["results"]["samples"]


def test_outputs_round_trip(tmp_path):
    cfg = bundled_config("randomize")
    cfg["snapshots"] = True
    out = tmp_path / "r"
    assert main(["randomize", "--config", write_config(tmp_path, cfg), "--out", str(out), "--quiet"]) == EXIT_OK
    header, rows = read_csv(out / "samples.csv")
    u = read_snapshot(out / "fields" / "sample_00000.rnls")
    assert np.sqrt(u.grid.weight * np.sum(np.abs(u.physical) ** 2)) == pytest.approx(float(rows[0][1]), rel=1e-12)

    out = tmp_path / "e"
    assert main(["evolve", "--out", str(out), "--quiet"]) == EXIT_OK
    traj = read_trajectory(out / "trajectory")
    res = json.loads((out / "results.json").read_text())["results"]
    assert len(traj.times) == res["n_samples"]
    assert res["max_relative_mass_drift"] < 1e-12


def test_builtin_config_name(tmp_path):
    assert main(["tail", "--config", "builtin:tail_strichartz", "--out", str(tmp_path), "--quiet"]) == EXIT_OK
    res = json.loads((tmp_path / "results.json").read_text())
    assert res["results"]["statistic"] == "strichartz"


def test_module_entry_point_version():
    r = subprocess.run([sys.executable, "-m", "randnls", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("randnls ")


def test_window_kind_recorded(tmp_path):
    assert main(["randomize", "--out", str(tmp_path), "--quiet"]) == EXIT_OK
    res = json.loads((tmp_path / "results.json").read_text())["results"]
    assert res["randomization"]["window_kind"] == "raised_cosine"
