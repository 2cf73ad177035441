import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from dretsim import cli, preset, preset_names, serialize


def run_cli(*argv):
    return cli.main(list(argv))


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, np.array(rows, dtype=float)


def test_list_names_every_preset(capsys):
    assert run_cli("list") == 0
    out = capsys.readouterr().out
    for name in preset_names():
        assert name in out
    assert "closed" in out and "heom" in out


def test_console_script_is_installed():
    exe = shutil.which("dret")
    assert exe, "console script 'dret' not on PATH"
    proc = subprocess.run([exe, "list"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "fig1a" in proc.stdout


def test_run_requires_exactly_one_source(tmp_path):
    assert run_cli("run", "--out", str(tmp_path)) == 2
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["status"] == "error"
    assert meta["error"]["type"] == "UsageError"
    both = run_cli("run", "--scenario", "fig1a", "--config", "x.json",
                   "--out", str(tmp_path))
    assert both == 2


def test_run_closed_preset_exports_bundle(tmp_path):
    code = run_cli("run", "--scenario", "fig1a", "--out", str(tmp_path),
                   "--emit-plots")
    assert code == 0
    header, data = read_csv(tmp_path / "populations.csv")
    assert header == ["t", "P_1", "P_2"]
    assert data.shape == (201, 3)          # 0..10 every 0.05
    assert data[0, 1] == 1.0
    header, obs = read_csv(tmp_path / "observables.csv")
    assert header == ["t", "delta", "energy", "norm"]
    assert len(obs) == 201
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["status"] == "ok"
    assert meta["error"] is None
    assert meta["config"]["name"] == "fig1a"
    assert meta["convergence"]["n_max"] >= 1
    assert meta["outputs"]["populations"] == "populations.csv"
    assert (tmp_path / "populations.gp").exists()
    assert (tmp_path / "observables.gp").exists()
    assert "timestamp" not in json.dumps(meta)


def test_run_heom_preset_exports_coherences(tmp_path):
    code = run_cli("run", "--scenario", "fig8a", "--out", str(tmp_path),
                   "--tmax", "1.0", "--dt-out", "0.1", "--heom-cutoff", "4")
    assert code == 0
    header, coh = read_csv(tmp_path / "coherences.csv")
    assert header == ["t", "abs_rho_1_2"]
    assert len(coh) == 11
    header, obs = read_csv(tmp_path / "observables.csv")
    assert header == ["t", "delta", "trace"]
    assert np.max(np.abs(obs[:, 2] - 1.0)) < 1e-6
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["overrides"] == {"tmax": 1.0, "dt_out": 0.1,
                                 "heom_cutoff": 4}
    assert meta["convergence"]["heom_cutoff"] == 4


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        code = run_cli("run", "--scenario", "fig1b", "--out", str(out),
                       "--tmax", "5.0", "--threads", "1")
        assert code == 0
    for name in ("populations.csv", "observables.csv", "meta.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_wigner_frames_written_for_closed_run(tmp_path):
    code = run_cli("run", "--scenario", "fig1b", "--out", str(tmp_path),
                   "--tmax", "2.0", "--dt-out", "0.5", "--wigner-frames",
                   "3", "--emit-plots")
    assert code == 0
    frames = sorted(tmp_path.glob("wigner_*.csv"))
    assert len(frames) == 3
    header, field = read_csv(frames[0])
    assert header == ["Q", "P", "W"]
    assert len(field) == 201 * 201
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert len(meta["wigner"]["frames"]) == 3
    # the initial frame is the phonon vacuum, normalized on the grid
    assert meta["wigner"]["frames"][0]["normalization"] == pytest.approx(
        1.0, abs=1e-3)
    assert (tmp_path / "wigner.gp").exists()


def test_wigner_frames_rejected_for_heom_run(tmp_path):
    code = run_cli("run", "--scenario", "fig8a", "--out", str(tmp_path),
                   "--wigner-frames", "2")
    assert code == 3


def test_unknown_scenario_fails_validation(tmp_path):
    code = run_cli("run", "--scenario", "fig99", "--out", str(tmp_path))
    assert code == 3
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["status"] == "error"
    assert "fig99" in meta["error"]["message"]


def test_invalid_config_file_reports_and_records(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"version": 1, "regime": "closed",
                               "chain": {"site_energies": [0.0, 0.0]},
                               "start_site": 1}))
    out = tmp_path / "out"
    code = run_cli("run", "--config", str(cfg), "--out", str(out))
    assert code == 3
    meta = json.loads((out / "meta.json").read_text())
    assert meta["error"]["type"] == "ConfigError"
    assert "mode" in meta["error"]["message"]


def test_config_file_run_round_trips_parameters(tmp_path):
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(serialize(preset("fig1a"))))
    out = tmp_path / "out"
    code = run_cli("run", "--config", str(cfg_path), "--out", str(out))
    assert code == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["config"]["chain"]["site_energies"] == [0.0, 0.0]
    assert meta["defaults_applied"] == []


def test_oversized_hierarchy_is_a_numeric_failure(tmp_path):
    code = run_cli("run", "--scenario", "fig7c", "--out", str(tmp_path),
                   "--heom-cutoff", "50")
    assert code == 4
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["error"]["type"] == "MemoryError"
    assert meta["status"] == "error"


def test_thread_default_comes_from_environment(monkeypatch):
    monkeypatch.setenv("DRET_THREADS", "3")
    assert cli._default_threads() == 3
    monkeypatch.setenv("DRET_THREADS", "not-a-number")
    assert cli._default_threads() == 1
    monkeypatch.delenv("DRET_THREADS")
    assert cli._default_threads() == 1
