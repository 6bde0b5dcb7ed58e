"""End-to-end command-line smoke: configs in, CSVs and manifest out."""

import json
import subprocess
import sys

import pytest

from mrsim.cli import main

COOPLOC_CFG = """
scenario = cooploc
scenario.n = 4
scenario.horizon = 120
scenario.tail_window = 60
scenario.err_window = 50
scenario.seed = 5
channel.epsilon = 0.25
transport.protocol = udp
"""

OVERTAKE_CFG = """
scenario = overtake
scenario.runs = 10
scenario.seed = 3
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_validate_accepts_good_config(tmp_path, capsys):
    cfg = write_cfg(tmp_path, COOPLOC_CFG)
    assert main(["validate", "--config", cfg]) == 0
    assert "ok: valid cooploc config" in capsys.readouterr().out


def test_validate_rejects_unknown_key(tmp_path, capsys):
    cfg = write_cfg(tmp_path, COOPLOC_CFG + "scenario.typo = 1\n")
    assert main(["validate", "--config", cfg]) == 1
    assert "unknown config key" in capsys.readouterr().err


def test_validate_rejects_bad_value(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "scenario.n = 1\n")
    assert main(["validate", "--config", cfg]) == 1
    assert "scenario.n" in capsys.readouterr().err


def test_scenario_mismatch_rejected(tmp_path, capsys):
    cfg = write_cfg(tmp_path, OVERTAKE_CFG)
    assert main(["cooploc", "run", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 1
    assert "declares scenario" in capsys.readouterr().err


def test_cooploc_run_outputs(tmp_path):
    cfg = write_cfg(tmp_path, COOPLOC_CFG)
    out = tmp_path / "out"
    assert main(["cooploc", "run", "--config", cfg, "--out", str(out)]) == 0
    series = (out / "cooploc_series.csv").read_text().splitlines()
    assert series[0] == "seed,protocol,epsilon,delay_mode,estimator,t,err"
    assert len(series) == 1 + 120
    assert series[1].startswith("5,udp,0.25,one_way,iree,0,")
    summary = (out / "cooploc_summary.csv").read_text().splitlines()
    assert len(summary) == 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5
    assert manifest["files"] == ["cooploc_series.csv", "cooploc_summary.csv"]
    assert len(manifest["config_hash"]) == 64


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_cfg(tmp_path, COOPLOC_CFG)
    out = tmp_path / "o2"
    assert main(["cooploc", "run", "--config", cfg, "--seed", "99",
                 "--out", str(out)]) == 0
    summary = (out / "cooploc_summary.csv").read_text().splitlines()
    assert summary[1].startswith("99,")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["scenario.seed"] == "99"


def test_out_env_override(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, COOPLOC_CFG)
    env_out = tmp_path / "from_env"
    monkeypatch.setenv("MRSIM_OUT", str(env_out))
    assert main(["cooploc", "run", "--config", cfg,
                 "--out", str(tmp_path / "ignored")]) == 0
    assert (env_out / "cooploc_summary.csv").is_file()
    assert not (tmp_path / "ignored").exists()


def test_overtake_deadline_prints_slot(capsys):
    assert main(["overtake", "deadline"]) == 0
    assert "deadline_slot = 110" in capsys.readouterr().out


def test_overtake_montecarlo_outputs(tmp_path, capsys):
    cfg = write_cfg(tmp_path, OVERTAKE_CFG)
    out = tmp_path / "mc"
    assert main(["overtake", "montecarlo", "--config", cfg,
                 "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "Pr[T25 <= 110]" in printed
    runs = (out / "overtake_runs.csv").read_text().splitlines()
    assert runs[0] == ("seed,run_id,protocol,t25_slot,abort_slot,outcome,"
                       "deadline_slot")
    assert len(runs) == 1 + 2 * 10          # both protocols
    cdf = (out / "overtake_cdf.csv").read_text().splitlines()
    assert cdf[0] == "protocol,t,cdf"
    assert len(cdf) == 1 + 2 * 160


def test_montecarlo_missed_runs_use_minus_one_sentinel(tmp_path):
    cfg = write_cfg(tmp_path, OVERTAKE_CFG
                    + "channel.profile = constant\nchannel.epsilon = 1.0\n")
    out = tmp_path / "mc1"
    assert main(["overtake", "montecarlo", "--config", cfg, "--runs", "3",
                 "--out", str(out)]) == 0
    rows = (out / "overtake_runs.csv").read_text().splitlines()[1:]
    for row in rows:
        fields = row.split(",")
        assert fields[3] == "-1" and fields[4] == "-1"
        assert fields[5] == "collision"


def test_montecarlo_jobs_do_not_change_bytes(tmp_path):
    cfg = write_cfg(tmp_path, OVERTAKE_CFG)
    a, b = tmp_path / "j1", tmp_path / "j3"
    assert main(["overtake", "montecarlo", "--config", cfg,
                 "--out", str(a), "--jobs", "1"]) == 0
    assert main(["overtake", "montecarlo", "--config", cfg,
                 "--out", str(b), "--jobs", "3"]) == 0
    for name in ("overtake_runs.csv", "overtake_cdf.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "mrsim.cli", "overtake", "deadline"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "deadline_slot = 110" in proc.stdout


def test_missing_config_file_reported(capsys):
    assert main(["validate", "--config", "/nonexistent/x.cfg"]) == 1
    assert "config file not found" in capsys.readouterr().err
