"""End-to-end CLI tests (subcommands, determinism, exit codes)."""

from __future__ import annotations

import json

import pytest

from rhcert.cli import main


@pytest.fixture()
def chain_config(tmp_path):
    cfg = {
        "model": {"builtin": "msd_chain", "params": {"L": 2}},
        "cost": {"q": 0.1, "r": 0.01},
        "analysis": {"sigma": "both", "K": 40, "synthesis_sweeps": 8},
        "terminal": {"variants": ["none"]},
        "simulation": {"x0_offset": [0.3, 0.0, 0.3, 0.0], "T_steps": 25, "N": 8},
        "output": {"dir": str(tmp_path / "out")},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path, tmp_path / "out"


def test_certify_writes_reports(chain_config, capsys):
    cfg_path, out_dir = chain_config
    rc = main(["certify", "--config", str(cfg_path)])
    assert rc == 0
    assert (out_dir / "report.csv").exists()
    assert (out_dir / "report.json").exists()
    header = (out_dir / "report.csv").read_text().splitlines()[0]
    assert header == "param,method,terminal,alpha,n_min,provenance"


def test_certify_deterministic_bytes(chain_config, tmp_path):
    cfg_path, out_dir = chain_config
    main(["certify", "--config", str(cfg_path)])
    first = (out_dir / "report.csv").read_bytes()
    alt = tmp_path / "out2"
    main(["certify", "--config", str(cfg_path), "--out", str(alt)])
    assert (alt / "report.csv").read_bytes() == first


def test_constants_and_bounds_chain(chain_config, tmp_path, capsys):
    cfg_path, out_dir = chain_config
    assert main(["constants", "--config", str(cfg_path)]) == 0
    data = json.loads((out_dir / "constants.json").read_text())
    assert "storage" in data and "gamma_sigma_ell" in data
    csv_lines = (out_dir / "constants.csv").read_text().splitlines()
    assert csv_lines[0] == "k,gamma_k,mode,provenance"
    # feed the sigma=ell gammas into the bounds subcommand
    bounds_input = tmp_path / "c.json"
    bounds_input.write_text(json.dumps({"gamma": data["gamma_sigma_ell"], "sigma": "ell"}))
    assert main(["bounds", str(bounds_input)]) == 0
    out = capsys.readouterr().out
    assert "smallest certified horizon" in out


def test_bounds_reports_failure_exit(tmp_path, capsys):
    bad = tmp_path / "c.json"
    bad.write_text(json.dumps({"gamma": [50.0] * 3, "sigma": "ell"}))
    assert main(["bounds", str(bad)]) == 1


def test_simulate_writes_trace(chain_config):
    cfg_path, out_dir = chain_config
    rc = main(["simulate", "--config", str(cfg_path)])
    assert rc == 0
    lines = (out_dir / "trace.csv").read_text().splitlines()
    assert lines[0].startswith("k,x_1")
    assert len(lines) == 26
    meta = json.loads((out_dir / "trace.json").read_text())
    assert meta["horizon"] == 8
    assert "limit_cycle" in meta


def test_lp_dump_flag(chain_config):
    cfg_path, out_dir = chain_config
    rc = main(["certify", "--config", str(cfg_path), "--lp-dump"])
    assert rc == 0
    dump = (out_dir / "worst_case_example.lp").read_text()
    assert dump.startswith("\\ rhcert dense LP")
    assert (out_dir / "worst_case_terminal_example.lp").exists()


def test_env_override_out(chain_config, tmp_path, monkeypatch):
    cfg_path, _ = chain_config
    env_dir = tmp_path / "env_out"
    monkeypatch.setenv("RHCERT_OUT", str(env_dir))
    assert main(["certify", "--config", str(cfg_path)]) == 0
    assert (env_dir / "report.csv").exists()
