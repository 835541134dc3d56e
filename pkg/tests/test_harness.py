import csv
import json

import numpy as np
import pytest

from prandtl_lab.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from prandtl_lab.config import config_hash, minimal_config, to_document
from prandtl_lab.report import MASTER_COLUMNS, emit_report
from prandtl_lab.sweep import RunRecord, load_records, run_sweep


def _bad_config(nu=1e-4):
    return minimal_config(nu).with_updates(**{"profile.family": "no_such_profile"})


def _synthetic_record(nu=1e-4) -> RunRecord:
    cfg = minimal_config(nu)
    t = np.linspace(0, 2, 21)
    v = 1e-4 * np.exp(t)
    return RunRecord(
        config_hash(cfg), to_document(cfg), "ok",
        eigen={"alpha": 0.47, "c_re": 15.0, "c_im": 5.9, "lam_re": 2.75, "lam_im": -7.2,
               "residual": 1e-12},
        fits={"early_rate": 2.7, "residual_P": 0.85, "bound_fit": {"wall_slip_max": 1e-15}},
        series={"t": list(t), "v_inf": list(0.5 * v), "u_minus_Us_inf": list(v),
                "uapp_minus_Us_inf": list(1.01 * v), "seeded_amplitude": 1e-4, "flags": []},
        verdict={"outcome": "PrandtlUnstable", "sigma0": 0.04, "crossing_time": None,
                 "prandtl_margin": 0.3, "sublayer_margin": 0.1},
        crossings={"0": {"measured": 1.7, "predicted": 1.67}},
        profiles={"collapse_eta": [0.0, 1.0, 2.0], "collapse_vS1": [1.0, 0.5, 0.1],
                  "residual_t": 1.0, "residual_eta": [0.0, 1.0, 20.0],
                  "residual_profile": [1.0, 0.5, 0.0]})


def test_empty_sweep():
    assert run_sweep([]) == []


def test_sweep_parallelism_validated():
    with pytest.raises(ValueError):
        run_sweep([minimal_config(1e-4)], parallelism=0)


@pytest.mark.parametrize("parallelism", [1, 2])
def test_failed_run_is_isolated(tmp_path, parallelism):
    cfgs = [_bad_config(1e-4), _bad_config(1e-3)]
    out = tmp_path / "records.jsonl"
    recs = run_sweep(cfgs, parallelism, out)
    assert [r.config["nu"] for r in recs] == [1e-4, 1e-3]
    assert all(r.status == "error" and "unknown profile family" in r.error for r in recs)
    assert sorted(r.config_hash for r in load_records(out)) == sorted(r.config_hash for r in recs)


def test_record_json_round_trip():
    rec = _synthetic_record()
    back = RunRecord.from_json(rec.to_json())
    assert back == rec
    ir = back.instability_record()
    assert ir.growth_rate == pytest.approx(2.75)


def test_report_files_and_columns(tmp_path):
    recs = [_synthetic_record(1e-4), _synthetic_record(1e-3), run_sweep([_bad_config()])[0]]
    paths = emit_report(recs, tmp_path)
    names = sorted(p.name for p in paths)
    assert names.count("master.csv") == 1
    assert {"growth.svg", "collapse.svg", "residual.svg", "summary.txt"} <= set(names)
    assert len(list((tmp_path / "runs").glob("*_series.csv"))) == 2
    with (tmp_path / "master.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == MASTER_COLUMNS
    assert len(rows) == 4
    assert rows[3][MASTER_COLUMNS.index("status")] == "error"
    assert "PrandtlUnstable" in (tmp_path / "summary.txt").read_text()


def test_report_rejects_empty_input(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path)


def test_cli_bad_config_exit_code(tmp_path, capsys):
    assert main(["eigen", "--nu", "-1", "--output", str(tmp_path)]) == EXIT_CONFIG
    assert "nu:" in capsys.readouterr().err


def test_cli_missing_config_file(tmp_path):
    assert main(["dns", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_cli_numerical_failure_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nu": 1e-4, "profile": {"family": "exp_monotone", "params": {}},
                               "grid": {"n_y": 96}, "alpha_scan": [0.2, 1.0, 3]}))
    assert main(["eigen", "--config", str(cfg), "--output", str(tmp_path)]) == EXIT_NUMERICAL


def test_cli_eigen(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PRANDTL_LAB_OUTPUT", str(tmp_path))
    assert main(["eigen", "--nu", "1e-4"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "alpha=0.47" in out
    assert (tmp_path / "spectrum.csv").exists()


def test_cli_report_round_trip(tmp_path):
    recs = tmp_path / "records.jsonl"
    recs.write_text(_synthetic_record().to_json() + "\n")
    assert main(["report", str(recs), "--output", str(tmp_path / "rep")]) == EXIT_OK
    assert (tmp_path / "rep" / "master.csv").exists()
    assert main(["report", str(tmp_path / "missing.jsonl")]) == EXIT_CONFIG
