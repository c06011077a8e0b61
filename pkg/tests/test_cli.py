import json

import numpy as np
import pytest

from trpgates import runner
from trpgates.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, run
from trpgates.config import ConfigError, apply_overrides, build_config, load_config, preset_names
from trpgates.linalg import SX
from trpgates.records import RunRecord, format_matrix, read_records
from trpgates.metrics import GateMetrics

FAST = ["--set", "plan.steps=2000"]


@pytest.fixture(autouse=True)
def _no_env(monkeypatch):
    monkeypatch.delenv("TRP_OUTPUT_DIR", raising=False)


def test_presets_ship():
    names = set(preset_names())
    for n in ("table1-hadamard", "table1-hadamard-refine", "vcp-symmetrized", "vcp-refine",
              "table2-c4", "table2-d4"):
        assert n in names
    for n in names:
        load_config(n)


def test_overrides():
    raw = apply_overrides({"sweep": {"lambda": 1}}, ["sweep.lambda=2.5", "plan.steps=10", "scan.offsets=[1, 2]"])
    assert raw == {"sweep": {"lambda": 2.5}, "plan": {"steps": 10}, "scan": {"offsets": [1, 2]}}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["novalue"])


@pytest.mark.parametrize("change, field", [
    ({"target": "toffoli"}, "target"),
    ({"sweep": {"lambda": 1.0, "eta4": 1e-3}}, "sweep.tau0"),
    ({"plan": {"steps": 1.5}}, "plan.steps"),
    ({"system": {"c4": 1.0}}, "system"),
    ({"bogus": 1, "sweep": {"lambda": 1, "eta4": 1, "tau0": 1, "mu": 2}}, "sweep"),
])
def test_config_errors_name_the_field(change, field):
    raw = dict(load_config("table1-hadamard").raw, **change)
    with pytest.raises(ConfigError, match=field.split(".")[0]):
        build_config(raw)


def test_one_qubit_rejects_schedule_unless_allowed():
    raw = dict(load_config("table1-hadamard").raw, schedule={"group": "vcp"})
    with pytest.raises(ConfigError):
        build_config(raw)


def test_record_roundtrip_is_lossless(tmp_path):
    u = np.array([[0.1 + 1 / 3j, 2 / 7], [np.pi, -1e-17]])
    rec = RunRecord({"a": 1 / 3}, GateMetrics(1 / 3, 0.1, 1 / 3, 0.2, 1), u, seed=7)
    from trpgates.records import append_record
    append_record(tmp_path / "r.jsonl", rec)
    back = RunRecord.from_dict(read_records(tmp_path / "r.jsonl")[0])
    assert np.array_equal(back.applied_gate, u)
    assert back.metrics == rec.metrics and back.config == rec.config


def test_schema_version_gates_parsing(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text(json.dumps({"schema_version": 99}) + "\n")
    from trpgates.records import RecordError
    with pytest.raises(RecordError):
        read_records(p)
    assert run(["simulate", "--config", str(p)]) == EXIT_USAGE


def test_matrix_layout():
    text = format_matrix(np.diag([1, 1, -1, 1]) + 0.0021j * np.eye(4))
    lines = text.splitlines()
    assert lines[0] == "Re(U_a) =" and lines[5] == "Im(U_a) ="
    assert "-1.000000" in lines[3] and "0.002100" in lines[6]


def test_simulate_writes_record(tmp_path, capsys):
    out = tmp_path / "runs.jsonl"
    assert run(["simulate", "--config", "table1-not", "--out", str(out)] + FAST) == EXIT_OK
    assert "not: Tr P =" in capsys.readouterr().out
    rec = read_records(out)[0]
    assert rec["schema_version"] == 1 and rec["config"]["plan"]["steps"] == 2000
    assert len(rec["applied_gate"]["real"]) == 2


def test_env_overrides_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("TRP_OUTPUT_DIR", str(tmp_path / "env"))
    assert run(["simulate", "--config", "table1-not", "--out", "x.jsonl"] + FAST) == EXIT_OK
    assert (tmp_path / "env" / "x.jsonl").exists()


def test_replay_reproduces_trace_p(tmp_path):
    out = tmp_path / "runs.jsonl"
    assert run(["simulate", "--config", "table1-pi8", "--out", str(out)] + FAST) == EXIT_OK
    assert run(["simulate", "--config", str(out), "--out", str(out)]) == EXIT_OK
    a, b = read_records(out)
    assert a["config"] == b["config"]
    assert abs(a["metrics"]["trace_p"] - b["metrics"]["trace_p"]) <= 1e-12
    assert abs(runner.replay(a).metrics.trace_p - a["metrics"]["trace_p"]) <= 1e-12


def test_usage_errors():
    assert run(["frobnicate"]) == EXIT_USAGE
    assert run(["simulate"]) == EXIT_USAGE
    assert run(["simulate", "--config", "no-such-preset"]) == EXIT_USAGE
    assert run(["simulate", "--config", "table1-not", "--set", "sweep.lambda=-1"]) == EXIT_USAGE
    assert run(["scan", "--config", "table2-c4", "--set", "scan.param=mu"]) == EXIT_USAGE


def test_numerical_failure_exit_code(tmp_path):
    args = ["simulate", "--config", "vcp-symmetrized", "--out", str(tmp_path / "r.jsonl"),
            "--set", "sweep.lambda=1e12", "--set", "system.d1=0", "--set", "system.d4=0",
            "--set", "schedule.n_subintervals=2"]
    assert run(args) == EXIT_NUMERICAL


def test_stubbed_gate_gives_zero(tmp_path):
    cfg = load_config("table1-not", ["plan.steps=10"])
    rec = runner.cmd_simulate(cfg, emit=lambda *_: None, gate_fn=lambda setup: SX)[0]
    assert rec.metrics.trace_p == 0


def test_optimize_max_evals_one(tmp_path):
    out = tmp_path / "o.jsonl"
    args = ["optimize", "--config", "table1-hadamard-refine", "--out", str(out), "--seed", "5",
            "--set", "optimizer.max_evals=1", "--set", "plan.steps=2000"]
    assert run(args) == EXIT_OK
    rec = read_records(out)[0]
    opt = rec["extra"]["optimization"]
    assert opt["eval_count"] == 1 and rec["seed"] == 5
    assert opt["best_params"]["lambda"] == 5.8511
    assert abs(runner.replay(rec).metrics.trace_p - rec["metrics"]["trace_p"]) <= 1e-12


def test_scan_table_and_empty_offsets(tmp_path, capsys):
    out = tmp_path / "s.jsonl"
    args = ["scan", "--config", "table2-d4", "--out", str(out), "--workers", "1",
            "--set", "schedule.n_subintervals=50"]
    assert run(args) == EXIT_OK
    text = capsys.readouterr().out
    assert text.count("\n") >= 4
    recs = read_records(out)
    assert [r["extra"]["scan"]["value"] for r in recs] == pytest.approx([0.8346, 0.8347, 0.8348])
    assert run(args + ["--set", "scan.offsets=[]"]) == EXIT_OK
    assert len(read_records(out)) == 3


def test_converge_reports_slope(tmp_path, capsys):
    args = ["converge", "--config", "converge-hadamard", "--out", str(tmp_path / "c.jsonl"),
            "--set", "converge.base_steps=10000"]
    assert run(args) == EXIT_OK
    rec = read_records(tmp_path / "c.jsonl")[0]
    assert rec["extra"]["steps"]["slope"] == pytest.approx(2.0, abs=0.1)
    assert "slope" in capsys.readouterr().out


def test_report_table(tmp_path, capsys):
    assert run(["report", "--config", "table1", "--out", str(tmp_path / "t.jsonl")]) == EXIT_OK
    text = capsys.readouterr().out
    for g in ("hadamard", "not", "modified_pi8", "modified_phase"):
        assert g in text
    assert len(read_records(tmp_path / "t.jsonl")) == 4


def test_jsonl_config_of_optimize_record_is_the_optimum(tmp_path):
    out = tmp_path / "o.jsonl"
    args = ["optimize", "--config", "table1-hadamard-refine", "--out", str(out), "--seed", "2",
            "--set", "optimizer.max_evals=6", "--set", "plan.steps=2000"]
    assert run(args) == EXIT_OK
    assert run(["simulate", "--config", str(out), "--out", str(out)]) == EXIT_OK
    opt, sim = read_records(out)
    best = opt["extra"]["optimization"]["best_params"]
    assert sim["config"]["sweep"]["lambda"] == best["lambda"]
    assert sim["metrics"]["trace_p"] == opt["metrics"]["trace_p"]
