import json

import pytest

from evtrack.cli import main


def run_cli(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_synth_run_score_flow(tmp_path, capsys):
    code, out, err = run_cli(capsys, "synth", "--speed", "50", "--size", "7",
                             "--duration", "0.5", "--seed", "5",
                             "--out", str(tmp_path / "data"))
    assert code == 0, err
    synth = json.loads(out)
    assert synth["n_events"] > 0

    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"""
[pipeline]
gating = on

[io]
events = {synth['events_path']}
ground_truth = {synth['truth_path']}
output_dir = {tmp_path / 'out'}
""")
    code, out, err = run_cli(capsys, "run", "--config", str(cfg), "--seed", "7")
    assert code == 0, err
    run_body = json.loads(out)
    assert run_body["report"]["npu_invocations"] == 1
    assert (tmp_path / "out" / "report.json").exists()

    code, out, err = run_cli(capsys, "score",
                             "--results", str(tmp_path / "out" / "tracks.csv"),
                             "--truth", synth["truth_path"], "--iou", "0.65")
    assert code == 0, err
    assert json.loads(out)["accuracy"] == run_body["report"]["tracking"]["accuracy"]


def test_run_determinism_byte_identical(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "synth", "--speed", "80", "--size", "6",
                           "--duration", "0.4", "--seed", "3",
                           "--out", str(tmp_path / "data"))
    synth = json.loads(out)
    cfg = tmp_path / "fixed.cfg"
    cfg.write_text(f"[io]\nevents = {synth['events_path']}\n"
                   f"ground_truth = {synth['truth_path']}\n"
                   f"output_dir = {tmp_path / 'out'}\n")
    assert run_cli(capsys, "run", "--config", str(cfg), "--seed", "7")[0] == 0
    first = (tmp_path / "out" / "report.json").read_bytes()
    assert run_cli(capsys, "run", "--config", str(cfg), "--seed", "7")[0] == 0
    second = (tmp_path / "out" / "report.json").read_bytes()
    assert first == second


def test_gating_override_off(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "synth", "--speed", "40", "--size", "7",
                           "--duration", "0.3", "--seed", "1",
                           "--out", str(tmp_path / "data"))
    synth = json.loads(out)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"[io]\nevents = {synth['events_path']}\n"
                   f"output_dir = {tmp_path / 'out'}\n")
    code, out, _ = run_cli(capsys, "run", "--config", str(cfg), "--gating", "off")
    body = json.loads(out)
    assert body["report"]["npu_invocations"] == body["report"]["commits_total"] > 1


def test_calibrate_th_with_sweep_file(tmp_path, capsys):
    sweep = tmp_path / "sweep.json"
    sweep.write_text(json.dumps({
        "sizes": [5], "speeds": [5.0], "gain_size_grid": [0.0, 2.0],
        "gain_speed_grid": [0.0], "duration": 0.2,
    }))
    code, out, err = run_cli(capsys, "calibrate-th", "--sweep", str(sweep),
                             "--seed", "0")
    assert code == 0, err
    body = json.loads(out)
    assert body["mean_iou"] >= body["baseline_mean_iou"]


def test_error_is_machine_readable_json_on_stderr(tmp_path, capsys):
    code, out, err = run_cli(capsys, "run", "--config", str(tmp_path / "missing.cfg"))
    assert code != 0
    assert out == ""
    error = json.loads(err)
    assert error["error"]["type"] == "ConfigError"


def test_synth_error_exit_code(tmp_path, capsys):
    code, out, err = run_cli(capsys, "synth", "--speed", "99999", "--size", "5",
                             "--duration", "1.0", "--out", str(tmp_path))
    assert code != 0
    assert json.loads(err)["error"]["type"] == "ObjectLeavesFrame"
