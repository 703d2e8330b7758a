import json
import os

import pytest

from containsim.cli import main

TAG = "pop500_none-masked_seed7"


def test_run_writes_ledger_and_metrics(tmp_path, capsys):
    assert main(["run", "--preset", "paper-text", "--population", "500", "--seed", "7",
                 "--horizon", "30", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == \
        [f"ledger_{TAG}.jsonl", f"metrics_{TAG}.csv"]
    metrics = (tmp_path / f"metrics_{TAG}.csv").read_text().splitlines()
    assert metrics[0].startswith("time,exposed_to_confirmed,")
    assert len(metrics) == 31
    assert "exposed_to_confirmed=" in capsys.readouterr().out


def test_horizon_zero_gives_empty_metrics(tmp_path):
    assert main(["run", "--horizon", "0", "--out", str(tmp_path)]) == 0
    (metrics,) = tmp_path.glob("metrics_*.csv")
    assert len(metrics.read_text().splitlines()) == 1
    (ledger,) = tmp_path.glob("ledger_*.jsonl")
    assert ledger.read_text() == ""


def test_errors_exit_nonzero(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", "--no-such-flag"])
    assert info.value.code == 2
    assert main(["run", "--preset", "bogus", "--out", str(tmp_path)]) == 2
    assert main(["run", "--population", "-3", "--out", str(tmp_path)]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--horizon", "1", "--out", str(blocker / "sub")]) == 2
    assert "error" in capsys.readouterr().err


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_directory(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    assert main(["run", "--horizon", "1", "--out", str(locked)]) == 2


def test_config_file_layering(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"population": 300, "horizon": 5}))
    assert main(["run", "--config", str(cfg), "--horizon", "3", "--seed", "1",
                 "--out", str(tmp_path / "o")]) == 0
    metrics = (tmp_path / "o" / "metrics_pop300_none-masked_seed1.csv").read_text()
    assert len(metrics.splitlines()) == 4


def test_sweep_outputs(tmp_path, capsys):
    args = ["sweep", "--population", "500,700", "--seeds", "2", "--horizon", "20",
            "--scenarios", "both", "--out", str(tmp_path)]
    assert main(args) == 0
    summary = (tmp_path / "summary.csv").read_text()
    assert summary.splitlines()[0] == "population,scenario,metric,mean,stddev,min,max"
    assert len(summary.splitlines()) == 1 + 2 * 2 * 3
    assert capsys.readouterr().out == summary
    assert len((tmp_path / "runs.csv").read_text().splitlines()) == 1 + 8
    again = tmp_path / "again"
    assert main(args[:-1] + [str(again)]) == 0
    assert (again / "summary.csv").read_bytes() == summary.encode()
    assert main(["sweep", "--population", "700,500", "--out", str(tmp_path)]) == 2
    assert main(["sweep", "--population", "500", "--seeds", "1", "--horizon", "5",
                 "--format", "json", "--out", str(tmp_path / "j")]) == 0
    assert json.loads((tmp_path / "j" / "summary.json").read_text())["columns"][0] == "population"


def test_ingest_replays_emitted_detections(tmp_path):
    assert main(["run", "--population", "500", "--seed", "7", "--horizon", "40",
                 "--emit-detections", "--out", str(tmp_path)]) == 0
    assert main(["ingest", "--population", "500", "--seed", "7", "--horizon", "40",
                 "--input", str(tmp_path / f"detections_{TAG}.jsonl"),
                 "--out", str(tmp_path)]) == 0
    for kind in ("ledger", "metrics"):
        ext = "jsonl" if kind == "ledger" else "csv"
        assert (tmp_path / f"{kind}_{TAG}.{ext}").read_bytes() == \
            (tmp_path / f"{kind}_ingest_{TAG}.{ext}").read_bytes()


def test_ingest_errors(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"camera_id": "cam-00-00"}\n')
    assert main(["ingest", "--input", str(bad), "--horizon", "1", "--out", str(tmp_path)]) == 2
    assert main(["ingest", "--input", str(tmp_path / "missing"), "--out", str(tmp_path)]) == 2
    unknown = tmp_path / "unknown.jsonl"
    unknown.write_text(json.dumps({"camera_id": "cam-99-99", "frame_time": 1, "cx": 1, "cy": 1,
                                   "w": 1, "h": 1, "confidence": 1, "class": "person"}) + "\n")
    assert main(["ingest", "--input", str(unknown), "--horizon", "1", "--out", str(tmp_path)]) == 2


def test_ingest_with_registry(tmp_path):
    reg = tmp_path / "reg.json"
    reg.write_text("[0, 1]")
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["ingest", "--input", str(empty), "--registry", str(reg), "--population", "50",
                 "--initial_confirmed", "0", "--initial_carriers", "0", "--horizon", "10",
                 "--out", str(tmp_path)]) == 0
