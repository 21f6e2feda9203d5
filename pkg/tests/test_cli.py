import json
import subprocess
import sys

import pytest

from conftest import write_csv, write_ndjson
from driftmon.cli import main
from driftmon.config import env_overrides, load_config
from driftmon.errors import DriftError
from driftmon.reference import load_baseline


def make_training(path, rng, n=2000):
    rows = []
    for _ in range(n):
        y = int(rng.integers(0, 2))
        x = rng.normal(y, 1.0)
        pred = int(x > 0.5)
        rows.append([f"{x:.6f}", f"{rng.uniform():.6f}", rng.choice(["a", "b", "c"]), y, pred])
    write_csv(path, ["x", "u", "colour", "y", "pred"], rows)


def live_records(rng, n, shift=0.0, labelled=True):
    out = []
    for _ in range(n):
        y = int(rng.integers(0, 2))
        x = rng.normal(y, 1.0) + shift
        rec = {"x": x, "u": rng.uniform(), "colour": str(rng.choice(["a", "b", "c"]))}
        if labelled:
            rec.update(y_true=y, y_pred=int(x > 0.5))
        out.append(rec)
    return out


@pytest.fixture
def baseline(tmp_path, rng):
    train = tmp_path / "train.csv"
    make_training(train, rng)
    out = tmp_path / "base.json"
    code = main(["baseline", str(train), "--out", str(out), "--target", "y", "--prediction", "pred",
                 "--created-at", "2024-01-01T00:00:00Z"])
    assert code == 0
    return out


def run_monitor(tmp_path, baseline, records, *extra):
    stream = tmp_path / "live.ndjson"
    if isinstance(records, str):
        stream.write_text(records)
    else:
        write_ndjson(stream, records)
    out = tmp_path / "reports.ndjson"
    code = main(["monitor", str(stream), "--baseline", str(baseline), "--output", str(out), *extra])
    reports = [json.loads(line) for line in out.read_text().splitlines()] if out.exists() else []
    return code, reports


def test_baseline_writes_snapshot(baseline, capsys):
    snap = load_baseline(baseline)
    assert set(snap.features) == {"x", "u", "colour", "pred"}
    assert snap.features["colour"].kind == "categorical"
    assert snap.has_concept and snap.confusion is not None


def test_baseline_missing_column(tmp_path, rng, capsys):
    train = tmp_path / "train.csv"
    make_training(train, rng, 50)
    assert main(["baseline", str(train), "--out", str(tmp_path / "b.json"), "--target", "nope"]) == 2
    assert "SchemaMismatch" in capsys.readouterr().err


def test_baseline_empty_file(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["baseline", str(empty), "--out", str(tmp_path / "b.json")]) == 2
    header_only = tmp_path / "header.csv"
    header_only.write_text("a,b\n")
    assert main(["baseline", str(header_only), "--out", str(tmp_path / "b.json")]) == 2
    assert "EmptyDataset" in capsys.readouterr().err


def test_baseline_ragged_row_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3\n")
    assert main(["baseline", str(bad), "--out", str(tmp_path / "b.json")]) == 2
    assert "line 3" in capsys.readouterr().err


def test_usage_error_exit_code(capsys):
    assert main(["monitor"]) == 2
    assert main(["frobnicate"]) == 2


def test_monitor_in_control(tmp_path, baseline, rng):
    code, reports = run_monitor(tmp_path, baseline, live_records(rng, 1000, labelled=False), "--window", "500")
    assert code == 0
    assert [r["window"] for r in reports] == [0, 1]
    assert all(r["verdict"] == "InControl" and not r["partial"] for r in reports)
    assert reports[0]["first_record"] == 0 and reports[1]["last_record"] == 999


def test_monitor_breach_exit_code(tmp_path, baseline, rng):
    records = live_records(rng, 500, labelled=False) + live_records(rng, 500, shift=3.0, labelled=False)
    code, reports = run_monitor(tmp_path, baseline, records, "--window", "500")
    assert code == 4
    assert reports[1]["features"]["x"]["covariate_drift_level"] == "High"
    assert reports[1]["charts"]["covariate_drift/x"] == "Breach"


def test_monitor_without_labels_leaves_concept_untouched(tmp_path, baseline, rng):
    _, reports = run_monitor(tmp_path, baseline, live_records(rng, 500, labelled=False), "--window", "500")
    concept = reports[0]["concept"]
    assert concept["labeled"] == 0
    assert concept["page_hinkley"]["max"] is None
    assert concept["eddm"]["errors"] == 0


def test_monitor_labelled_updates_concept(tmp_path, baseline, rng):
    _, reports = run_monitor(tmp_path, baseline, live_records(rng, 500), "--window", "500")
    concept = reports[0]["concept"]
    assert concept["labeled"] == 500
    assert concept["page_hinkley"]["max"] is not None
    assert concept["eddm"]["errors"] > 30
    shares = concept["hlnr"]["alarm_share"]
    assert set(shares) == {"NPV", "PPV", "TNR", "TPR"} and all(0 <= v <= 1 for v in shares.values())
    assert reports[0]["charts"]["hlnr/TPR"] in ("InControl", "Trending", "Breach")


def test_monitor_counts_malformed_and_flags_partial(tmp_path, baseline, rng):
    lines = [json.dumps(r) for r in live_records(rng, 5, labelled=False)]
    lines.insert(2, "{not json")
    lines.insert(4, json.dumps({"x": "abc"}))
    code, reports = run_monitor(tmp_path, baseline, "\n".join(lines) + "\n", "--window", "10")
    assert code in (0, 3, 4)  # five records against 20 bins is noisy; only the bookkeeping matters here
    (rep,) = reports
    assert rep["partial"] and rep["records"] == 5
    assert rep["malformed"] == 2 and rep["malformed_lines"] == [3, 5]


def test_monitor_strict_fails_on_malformed(tmp_path, baseline, rng, capsys):
    lines = [json.dumps(r) for r in live_records(rng, 3, labelled=False)] + ["{oops"]
    code, _ = run_monitor(tmp_path, baseline, "\n".join(lines) + "\n", "--strict")
    assert code == 2
    assert "line 4" in capsys.readouterr().err


def test_monitor_schema_mismatch(tmp_path, baseline, capsys):
    code, _ = run_monitor(tmp_path, baseline, [{"foo": 1}, {"foo": 2}])
    assert code == 2
    assert "SchemaMismatch" in capsys.readouterr().err


def test_monitor_corrupt_baseline(tmp_path, rng, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "driftmon.baseline"')
    code, _ = run_monitor(tmp_path, bad, live_records(rng, 3))
    assert code == 2
    assert "CorruptSnapshot" in capsys.readouterr().err


def test_report_verdicts(tmp_path, baseline, rng):
    _, calm = run_monitor(tmp_path, baseline, live_records(rng, 1000, labelled=False), "--window", "500")
    calm_path = tmp_path / "calm.ndjson"
    write_ndjson(calm_path, calm)
    summary_path = tmp_path / "summary.json"
    assert main(["report", str(calm_path), "--output", str(summary_path)]) == 0
    summary = json.loads(summary_path.read_text())
    assert summary["verdict"] == "InControl" and summary["windows"] == 2
    assert summary["first_breach_window"] is None

    records = live_records(rng, 500, labelled=False) + live_records(rng, 500, shift=3.0, labelled=False)
    _, drifted = run_monitor(tmp_path, baseline, records, "--window", "500")
    drift_path = tmp_path / "drift.ndjson"
    write_ndjson(drift_path, drifted)
    assert main(["report", str(drift_path), "--output", str(summary_path)]) == 4
    summary = json.loads(summary_path.read_text())
    assert summary["verdict"] == "Breach" and summary["first_breach_window"] == 1
    assert summary["ranking"][0]["feature"] == "x"


def test_report_empty_input(tmp_path):
    empty = tmp_path / "none.ndjson"
    empty.write_text("")
    assert main(["report", str(empty)]) == 2


def test_env_overrides_window_and_limits(tmp_path, baseline, rng, monkeypatch):
    monkeypatch.setenv("DRIFTMON_WINDOW_SIZE", "250")
    monkeypatch.setenv("DRIFTMON_CHARTS__COVARIATE_DRIFT__UPPER_LIMIT", "0.99")
    records = live_records(rng, 500, shift=3.0, labelled=False)
    code, reports = run_monitor(tmp_path, baseline, records)
    assert len(reports) == 2
    assert reports[0]["charts"]["covariate_drift/x"] == "InControl"
    assert reports[0]["charts"]["stability_index/x"] == "Breach"
    assert code == 4


def test_config_layers(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"window_size": 100, "metrics": {"js_distance": False}, "trend_k": 4}))
    env = {"DRIFTMON_TREND_K": "6", "DRIFTMON_METRICS__WASSERSTEIN": "false", "DRIFTMON_HLNR_RATES": "tpr,tnr"}
    cfg = load_config(cfg_file, environ=env, window_size=42)
    assert cfg.window_size == 42 and cfg.trend_k == 6
    assert not cfg.enabled("js_distance") and not cfg.enabled("wasserstein") and cfg.enabled("eddm")
    assert cfg.hlnr_rates == ("TPR", "TNR")
    with pytest.raises(DriftError):
        env_overrides({"DRIFTMON_BOGUS": "1"})
    with pytest.raises(DriftError):
        load_config(environ={"DRIFTMON_WINDOW_SIZE": "0"})


def test_module_entry_point(tmp_path, baseline, rng):
    stream = tmp_path / "live.ndjson"
    write_ndjson(stream, live_records(rng, 20, labelled=False))
    proc = subprocess.run(
        [sys.executable, "-m", "driftmon", "monitor", "--baseline", str(baseline), "--window", "10"],
        stdin=stream.open(), capture_output=True, text=True, check=False,
    )
    assert proc.returncode in (0, 3, 4), proc.stderr
    assert len(proc.stdout.splitlines()) == 2
