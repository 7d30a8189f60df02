import json
import logging

import numpy as np
import pytest

from fairaudit.core.data import save_csv
from fairaudit.main import EXIT_FLAGGED, EXIT_IO, EXIT_OK, EXIT_USAGE, main, parse_metrics
from fairaudit.models.schemas import ALL_METRICS, MetricId
from fairaudit.storage import load_model


@pytest.fixture
def table_one_csv(tmp_path, table_one):
    return save_csv(table_one, tmp_path / "table_one.csv")


@pytest.fixture
def training_csv(tmp_path):
    rng = np.random.default_rng(0)
    n = 200
    x1, x2 = rng.normal(size=n), rng.normal(size=n)
    group = rng.integers(0, 2, n)
    truth = (x1 + 0.5 * x2 > 0).astype(int)
    lines = ["y_true,x1,x2,group"]
    lines += [f"{t},{float(a)!r},{float(b)!r},{g}" for t, a, b, g in zip(truth, x1, x2, group)]
    path = tmp_path / "train.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.mark.parametrize(
    "command, flags",
    [
        ("simulate", ["--participants", "--accuracy0", "--correction-scope", "--strict"]),
        ("audit", ["--csv", "--manifest", "--model", "--effect-size-threshold"]),
        ("train", ["--split", "--epochs", "--keep-attributes"]),
        ("coverage", ["--p1", "--trials"]),
        ("schema", ["--out"]),
    ],
)
def test_help_lists_flags(capsys, command, flags):
    assert main([command, "--help"]) == EXIT_OK
    out = capsys.readouterr().out
    for flag in flags:
        assert flag in out


def test_help_shows_defaults(capsys):
    main(["simulate", "--help"])
    out = capsys.readouterr().out
    assert "(default: intra)" in out
    assert "(default: 1000)" in out


def test_parse_metrics():
    assert parse_metrics("all") == ALL_METRICS
    assert parse_metrics("error_rate, statistical_parity,error_rate") == [
        MetricId.ERROR_RATE,
        MetricId.STATISTICAL_PARITY,
    ]


def test_unknown_metric_is_a_usage_error(tmp_path, table_one_csv):
    assert main(["audit", "--csv", str(table_one_csv), "--metrics", "parity", "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_invalid_alpha_is_a_usage_error():
    assert main(["coverage", "--p1", "0.5", "--p2", "0.5", "--n", "50", "--alpha", "2"]) == EXIT_USAGE


def test_coverage_prints_result(capsys, tmp_path):
    args = ["coverage", "--p1", "0.5", "--p2", "0.5", "--n", "50", "--alpha", "0.05", "--trials", "10000"]
    assert main(args + ["--out", str(tmp_path)]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert 0.93 <= result["empirical"] <= 0.97
    assert json.loads((tmp_path / "coverage.json").read_text()) == result


def test_log_level_option_controls_root_level(caplog):
    args = ["coverage", "--p1", "0.5", "--p2", "0.5", "--n", "50", "--trials", "1000"]
    assert main(args + ["--log-level", "WARNING"]) == EXIT_OK
    assert logging.getLogger().level == logging.WARNING
    assert not [record for record in caplog.records if record.levelno < logging.WARNING]

    caplog.clear()
    assert main(args + ["--log-level", "debug"]) == EXIT_OK
    assert logging.getLogger().level == logging.DEBUG
    assert any("Wald coverage" in record.getMessage() for record in caplog.records)


def test_coverage_rejects_few_trials():
    assert main(["coverage", "--p1", "0.5", "--p2", "0.5", "--n", "50", "--trials", "10"]) == EXIT_USAGE


def test_simulate_is_deterministic_across_output_directories(tmp_path):
    common = ["simulate", "--participants", "60", "--attributes", "5", "--seed", "1", "--bootstrap-replicates", "100"]
    assert main(common + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(common + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("report.json", "report.md"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["metadata"]["seeds"] == {"bootstrap": 1, "data": 1}
    assert report["metadata"]["parameters"]["participants"] == 60


def test_simulate_accuracy_gap_writes_figures(tmp_path):
    out = tmp_path / "gap"
    code = main([
        "simulate", "--participants", "2000", "--attributes", "3",
        "--accuracy0", "0.95", "--accuracy1", "0.25", "--seed", "3",
        "--metrics", "statistical_parity,error_rate,equal_opportunity", "--out", str(out),
    ])
    assert code == EXIT_OK
    written = {p.name for p in out.iterdir()}
    assert {"report.json", "report.md", "forest_attr_0.svg", "histogram_error_rate.svg"} <= written
    assert "scatter_error_rate_statistical_parity.svg" in written


def test_simulate_individual_metrics_write_scan_histograms(tmp_path):
    out = tmp_path / "individual"
    code = main([
        "simulate", "--participants", "200", "--attributes", "4", "--seed", "2",
        "--metrics", "statistical_parity,theil,consistency", "--bootstrap-replicates", "100",
        "--out", str(out),
    ])
    assert code == EXIT_OK
    written = {p.name for p in out.iterdir()}
    assert {"histogram_statistical_parity.svg", "histogram_theil.svg", "histogram_consistency.svg"} <= written
    report = json.loads((out / "report.json").read_text())
    assert [scan["metric_id"] for scan in report["individual_scans"]] == ["theil", "consistency"]
    assert "<rect" in (out / "histogram_theil.svg").read_text()


def test_audit_strict_exits_when_flags_fire(tmp_path, table_one_csv):
    base = ["audit", "--csv", str(table_one_csv), "--metrics", "equal_opportunity", "--format", "json"]
    assert main(base + ["--out", str(tmp_path / "plain")]) == EXIT_OK
    assert main(base + ["--strict", "--out", str(tmp_path / "strict")]) == EXIT_FLAGGED
    report = json.loads((tmp_path / "plain" / "report.json").read_text())
    assert report["metadata"]["alpha"]["intra_tests"] == {"equal_opportunity": 134}
    assert not (tmp_path / "plain" / "report.md").exists()


def test_audit_with_manifest(tmp_path, table_one_csv):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"attributes": ["a0"], "metrics": ["equal_opportunity"], "alpha": 0.1}))
    out = tmp_path / "out"
    code = main([
        "audit", "--csv", str(table_one_csv), "--attributes", "a0",
        "--metrics", "equal_opportunity", "--manifest", str(manifest), "--out", str(out),
    ])
    assert code == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["metadata"]["alpha"]["source"] == "manifest"
    assert report["manifest_deviations"] == []


def test_audit_missing_csv_is_an_io_error(tmp_path):
    assert main(["audit", "--csv", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "o")]) == EXIT_IO


def test_audit_bad_value_is_a_usage_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("y_true,y_pred,a\n1,0,1\n0,7,0\n")
    assert main(["audit", "--csv", str(path), "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_audit_bad_manifest_is_a_usage_error(tmp_path, table_one_csv):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"attributes": [], "metrics": ["parity"]}))
    code = main(["audit", "--csv", str(table_one_csv), "--manifest", str(manifest), "--out", str(tmp_path / "o")])
    assert code == EXIT_USAGE


def test_train_then_audit_with_model(capsys, tmp_path, training_csv):
    out = tmp_path / "model"
    code = main([
        "train", "--csv", str(training_csv), "--features", "x1,x2",
        "--learning-rate", "1.0", "--epochs", "300", "--seed", "0", "--out", str(out),
    ])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert printed.startswith("accuracy=")
    assert "train=180 test=20" in printed
    model = load_model(out / "model.json")
    assert model.feature_names == ["x1", "x2"]

    audit_out = tmp_path / "audit"
    code = main([
        "audit", "--csv", str(training_csv), "--model", str(out / "model.json"),
        "--attributes", "group", "--metrics", "statistical_parity,error_rate", "--out", str(audit_out),
    ])
    assert code == EXIT_OK
    report = json.loads((audit_out / "report.json").read_text())
    assert report["metadata"]["attributes"] == ["group"]
    assert len(report["intra"]) == 2


def test_train_keep_attributes_writes_predictions(tmp_path, training_csv):
    out = tmp_path / "model"
    assert main(["train", "--csv", str(training_csv), "--keep-attributes", "--out", str(out)]) == EXIT_OK
    header = (out / "predictions.csv").read_text().splitlines()[0]
    assert header == "y_true,y_pred,group,x1,x2"
