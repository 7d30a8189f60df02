import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest
from jsonschema import Draft202012Validator

from fairaudit.core.auditor import full_audit
from fairaudit.core.stats import wald_interval
from fairaudit.exceptions import InvalidParameterError, StorageError
from fairaudit.models.schemas import GROUP_METRICS, MetricId, QuadrantShares
from fairaudit.report import (
    ForestRow,
    emit_forest_svg,
    emit_histogram_svg,
    emit_scatter_svg,
    from_json,
    report_schema,
    to_json,
    to_markdown,
    write_schema,
)
from fairaudit.report.markdown import percent

SVG = "{http://www.w3.org/2000/svg}"
DOCS_SCHEMA = Path(__file__).resolve().parent.parent / "docs" / "report-schema.json"


@pytest.fixture
def report(small_synthetic):
    return full_audit(
        small_synthetic,
        small_synthetic.attribute_names,
        GROUP_METRICS + [MetricId.THEIL],
        0.05,
        bootstrap_replicates=100,
    )


def elements(path, tag):
    return list(ET.parse(path).getroot().iter(f"{SVG}{tag}"))


def with_class(path, tag, css_class):
    return [e for e in elements(path, tag) if e.get("class") == css_class]


def test_canonical_json_is_stable(report):
    first = to_json(report)
    assert first == to_json(report)
    assert first.endswith(b"\n")
    assert to_json(from_json(first)) == first
    assert b'"manifest_deviations": []' in first


def test_canonical_json_rounds_floats(report):
    document = json.loads(to_json(report))
    alpha = document["intra"][0]["corrected_alpha"]
    assert alpha == float(f"{alpha:.6g}")
    assert list(document) == sorted(document)


def test_report_schema_covers_report_fields():
    schema = report_schema()
    assert set(schema["properties"]) == {
        "metadata", "intra", "inter", "combined", "individual",
        "individual_scans", "quadrants", "flags", "manifest_deviations",
    }


def test_published_schema_matches_models():
    published = json.loads(DOCS_SCHEMA.read_text(encoding="utf-8"))
    schema = report_schema()
    assert set(published["properties"]) == set(schema["properties"])
    assert set(published["$defs"]) == set(schema["$defs"])


def test_report_document_validates_against_published_schema(small_synthetic, report):
    published = json.loads(DOCS_SCHEMA.read_text(encoding="utf-8"))
    Draft202012Validator.check_schema(published)
    validator = Draft202012Validator(published)

    combined = full_audit(
        small_synthetic,
        small_synthetic.attribute_names,
        [MetricId.STATISTICAL_PARITY, MetricId.ERROR_RATE],
        0.05,
        correction_scope="combined",
    )
    for audit in (report, combined):
        document = json.loads(to_json(audit))
        assert list(validator.iter_errors(document)) == []

    document["intra"][0]["metric_id"] = "parity"
    del document["metadata"]["alpha"]
    messages = [error.message for error in validator.iter_errors(document)]
    assert any("'parity'" in message for message in messages)
    assert any("'alpha' is a required property" in message for message in messages)


def test_write_schema(tmp_path):
    path = write_schema(tmp_path / "docs" / "report-schema.json")
    assert json.loads(path.read_text())["title"] == "AuditReport"


def test_percent_formatting():
    assert percent(-0.121) == "-12.1%"
    assert percent(0.5) == "50.0%"
    assert percent(-0.0001) == "0.0%"


def test_markdown_bolds_rows_losing_significance(table_one):
    text = to_markdown(full_audit(table_one, table_one.attribute_names, [MetricId.EQUAL_OPPORTUNITY], 0.05))
    assert "| **a0** | 15.0% |" in text
    assert "Corrected CI (α=0.0003731)" in text
    assert "| b1 | 0.0% |" in text
    assert "significance_gained_without_correction" in text


def test_markdown_without_attribute_audits(small_synthetic):
    text = to_markdown(full_audit(small_synthetic, [], [MetricId.THEIL], 0.05, bootstrap_replicates=100))
    assert "## No results" in text
    assert "## Flags\n\nNone." in text
    assert "| theil |" in text


def test_markdown_sections(report):
    text = to_markdown(report)
    for heading in ("## Intra-metric audits", "## Inter-metric audits", "## Combined table", "## Quadrants"):
        assert heading in text
    assert text.endswith("\n") and not text.endswith("\n\n")


def test_histogram_markers_match_wald_half_width(tmp_path):
    uncorrected = wald_interval(0.5, 50, 0.5, 50, 0.05)
    corrected = wald_interval(0.5, 50, 0.5, 50, 0.05, "bonferroni", 12)
    path = emit_histogram_svg(
        [-0.1, -0.05, 0.0, 0.02, 0.08, 0.1],
        [(0.05, uncorrected.half_width), (corrected.alpha, corrected.half_width)],
        tmp_path / "hist.svg",
        title="statistical_parity",
    )
    groups = with_class(path, "g", "alpha-markers")
    assert len(groups) == 2
    markers = with_class(path, "line", "alpha-marker")
    assert len(markers) == 4
    offsets = sorted(float(m.get("data-offset")) for m in markers[:2])
    assert offsets == [pytest.approx(-0.19600, abs=1e-5), pytest.approx(0.19600, abs=1e-5)]
    assert float(markers[2].get("data-offset")) == pytest.approx(-corrected.half_width, rel=1e-5)


def test_histogram_single_value_has_one_bar(tmp_path):
    path = emit_histogram_svg([0.1, 0.1, 0.1], [], tmp_path / "hist.svg")
    assert len(with_class(path, "rect", "bar")) == 1


def test_histogram_needs_values(tmp_path):
    with pytest.raises(InvalidParameterError):
        emit_histogram_svg([], [], tmp_path / "hist.svg")


def test_forest_plot_rows(tmp_path):
    rows = [
        ForestRow(f"metric_{i}", 0.01 * i, wald_interval(0.5 + 0.01 * i, 100, 0.5, 100, 0.05))
        for i in range(10)
    ]
    rows.append(ForestRow("degenerate", 0.0, wald_interval(1.0, 10, 1.0, 10, 0.05)))
    rows.append(ForestRow("missing", None, None, note="no actual positives in group 1"))
    path = emit_forest_svg(rows, tmp_path / "forest.svg", title="attr_0")

    groups = with_class(path, "g", "forest-row")
    assert [g.get("data-label") for g in groups] == [row.label for row in rows]
    assert len(with_class(path, "line", "zero-line")) == 1

    def classes(group):
        return [child.get("class") for child in group]

    assert classes(groups[0]).count("whisker") == 1
    assert classes(groups[0]).count("whisker-cap") == 2
    assert "whisker" not in classes(groups[10])
    assert "point" in classes(groups[10])
    assert "not-estimable" in classes(groups[11])
    assert "point" not in classes(groups[11])


def test_forest_plot_needs_rows(tmp_path):
    with pytest.raises(InvalidParameterError):
        emit_forest_svg([], tmp_path / "forest.svg")


def test_scatter_shows_quadrant_shares(tmp_path):
    shares = QuadrantShares(
        x_metric=MetricId.ERROR_RATE, y_metric=MetricId.STATISTICAL_PARITY,
        attributes=4, upper_right=25.0, upper_left=25.0, lower_left=50.0,
    )
    path = emit_scatter_svg([0.1, -0.1, -0.2, -0.05], [0.1, 0.2, -0.1, -0.3], shares, tmp_path / "scatter.svg")
    texts = [t.text for t in with_class(path, "text", "quadrant-share")]
    assert texts == ["25.0%", "25.0%", "50.0%", "0.0%"]
    assert len(with_class(path, "circle", "point")) == 4


def test_svg_write_failure_raises_storage_error(tmp_path):
    with pytest.raises(StorageError):
        emit_histogram_svg([0.1], [], tmp_path / "absent" / "hist.svg")
