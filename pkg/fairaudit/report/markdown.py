from typing import List, Optional

from fairaudit.models.schemas import (
    AuditReport,
    ConfidenceInterval,
    FlagKind,
    HackingFlag,
    IndividualMetricRow,
    IndividualScanResult,
    InterAuditResult,
    IntraAuditResult,
    NotEstimableEntry,
    QuadrantShares,
)


def percent(value: float) -> str:
    """A proportion as a percentage with one decimal, e.g. -0.121 -> '-12.1%'."""
    text = f"{100.0 * value:.1f}%"
    return "0.0%" if text == "-0.0%" else text


def percent_interval(interval: ConfidenceInterval) -> str:
    return f"[{percent(interval.lower)}, {percent(interval.upper)}]"


def index_interval(interval: Optional[ConfidenceInterval]) -> str:
    if interval is None:
        return "n/a"
    return f"[{interval.lower:.4f}, {interval.upper:.4f}]"


def _alpha(alpha: float) -> str:
    return f"{alpha:.4g}"


def _bold(text: str, on: bool) -> str:
    return f"**{text}**" if on else text


class ReportTemplates:
    """
    Markdown sections of an audit report. Every number is taken from the
    report as computed; nothing here recomputes a statistic.
    """

    @staticmethod
    def header(report: AuditReport) -> List[str]:
        meta = report.metadata
        provenance = meta.alpha
        lines = [
            "# Fairness audit report",
            "",
            f"- Records: {meta.n_records}",
            f"- Dataset: `{meta.dataset_fingerprint}`",
            f"- Attributes: {len(meta.attributes)}",
            f"- Metrics: {', '.join(m.value for m in meta.metrics) or 'none'}",
            f"- Alpha: {_alpha(provenance.alpha)} (source: {provenance.source})",
            f"- Correction scope: {provenance.correction_scope}",
            f"- Tool version: {meta.tool_version}",
        ]
        if meta.seeds:
            seeds = ", ".join(f"{name}={value}" for name, value in sorted(meta.seeds.items()))
            lines.append(f"- Seeds: {seeds}")
        return lines + [""]

    @staticmethod
    def not_estimable(entries: List[NotEstimableEntry]) -> List[str]:
        if not entries:
            return []
        lines = ["Not estimable:", ""]
        for entry in entries:
            subject = entry.attribute if entry.attribute is not None else entry.metric_id.value
            lines.append(f"- {subject}: {entry.reason}")
        return lines + [""]

    @staticmethod
    def intra_section(result: IntraAuditResult) -> List[str]:
        lines = [
            f"### {result.metric_id.value}",
            "",
            f"{result.significant_uncorrected} of {len(result.rows)} attributes significant uncorrected, "
            f"{result.significant_corrected} after Bonferroni (m={result.tests}, "
            f"alpha={_alpha(result.corrected_alpha)}).",
            "",
            f"| Attribute | Avg Δ | Uncorrected CI (α={_alpha(result.alpha)}) "
            f"| Corrected CI (α={_alpha(result.corrected_alpha)}) | Flags |",
            "|---|---:|---|---|---|",
        ]
        for row in result.rows:
            lost = any(f.kind == FlagKind.SIGNIFICANCE_LOST_UNDER_CORRECTION for f in row.flags)
            flags = ", ".join(f.kind.value for f in row.flags)
            lines.append(
                f"| {_bold(row.attribute, lost)} | {percent(row.estimate.point)} "
                f"| {percent_interval(row.interval_uncorrected)} "
                f"| {_bold(percent_interval(row.interval_corrected), lost)} | {flags} |"
            )
        lines.append("")
        lines.extend(ReportTemplates.not_estimable(result.not_estimable))
        return lines

    @staticmethod
    def inter_section(result: InterAuditResult) -> List[str]:
        lines = [f"### {result.attribute}", ""]
        if result.global_reason:
            return lines + [f"No metric is estimable: {result.global_reason}.", ""]
        tally = result.tally
        lines += [
            f"Bonferroni over {result.tests} metrics (α={_alpha(result.corrected_alpha)}). "
            f"Favors group 0: {tally.favors_group0}, group 1: {tally.favors_group1}, "
            f"neutral: {tally.neutral}.",
            "",
            "| Metric | Δ | Corrected CI | Method | Favors | Significant |",
            "|---|---:|---|---|---|---|",
        ]
        for row in result.rows:
            if row.metric_id.is_group_metric:
                delta, interval = percent(row.estimate.point), percent_interval(row.interval_corrected)
            else:
                delta, interval = f"{row.estimate.point:.4f}", index_interval(row.interval_corrected)
            lines.append(
                f"| {row.metric_id.value} | {delta} | {interval} | {row.interval_corrected.method} "
                f"| {row.direction} | {'yes' if row.significant_corrected else 'no'} |"
            )
        lines.append("")
        if result.disagreement:
            lines += ["**Metrics disagree on this attribute.**", ""]
        lines.extend(ReportTemplates.not_estimable(result.not_estimable))
        return lines

    @staticmethod
    def combined_section(report: AuditReport) -> List[str]:
        table = report.combined
        if table is None:
            return []
        significant = sum(row.significant_corrected for row in table.rows)
        lines = [
            "## Combined table",
            "",
            f"{significant} of {table.tests} cells significant with Bonferroni over every cell "
            f"(α={_alpha(table.corrected_alpha)}).",
            "",
            "| Attribute | Metric | Avg Δ | Corrected CI | Significant |",
            "|---|---|---:|---|---|",
        ]
        for row in table.rows:
            lines.append(
                f"| {row.attribute} | {row.metric_id.value} | {percent(row.estimate.point)} "
                f"| {percent_interval(row.interval_corrected)} | {'yes' if row.significant_corrected else 'no'} |"
            )
        return lines + [""]

    @staticmethod
    def individual_section(rows: List[IndividualMetricRow], scans: List[IndividualScanResult]) -> List[str]:
        if not rows and not scans:
            return []
        lines = ["## Individual fairness", ""]
        if rows:
            lines += ["| Metric | Value | Bootstrap CI | k |", "|---|---:|---|---|"]
            for row in rows:
                if not row.estimable:
                    lines.append(f"| {row.metric_id.value} | n/a | {row.reason} | {row.k or ''} |")
                    continue
                lines.append(
                    f"| {row.metric_id.value} | {row.value:.4f} | {index_interval(row.interval)} | {row.k or ''} |"
                )
            lines.append("")
        for scan in scans:
            lines += [
                f"### {scan.metric_id.value} by attribute",
                "",
                "| Attribute | Group 0 | Group 1 | Δ |",
                "|---|---:|---:|---:|",
            ]
            for attribute, estimate in zip(scan.attributes, scan.estimates):
                lines.append(
                    f"| {attribute} | {estimate.value0:.4f} | {estimate.value1:.4f} | {estimate.point:+.4f} |"
                )
            lines.append("")
            lines.extend(ReportTemplates.not_estimable(scan.not_estimable))
        return lines

    @staticmethod
    def quadrant_section(quadrants: List[QuadrantShares]) -> List[str]:
        if not quadrants:
            return []
        lines = [
            "## Quadrants",
            "",
            "| x | y | Attributes | x>0,y>0 | x<0,y>0 | x<0,y<0 | x>0,y<0 | On an axis |",
            "|---|---|---:|---:|---:|---:|---:|---:|",
        ]
        for q in quadrants:
            lines.append(
                f"| {q.x_metric.value} | {q.y_metric.value} | {q.attributes} | {q.upper_right:.1f}% "
                f"| {q.upper_left:.1f}% | {q.lower_left:.1f}% | {q.lower_right:.1f}% | {q.on_axis:.1f}% |"
            )
        return lines + [""]

    @staticmethod
    def flag_section(title: str, flags: List[HackingFlag]) -> List[str]:
        lines = [f"## {title}", ""]
        if not flags:
            return lines + ["None.", ""]
        for flag in flags:
            lines.append(f"- **{flag.kind.value}** `{flag.subject}`: {flag.detail}")
        return lines + [""]


def to_markdown(report: AuditReport) -> str:
    """
    Render a report as GitHub-flavoured markdown.

    Args:
        report: AuditReport to render

    Returns:
        Markdown text; percentages carry one decimal and rows that lose
        significance under correction are bold
    """
    lines = ReportTemplates.header(report)
    if not report.intra and not report.inter:
        lines += ["## No results", "", "No attribute-level audit was run for this report.", ""]
    if report.intra:
        lines += ["## Intra-metric audits", ""]
        for result in report.intra:
            lines.extend(ReportTemplates.intra_section(result))
    if report.inter:
        lines += ["## Inter-metric audits", ""]
        for result in report.inter:
            lines.extend(ReportTemplates.inter_section(result))
    lines.extend(ReportTemplates.combined_section(report))
    lines.extend(ReportTemplates.individual_section(report.individual, report.individual_scans))
    lines.extend(ReportTemplates.quadrant_section(report.quadrants))
    lines.extend(ReportTemplates.flag_section("Flags", report.flags))
    if report.manifest_deviations:
        lines.extend(ReportTemplates.flag_section("Manifest deviations", report.manifest_deviations))
    return "\n".join(lines).rstrip("\n") + "\n"
