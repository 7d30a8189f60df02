import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, TypeVar

import numpy as np

from fairaudit import __version__
from fairaudit.config import get_settings
from fairaudit.core import metrics, stats
from fairaudit.core.data import fingerprint
from fairaudit.exceptions import InvalidParameterError, NotEstimableError
from fairaudit.models.schemas import (
    AlphaProvenance,
    AuditReport,
    AuditRow,
    CombinedTable,
    Dataset,
    DirectionTally,
    FlagKind,
    HackingFlag,
    IndividualMetricRow,
    IndividualScanResult,
    InterAuditResult,
    InterAuditRow,
    IntraAuditResult,
    IntraAuditRow,
    Manifest,
    MetricEstimate,
    MetricId,
    NotEstimableEntry,
    QuadrantShares,
    ReportMetadata,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Metric pairs whose attribute scans are summarised by sign quadrant, as (x, y)
QUADRANT_PAIRS = [
    (MetricId.ERROR_RATE, MetricId.STATISTICAL_PARITY),
    (MetricId.EQUAL_OPPORTUNITY, MetricId.STATISTICAL_PARITY),
]


def _ordered_map(func: Callable[[T], R], items: Sequence[T], max_workers: int) -> List[R]:
    """Map preserving input order, on a thread pool when more than one worker is allowed."""
    if max_workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def _fmt(alpha: float) -> str:
    return f"{alpha:.4g}"


class IntraScan(NamedTuple):
    """Array form of an intra-metric scan; intra_audit turns it into report rows."""

    values: metrics.GroupMetricArrays
    tests: int
    corrected_alpha: float
    uncorrected_half: np.ndarray
    corrected_half: np.ndarray

    def _excludes_zero(self, half: np.ndarray) -> np.ndarray:
        point = self.values.point
        return self.values.estimable & ((point - half > 0) | (point + half < 0))

    @property
    def significant_uncorrected(self) -> np.ndarray:
        return self._excludes_zero(self.uncorrected_half)

    @property
    def significant_corrected(self) -> np.ndarray:
        return self._excludes_zero(self.corrected_half)


def intra_scan(
    dataset: Dataset,
    metric_id: MetricId,
    attributes: Sequence[str],
    alpha: float,
) -> IntraScan:
    """
    Counts, point estimates and interval half-widths of one metric over many attributes.

    Args:
        dataset: Dataset with predictions
        metric_id: A group-difference metric
        attributes: Attributes to scan
        alpha: Family level

    Returns:
        IntraScan; the Bonferroni divisor is the number of estimable attributes
    """
    metric_id = MetricId(metric_id)
    if not metric_id.is_group_metric:
        raise InvalidParameterError(
            f"'{metric_id.value}' is a dataset-level metric and cannot be scanned over attributes"
        )
    if not attributes:
        raise InvalidParameterError("intra-metric audit needs at least one attribute")

    c0, c1 = metrics.grouped_tallies(dataset, attributes)
    values = metrics.group_metric_arrays(metric_id, c0, c1)
    tests = max(1, int(np.count_nonzero(values.estimable)))
    corrected_alpha = stats.bonferroni(alpha, tests)
    return IntraScan(
        values=values,
        tests=tests,
        corrected_alpha=corrected_alpha,
        uncorrected_half=stats.half_width_arrays(values, alpha),
        corrected_half=stats.half_width_arrays(values, corrected_alpha),
    )


def intra_audit(
    dataset: Dataset,
    metric_id: MetricId,
    attributes: Sequence[str],
    alpha: float,
) -> IntraAuditResult:
    """
    Scan one group metric over many attributes, with and without Bonferroni correction.

    Args:
        dataset: Dataset with predictions
        metric_id: A group-difference metric
        attributes: Attributes to scan, in report order
        alpha: Family level

    Returns:
        IntraAuditResult; corrected intervals use alpha / (number of estimable attributes)
    """
    metric_id = MetricId(metric_id)
    attributes = list(attributes)
    scan = intra_scan(dataset, metric_id, attributes, alpha)
    values, tests, corrected_alpha = scan.values, scan.tests, scan.corrected_alpha

    # Reasons come from the per-attribute path; only non-estimable attributes take it
    not_estimable = [
        NotEstimableEntry(
            attribute=attribute,
            metric_id=metric_id,
            reason=metrics.group_metric(metrics.confusion_by_group(dataset, attribute), metric_id).reason,
        )
        for attribute, estimable in zip(attributes, values.estimable)
        if not estimable
    ]

    rows = []
    for i in np.flatnonzero(values.estimable):
        attribute = attributes[i]
        estimate = values.estimate(i)
        uncorrected = stats.symmetric_interval(estimate.point, float(scan.uncorrected_half[i]), alpha, alpha)
        corrected = stats.symmetric_interval(
            estimate.point, float(scan.corrected_half[i]), corrected_alpha, alpha, "bonferroni", tests
        )
        flags = []
        if uncorrected.excludes_zero and not corrected.excludes_zero:
            flags.append(HackingFlag(
                kind=FlagKind.SIGNIFICANCE_LOST_UNDER_CORRECTION,
                subject=attribute,
                attribute=attribute,
                metric_id=metric_id,
                alphas=[alpha, corrected_alpha],
                detail=(
                    f"{metric_id.value} difference for '{attribute}' excludes 0 at alpha={_fmt(alpha)} "
                    f"but not at Bonferroni alpha={_fmt(corrected_alpha)} (m={tests})"
                ),
            ))
        rows.append(IntraAuditRow(
            attribute=attribute,
            metric_id=metric_id,
            estimate=estimate,
            interval_uncorrected=uncorrected,
            interval_corrected=corrected,
            significant_uncorrected=uncorrected.excludes_zero,
            significant_corrected=corrected.excludes_zero,
            flags=flags,
        ))

    significant_uncorrected = sum(row.significant_uncorrected for row in rows)
    significant_corrected = sum(row.significant_corrected for row in rows)
    result_flags = []
    if significant_uncorrected and not significant_corrected:
        result_flags.append(HackingFlag(
            kind=FlagKind.SIGNIFICANCE_GAINED_WITHOUT_CORRECTION,
            subject=metric_id.value,
            metric_id=metric_id,
            alphas=[alpha, corrected_alpha],
            detail=(
                f"{significant_uncorrected} of {len(rows)} attributes are significant for {metric_id.value} "
                f"only when the scan is left uncorrected (alpha={_fmt(alpha)} vs {_fmt(corrected_alpha)})"
            ),
        ))

    logger.debug(
        f"Intra audit {metric_id.value}: {significant_uncorrected} uncorrected, "
        f"{significant_corrected} corrected significant of {len(rows)}"
    )
    return IntraAuditResult(
        metric_id=metric_id,
        alpha=alpha,
        corrected_alpha=corrected_alpha,
        tests=tests,
        rows=rows,
        not_estimable=not_estimable,
        significant_uncorrected=significant_uncorrected,
        significant_corrected=significant_corrected,
        flags=result_flags,
    )


def inter_audit(
    dataset: Dataset,
    attribute: str,
    metric_ids: Sequence[MetricId],
    alpha: float,
    include_individual: bool = False,
    k: int = 5,
    bootstrap_replicates: int = 2000,
    seed: int = 0,
) -> InterAuditResult:
    """
    Evaluate many metrics on one attribute, Bonferroni-corrected over the metric family.

    Theil and consistency join the family only when include_individual is set;
    they then carry group differences with bootstrap intervals.

    Args:
        dataset: Dataset with predictions
        attribute: Attribute identifier
        metric_ids: At least two metric identifiers
        alpha: Family level
        include_individual: Count theil/consistency in the family
        k: Neighbour count for consistency
        bootstrap_replicates: Replicates for individual-metric intervals
        seed: Bootstrap seed

    Returns:
        InterAuditResult with per-metric rows, direction tally and disagreement flag
    """
    metric_ids = [MetricId(m) for m in metric_ids]
    if len(metric_ids) < 2:
        raise InvalidParameterError("inter-metric audit needs at least two metrics")
    family = [m for m in metric_ids if m.is_group_metric or include_individual]
    if not family:
        raise InvalidParameterError("no metric left in the inter-metric family")

    gc = metrics.confusion_by_group(dataset, attribute)
    empty = [g for g, counts in ((0, gc.group0), (1, gc.group1)) if counts.total == 0]
    if empty:
        reason = f"group {empty[0]} of '{attribute}' is empty"
        return InterAuditResult(
            attribute=attribute,
            alpha=alpha,
            corrected_alpha=alpha,
            tests=1,
            not_estimable=[NotEstimableEntry(attribute=attribute, metric_id=m, reason=reason) for m in family],
            global_reason=reason,
        )

    estimates: Dict[MetricId, MetricEstimate] = {}
    for metric_id in family:
        if metric_id.is_group_metric:
            estimates[metric_id] = metrics.group_metric(gc, metric_id)
        else:
            estimates[metric_id] = metrics.individual_group_difference(dataset, attribute, metric_id, k)
    not_estimable = [
        NotEstimableEntry(attribute=attribute, metric_id=m, reason=e.reason)
        for m, e in estimates.items()
        if not e.estimable
    ]
    tests = max(1, len(family) - len(not_estimable))
    corrected_alpha = stats.bonferroni(alpha, tests)

    rows = []
    for metric_id, estimate in estimates.items():
        if not estimate.estimable:
            continue
        try:
            if metric_id.is_group_metric:
                interval = stats.estimate_interval(estimate, alpha, "bonferroni", tests)
            else:
                interval = stats.bootstrap_interval(
                    dataset, attribute, metric_id, alpha,
                    replicates=bootstrap_replicates, seed=seed, k=k,
                    correction="bonferroni", tests=tests,
                )
        except NotEstimableError as e:
            not_estimable.append(NotEstimableEntry(attribute=attribute, metric_id=metric_id, reason=e.reason))
            continue
        rows.append(InterAuditRow(
            attribute=attribute,
            metric_id=metric_id,
            estimate=estimate,
            interval_corrected=interval,
            significant_corrected=interval.excludes_zero,
            direction=metrics.favored_group(metric_id, estimate.point),
        ))

    tally = DirectionTally(
        favors_group0=sum(row.direction == "group0" for row in rows),
        favors_group1=sum(row.direction == "group1" for row in rows),
        neutral=sum(row.direction == "neutral" for row in rows),
    )
    significant = [row for row in rows if row.significant_corrected]
    directions = {row.direction for row in significant} - {"neutral"}
    disagreement = len(directions) == 2 or (0 < len(significant) < len(rows))

    flags = []
    if disagreement:
        flags.append(HackingFlag(
            kind=FlagKind.METRIC_DISAGREEMENT,
            subject=attribute,
            attribute=attribute,
            alphas=[alpha, corrected_alpha],
            detail=(
                f"'{attribute}': {len(significant)} of {len(rows)} metrics significant at Bonferroni "
                f"alpha={_fmt(corrected_alpha)} (m={tests}); {tally.favors_group0} favor group 0, "
                f"{tally.favors_group1} favor group 1, {tally.neutral} neutral"
            ),
        ))

    return InterAuditResult(
        attribute=attribute,
        alpha=alpha,
        corrected_alpha=corrected_alpha,
        tests=tests,
        rows=rows,
        not_estimable=not_estimable,
        disagreement=disagreement,
        tally=tally,
        flags=flags,
    )


def check_manifest(
    manifest: Manifest,
    requested_attributes: Iterable[str],
    requested_metrics: Iterable[MetricId],
) -> List[HackingFlag]:
    """
    Compare an executed audit against its pre-registration.

    Args:
        manifest: Declared attributes, metrics and alpha
        requested_attributes: Attributes the audit actually evaluates
        requested_metrics: Metrics the audit actually evaluates

    Returns:
        undeclared_attribute / undeclared_metric flags for post-hoc additions and
        declared_omission flags for declared items the audit leaves out
    """
    requested_attributes = list(requested_attributes)
    requested_metrics = [MetricId(m) for m in requested_metrics]
    alphas = [manifest.alpha]
    flags = []
    for attribute in requested_attributes:
        if attribute not in manifest.attributes:
            flags.append(HackingFlag(
                kind=FlagKind.UNDECLARED_ATTRIBUTE, subject=attribute, attribute=attribute, alphas=alphas,
                detail=f"attribute '{attribute}' is audited but was not declared in the manifest",
            ))
    for metric_id in requested_metrics:
        if metric_id not in manifest.metrics:
            flags.append(HackingFlag(
                kind=FlagKind.UNDECLARED_METRIC, subject=metric_id.value, metric_id=metric_id, alphas=alphas,
                detail=f"metric '{metric_id.value}' is audited but was not declared in the manifest",
            ))
    for attribute in manifest.attributes:
        if attribute not in requested_attributes:
            flags.append(HackingFlag(
                kind=FlagKind.DECLARED_OMISSION, subject=attribute, attribute=attribute, alphas=alphas,
                detail=f"declared attribute '{attribute}' is missing from the audit",
            ))
    for metric_id in manifest.metrics:
        if metric_id not in requested_metrics:
            flags.append(HackingFlag(
                kind=FlagKind.DECLARED_OMISSION, subject=metric_id.value, metric_id=metric_id, alphas=alphas,
                detail=f"declared metric '{metric_id.value}' is missing from the audit",
            ))
    for flag in flags:
        logger.warning(f"Manifest deviation: {flag.detail}")
    return flags


def effect_size_screen(rows: Iterable[AuditRow], threshold: float) -> List[HackingFlag]:
    """
    Flag significant rows whose effect is too small to matter.

    Args:
        rows: Audit rows; their corrected significance is used
        threshold: Minimum absolute difference worth reporting

    Returns:
        below_effect_threshold flags
    """
    if threshold < 0:
        raise InvalidParameterError(f"effect-size threshold must be non-negative, got {threshold}")
    flags = []
    for row in rows:
        if row.significant_corrected and abs(row.estimate.point) < threshold:
            flags.append(HackingFlag(
                kind=FlagKind.BELOW_EFFECT_THRESHOLD,
                subject=f"{row.attribute}/{row.metric_id.value}",
                attribute=row.attribute,
                metric_id=row.metric_id,
                alphas=[row.interval_corrected.family_alpha, row.interval_corrected.alpha],
                detail=(
                    f"{row.metric_id.value} difference {row.estimate.point:+.4f} for '{row.attribute}' is "
                    f"significant but below the effect-size threshold {threshold:g}"
                ),
            ))
    return flags


def individual_scan(
    dataset: Dataset,
    metric_id: MetricId,
    attributes: Sequence[str],
    k: int = 5,
) -> IndividualScanResult:
    """
    Group differences of theil or consistency across many attributes.

    Args:
        dataset: Dataset with predictions
        metric_id: theil or consistency
        attributes: Attributes to scan
        k: Neighbour count for consistency

    Returns:
        IndividualScanResult with one estimate per estimable attribute
    """
    metric_id = MetricId(metric_id)
    if metric_id.is_group_metric:
        raise InvalidParameterError(f"'{metric_id.value}' is a group metric; use intra_audit")
    arrays = dataset.arrays
    scores = None
    if metric_id == MetricId.CONSISTENCY:
        try:
            scores = metrics.individual_consistency(dataset, k)
        except NotEstimableError as e:
            return IndividualScanResult(
                metric_id=metric_id,
                not_estimable=[NotEstimableEntry(metric_id=metric_id, reason=e.reason)],
            )

    estimates, kept, not_estimable = [], [], []
    for attribute in attributes:
        in_group1 = arrays.attributes[:, dataset.attribute_index(attribute)] == 1
        if scores is not None and in_group1.any() and (~in_group1).any():
            v0, v1 = float(scores[~in_group1].mean()), float(scores[in_group1].mean())
            estimate = MetricEstimate(metric_id=metric_id, point=v0 - v1, value0=v0, value1=v1)
        else:
            estimate = metrics.individual_group_difference(dataset, attribute, metric_id, k)
        if estimate.estimable:
            estimates.append(estimate)
            kept.append(attribute)
        else:
            not_estimable.append(NotEstimableEntry(attribute=attribute, metric_id=metric_id, reason=estimate.reason))
    return IndividualScanResult(metric_id=metric_id, estimates=estimates, attributes=kept, not_estimable=not_estimable)


def quadrant_shares(x_result: IntraAuditResult, y_result: IntraAuditResult) -> QuadrantShares:
    """
    Percentage of attributes in each sign quadrant of two metric scans.

    Args:
        x_result: Scan plotted on the horizontal axis
        y_result: Scan plotted on the vertical axis

    Returns:
        QuadrantShares over the attributes estimable in both scans
    """
    y_points = {row.attribute: row.estimate.point for row in y_result.rows}
    pairs = [(row.estimate.point, y_points[row.attribute]) for row in x_result.rows if row.attribute in y_points]
    total = len(pairs)
    counts = {"upper_right": 0, "upper_left": 0, "lower_left": 0, "lower_right": 0, "on_axis": 0}
    for x, y in pairs:
        if x == 0 or y == 0:
            counts["on_axis"] += 1
        elif y > 0:
            counts["upper_right" if x > 0 else "upper_left"] += 1
        else:
            counts["lower_right" if x > 0 else "lower_left"] += 1
    shares = {key: (100.0 * value / total if total else 0.0) for key, value in counts.items()}
    return QuadrantShares(x_metric=x_result.metric_id, y_metric=y_result.metric_id, attributes=total, **shares)


class FairnessAuditor:
    """
    Runs the complete audit: intra scans, inter sweeps, combined table,
    dataset-level individual metrics, manifest checks and effect-size screening.
    """

    def __init__(
        self,
        bootstrap_replicates: Optional[int] = None,
        consistency_k: Optional[int] = None,
        seed: Optional[int] = None,
        max_workers: Optional[int] = None,
    ):
        settings = get_settings()
        self.bootstrap_replicates = bootstrap_replicates or settings.BOOTSTRAP_REPLICATES
        self.consistency_k = consistency_k or settings.CONSISTENCY_K
        self.seed = settings.SEED if seed is None else seed
        self.max_workers = max_workers or settings.MAX_WORKERS

    def full_audit(
        self,
        dataset: Dataset,
        attributes: Sequence[str],
        metric_ids: Sequence[MetricId],
        alpha: float,
        manifest: Optional[Manifest] = None,
        correction_scope: str = "intra",
        effect_size_threshold: float = 0.0,
        include_individual: bool = False,
        alpha_source: str = "cli",
        parameters: Optional[Dict[str, Any]] = None,
        seeds: Optional[Dict[str, int]] = None,
    ) -> AuditReport:
        """
        Compose every audit over the requested attributes and metrics.

        Args:
            dataset: Dataset with predictions
            attributes: Attributes to audit, in report order
            metric_ids: Metrics to audit, in report order
            alpha: Family level (replaced by the manifest's alpha when a manifest is given)
            manifest: Optional pre-registration to check against
            correction_scope: Which corrected rows the effect-size screen reads and
                whether combined-table flags are raised ('intra', 'inter', 'combined')
            effect_size_threshold: Minimum meaningful |difference| (manifest value wins)
            include_individual: Count theil/consistency in the inter-metric family
            alpha_source: Where alpha came from, for provenance
            parameters: Effective run configuration to record in the metadata
            seeds: Seeds used upstream (generation, splitting) to record

        Returns:
            AuditReport
        """
        if correction_scope not in ("intra", "inter", "combined"):
            raise InvalidParameterError(f"Unknown correction scope '{correction_scope}'")
        metric_ids = [MetricId(m) for m in metric_ids]
        attributes = list(attributes)
        for attribute in attributes:
            dataset.attribute_index(attribute)

        deviations: List[HackingFlag] = []
        if manifest is not None:
            alpha = manifest.alpha
            alpha_source = "manifest"
            effect_size_threshold = manifest.effect_size_threshold
            deviations = check_manifest(manifest, attributes, metric_ids)

        group_ids = [m for m in metric_ids if m.is_group_metric]
        individual_ids = [m for m in metric_ids if not m.is_group_metric]
        logger.info(
            f"Auditing {dataset.n_records} records: {len(attributes)} attributes x "
            f"{len(group_ids)} group metrics, {len(individual_ids)} individual metrics, alpha={_fmt(alpha)}"
        )

        intra = []
        if attributes:
            intra = _ordered_map(
                lambda m: intra_audit(dataset, m, attributes, alpha),
                group_ids,
                self.max_workers,
            )

        inter_family = [m for m in metric_ids if m.is_group_metric or include_individual]
        inter = []
        if len(inter_family) >= 2:
            inter = _ordered_map(
                lambda a: inter_audit(
                    dataset, a, metric_ids, alpha,
                    include_individual=include_individual,
                    k=self.consistency_k,
                    bootstrap_replicates=self.bootstrap_replicates,
                    seed=self.seed,
                ),
                attributes,
                self.max_workers,
            )

        combined = self._combined_table(intra, alpha, correction_scope == "combined")
        individual = [self._individual_row(dataset, m, alpha) for m in individual_ids]
        scans = [individual_scan(dataset, m, attributes, self.consistency_k) for m in individual_ids if attributes]

        by_metric = {result.metric_id: result for result in intra}
        quadrants = [
            quadrant_shares(by_metric[x], by_metric[y])
            for x, y in QUADRANT_PAIRS
            if x in by_metric and y in by_metric
        ]

        if correction_scope == "intra":
            screened: List[AuditRow] = [row for result in intra for row in result.rows]
        elif correction_scope == "inter":
            screened = [row for result in inter for row in result.rows]
        else:
            screened = list(combined.rows) if combined else []

        flags: List[HackingFlag] = []
        for result in intra:
            for row in result.rows:
                flags.extend(row.flags)
            flags.extend(result.flags)
        for result in inter:
            flags.extend(result.flags)
        if combined is not None:
            flags.extend(combined.flags)
        flags.extend(effect_size_screen(screened, effect_size_threshold))

        metadata = ReportMetadata(
            tool_version=__version__,
            dataset_fingerprint=fingerprint(dataset),
            n_records=dataset.n_records,
            attributes=attributes,
            metrics=metric_ids,
            parameters=dict(parameters or {}),
            seeds={"bootstrap": self.seed, **(seeds or {})},
            alpha=AlphaProvenance(
                alpha=alpha,
                source=alpha_source,
                correction_scope=correction_scope,
                intra_tests={result.metric_id.value: result.tests for result in intra},
                inter_tests={result.attribute: result.tests for result in inter},
                combined_tests=combined.tests if combined else 0,
            ),
        )
        report = AuditReport(
            metadata=metadata,
            intra=intra,
            inter=inter,
            combined=combined,
            individual=individual,
            individual_scans=scans,
            quadrants=quadrants,
            flags=flags,
            manifest_deviations=deviations,
        )
        logger.info(f"Audit finished with {len(flags)} flags and {len(deviations)} manifest deviations")
        return report

    def _combined_table(
        self,
        intra: List[IntraAuditResult],
        alpha: float,
        raise_flags: bool,
    ) -> Optional[CombinedTable]:
        cells = [row for result in intra for row in result.rows]
        if not cells:
            return None
        tests = len(cells)
        corrected_alpha = stats.bonferroni(alpha, tests)
        rows, flags = [], []
        for cell in cells:
            interval = stats.estimate_interval(cell.estimate, alpha, "bonferroni", tests)
            row_flags = []
            if raise_flags and cell.significant_uncorrected and not interval.excludes_zero:
                row_flags.append(HackingFlag(
                    kind=FlagKind.SIGNIFICANCE_LOST_UNDER_CORRECTION,
                    subject=cell.attribute,
                    attribute=cell.attribute,
                    metric_id=cell.metric_id,
                    alphas=[alpha, corrected_alpha],
                    detail=(
                        f"{cell.metric_id.value} difference for '{cell.attribute}' excludes 0 at "
                        f"alpha={_fmt(alpha)} but not at table-wide alpha={_fmt(corrected_alpha)} (m={tests})"
                    ),
                ))
            flags.extend(row_flags)
            rows.append(AuditRow(
                attribute=cell.attribute,
                metric_id=cell.metric_id,
                estimate=cell.estimate,
                interval_corrected=interval,
                significant_corrected=interval.excludes_zero,
                flags=row_flags,
            ))
        return CombinedTable(alpha=alpha, corrected_alpha=corrected_alpha, tests=tests, rows=rows, flags=flags)

    def _individual_row(self, dataset: Dataset, metric_id: MetricId, alpha: float) -> IndividualMetricRow:
        k = self.consistency_k if metric_id == MetricId.CONSISTENCY else None
        try:
            if metric_id == MetricId.THEIL:
                value = metrics.theil_index(dataset)
            else:
                value = metrics.consistency(dataset, self.consistency_k)
            interval = stats.bootstrap_interval(
                dataset, None, metric_id, alpha,
                replicates=self.bootstrap_replicates,
                seed=self.seed,
                k=self.consistency_k,
                max_workers=self.max_workers,
            )
        except (NotEstimableError, InvalidParameterError) as e:
            logger.warning(f"{metric_id.value} not estimable: {str(e)}")
            return IndividualMetricRow(metric_id=metric_id, estimable=False, reason=str(e), k=k)
        return IndividualMetricRow(metric_id=metric_id, value=value, interval=interval, k=k)


def full_audit(
    dataset: Dataset,
    attributes: Sequence[str],
    metric_ids: Sequence[MetricId],
    alpha: float,
    manifest: Optional[Manifest] = None,
    **options: Any,
) -> AuditReport:
    """Run FairnessAuditor.full_audit with settings-derived defaults."""
    auditor_options = {
        key: options.pop(key)
        for key in ("bootstrap_replicates", "consistency_k", "seed", "max_workers")
        if key in options
    }
    return FairnessAuditor(**auditor_options).full_audit(
        dataset, attributes, metric_ids, alpha, manifest=manifest, **options
    )
