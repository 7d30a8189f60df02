import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from fairaudit.exceptions import InvalidParameterError, NotEstimableError
from fairaudit.models.schemas import (
    ConfidenceInterval,
    CoverageResult,
    Dataset,
    FamilywiseErrorResult,
    MetricEstimate,
    MetricId,
)
from fairaudit.core import metrics
from fairaudit.core.metrics import GroupMetricArrays

logger = logging.getLogger(__name__)

MIN_BOOTSTRAP_REPLICATES = 100
MIN_COVERAGE_TRIALS = 1000


def _check_alpha(alpha: float) -> None:
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")


def _check_proportion(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {p}")


def _check_count(name: str, n: int) -> None:
    if n < 1:
        raise InvalidParameterError(f"{name} must be at least 1, got {n}")


def normal_quantile(p: float) -> float:
    """
    Inverse of the standard normal CDF.

    Args:
        p: Probability strictly between 0 and 1

    Returns:
        The p-quantile of N(0, 1)
    """
    if not (isinstance(p, (int, float)) and 0.0 < p < 1.0):
        raise InvalidParameterError(f"p must lie in (0, 1), got {p}")
    return float(stats.norm.ppf(p))


def z_value(alpha: float) -> float:
    """The 1 - alpha/2 standard normal quantile."""
    _check_alpha(alpha)
    return normal_quantile(1.0 - alpha / 2.0)


def bonferroni(alpha: float, m: int) -> float:
    """
    Bonferroni-corrected significance level.

    Args:
        alpha: Family-wise level
        m: Number of simultaneous tests

    Returns:
        alpha / m
    """
    _check_alpha(alpha)
    if m < 1:
        raise InvalidParameterError(f"Bonferroni correction needs at least one test, got {m}")
    return alpha / m


def _levels(alpha: float, correction: str, tests: int) -> Tuple[float, float]:
    """(effective alpha, family alpha) for a correction regime."""
    _check_alpha(alpha)
    if correction == "none":
        if tests != 1:
            raise InvalidParameterError("an uncorrected interval belongs to a single test")
        return alpha, alpha
    if correction == "bonferroni":
        return bonferroni(alpha, tests), alpha
    raise InvalidParameterError(f"Unknown correction '{correction}'")


def wald_half_width(p1, n1, p2, n2, z):
    """z * sqrt(p1(1-p1)/n1 + p2(1-p2)/n2); works elementwise on arrays."""
    return z * np.sqrt(p1 * (1.0 - p1) / n1 + p2 * (1.0 - p2) / n2)


def average_odds_variance(tpr0, n_pos0, tpr1, n_pos1, fpr0, n_neg0, fpr1, n_neg1):
    """(Var(dTPR) + Var(dFPR)) / 4; works elementwise on arrays."""
    return 0.25 * (
        tpr0 * (1 - tpr0) / n_pos0 + tpr1 * (1 - tpr1) / n_pos1
        + fpr0 * (1 - fpr0) / n_neg0 + fpr1 * (1 - fpr1) / n_neg1
    )


def symmetric_interval(
    center: float,
    half: float,
    alpha: float,
    family_alpha: float,
    correction: str = "none",
    tests: int = 1,
) -> ConfidenceInterval:
    """Wald-type interval center +- half at an already corrected level."""
    return ConfidenceInterval(
        lower=center - half,
        upper=center + half,
        alpha=alpha,
        family_alpha=family_alpha,
        correction=correction,
        tests=tests,
        method="wald",
    )


def half_width_arrays(values: GroupMetricArrays, alpha: float) -> np.ndarray:
    """
    Wald half-widths of every entry of an array-form group metric.

    Args:
        values: Output of metrics.group_metric_arrays
        alpha: Level of each interval (already corrected)

    Returns:
        Array of half-widths; entries that are not estimable hold placeholders
    """
    z = z_value(alpha)
    n0 = np.maximum(values.n0, 1)
    n1 = np.maximum(values.n1, 1)
    if values.secondary is None:
        return wald_half_width(values.p0, n0, values.p1, n1, z)
    f0, nf0, f1, nf1 = values.secondary
    variance = average_odds_variance(values.p0, n0, values.p1, n1, f0, np.maximum(nf0, 1), f1, np.maximum(nf1, 1))
    return z * np.sqrt(variance)


def wald_interval(
    p1: float,
    n1: int,
    p2: float,
    n2: int,
    alpha: float,
    correction: str = "none",
    tests: int = 1,
) -> ConfidenceInterval:
    """
    Wald interval for the difference of two independent binomial proportions.

    The variances of the two proportions are summed. Bounds are not clipped to
    [-1, 1] and no continuity correction is applied.

    Args:
        p1: Proportion of the first group
        n1: Sample size of the first group
        p2: Proportion of the second group
        n2: Sample size of the second group
        alpha: Family level; corrected when correction is 'bonferroni'
        correction: 'none' or 'bonferroni'
        tests: Size of the Bonferroni family

    Returns:
        ConfidenceInterval centred at p1 - p2
    """
    _check_proportion("p1", p1)
    _check_proportion("p2", p2)
    _check_count("n1", n1)
    _check_count("n2", n2)
    effective, family = _levels(alpha, correction, tests)
    half = float(wald_half_width(p1, n1, p2, n2, z_value(effective)))
    return symmetric_interval(p1 - p2, half, effective, family, correction, tests)


def average_odds_interval(
    tpr0: float,
    n_pos0: int,
    tpr1: float,
    n_pos1: int,
    fpr0: float,
    n_neg0: int,
    fpr1: float,
    n_neg1: int,
    alpha: float,
    correction: str = "none",
    tests: int = 1,
) -> ConfidenceInterval:
    """
    Wald-type interval for the average-odds difference.

    TPR and FPR are estimated on disjoint records (actual positives versus
    actual negatives), so the two differences are treated as independent:
    Var = (Var(dTPR) + Var(dFPR)) / 4.

    Args:
        tpr0, n_pos0: True positive rate and actual positives of group 0
        tpr1, n_pos1: True positive rate and actual positives of group 1
        fpr0, n_neg0: False positive rate and actual negatives of group 0
        fpr1, n_neg1: False positive rate and actual negatives of group 1
        alpha: Family level
        correction: 'none' or 'bonferroni'
        tests: Size of the Bonferroni family

    Returns:
        ConfidenceInterval centred at ((FPR0 - FPR1) + (TPR0 - TPR1)) / 2
    """
    for name, n in (("n_pos0", n_pos0), ("n_pos1", n_pos1), ("n_neg0", n_neg0), ("n_neg1", n_neg1)):
        if n < 1:
            raise NotEstimableError(f"{name} is zero")
    for name, p in (("tpr0", tpr0), ("tpr1", tpr1), ("fpr0", fpr0), ("fpr1", fpr1)):
        _check_proportion(name, p)
    effective, family = _levels(alpha, correction, tests)
    center = 0.5 * ((fpr0 - fpr1) + (tpr0 - tpr1))
    variance = average_odds_variance(tpr0, n_pos0, tpr1, n_pos1, fpr0, n_neg0, fpr1, n_neg1)
    half = z_value(effective) * math.sqrt(variance)
    return symmetric_interval(center, half, effective, family, correction, tests)


def estimate_interval(
    estimate: MetricEstimate,
    alpha: float,
    correction: str = "none",
    tests: int = 1,
) -> ConfidenceInterval:
    """
    Wald interval matching a group metric estimate.

    Args:
        estimate: Estimable group-difference MetricEstimate
        alpha: Family level
        correction: 'none' or 'bonferroni'
        tests: Size of the Bonferroni family

    Returns:
        ConfidenceInterval for the estimate's point
    """
    if not estimate.estimable:
        raise NotEstimableError(estimate.reason or "metric is not estimable")
    if not estimate.metric_id.is_group_metric:
        raise InvalidParameterError(f"'{estimate.metric_id.value}' has no Wald interval; use the bootstrap")
    if estimate.metric_id == MetricId.AVERAGE_ODDS:
        fpr = estimate.secondary
        return average_odds_interval(
            estimate.p0, estimate.n0, estimate.p1, estimate.n1,
            fpr.p0, fpr.n0, fpr.p1, fpr.n1,
            alpha, correction, tests,
        )
    return wald_interval(estimate.p0, estimate.n0, estimate.p1, estimate.n1, alpha, correction, tests)


def bootstrap_interval(
    dataset: Dataset,
    attribute: Optional[str],
    metric_id: MetricId,
    alpha: float,
    replicates: int = 2000,
    seed: int = 0,
    k: int = 5,
    correction: str = "none",
    tests: int = 1,
    max_workers: int = 1,
) -> ConfidenceInterval:
    """
    Percentile bootstrap interval, resampling records with replacement.

    Every replicate draws from its own generator spawned from (seed, replicate
    index), so the result does not depend on how replicates are scheduled.

    Args:
        dataset: Dataset with predictions
        attribute: Attribute for group differences; None for dataset-level theil/consistency
        metric_id: Any metric identifier
        alpha: Family level
        replicates: Number of bootstrap replicates (at least 100)
        seed: Root seed
        k: Neighbour count for consistency
        correction: 'none' or 'bonferroni'
        tests: Size of the Bonferroni family
        max_workers: Threads evaluating replicates

    Returns:
        ConfidenceInterval from the alpha/2 and 1 - alpha/2 replicate quantiles
    """
    metric_id = MetricId(metric_id)
    if replicates < MIN_BOOTSTRAP_REPLICATES:
        raise InvalidParameterError(f"replicates must be at least {MIN_BOOTSTRAP_REPLICATES}, got {replicates}")
    effective, family = _levels(alpha, correction, tests)

    arrays = dataset.arrays
    if arrays.prediction is None:
        raise NotEstimableError("dataset has no predictions")
    in_group1 = None
    if attribute is not None:
        in_group1 = arrays.attributes[:, dataset.attribute_index(attribute)] == 1

    full = metrics.point_from_arrays(metric_id, arrays.truth, arrays.prediction, arrays.features, in_group1, k)
    if full is None:
        raise NotEstimableError(f"'{metric_id.value}' is not estimable on the full sample")

    n = dataset.n_records
    children = np.random.SeedSequence(seed).spawn(replicates)

    def replicate(child: np.random.SeedSequence) -> Optional[float]:
        idx = np.random.default_rng(child).integers(0, n, size=n)
        return metrics.point_from_arrays(
            metric_id,
            arrays.truth[idx],
            arrays.prediction[idx],
            arrays.features[idx],
            None if in_group1 is None else in_group1[idx],
            k,
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            values: List[Optional[float]] = list(pool.map(replicate, children))
    else:
        values = [replicate(child) for child in children]

    kept = np.array([v for v in values if v is not None], dtype=np.float64)
    dropped = replicates - kept.size
    if dropped * 2 > replicates:
        raise NotEstimableError(
            f"'{metric_id.value}' was not estimable in {dropped} of {replicates} bootstrap replicates"
        )
    if dropped:
        logger.warning(f"Dropped {dropped} of {replicates} bootstrap replicates for '{metric_id.value}'")

    lower, upper = np.quantile(kept, [effective / 2.0, 1.0 - effective / 2.0])
    return ConfidenceInterval(
        lower=float(lower),
        upper=float(max(lower, upper)),
        alpha=effective,
        family_alpha=family,
        correction=correction,
        tests=tests,
        method="bootstrap",
        replicates=replicates,
        dropped_replicates=dropped,
    )


def coverage_simulation(
    p1: float,
    p2: float,
    n1: int,
    n2: int,
    alpha: float,
    trials: int = 10000,
    seed: int = 0,
) -> CoverageResult:
    """
    Monte Carlo coverage of the Wald interval for p1 - p2.

    Args:
        p1, p2: True proportions
        n1, n2: Group sample sizes
        alpha: Level of each interval
        trials: Number of simulated sample pairs (at least 1000)
        seed: Seed of the simulation

    Returns:
        CoverageResult with the fraction of intervals containing p1 - p2
    """
    _check_proportion("p1", p1)
    _check_proportion("p2", p2)
    _check_count("n1", n1)
    _check_count("n2", n2)
    _check_alpha(alpha)
    if trials < MIN_COVERAGE_TRIALS:
        raise InvalidParameterError(f"trials must be at least {MIN_COVERAGE_TRIALS}, got {trials}")

    rng = np.random.default_rng(seed)
    phat1 = rng.binomial(n1, p1, size=trials) / n1
    phat2 = rng.binomial(n2, p2, size=trials) / n2
    center = phat1 - phat2
    half = wald_half_width(phat1, n1, phat2, n2, z_value(alpha))
    truth = p1 - p2
    covered = int(np.count_nonzero((center - half <= truth) & (truth <= center + half)))

    result = CoverageResult(
        nominal=1.0 - alpha,
        empirical=covered / trials,
        trials=trials,
        covered=covered,
        config={"p1": p1, "p2": p2, "n1": n1, "n2": n2, "alpha": alpha, "seed": seed},
    )
    logger.info(f"Wald coverage {result.empirical:.4f} at nominal {result.nominal:.4f} over {trials} trials")
    return result


def familywise_error_simulation(
    p: float,
    n1: int,
    n2: int,
    alpha: float,
    tests: int,
    trials: int = 1000,
    seed: int = 0,
) -> FamilywiseErrorResult:
    """
    Probability of at least one false discovery among `tests` true-null comparisons.

    Args:
        p: Common true proportion of both groups
        n1, n2: Group sample sizes
        alpha: Family level
        tests: Number of simultaneous comparisons
        trials: Number of simulated families
        seed: Seed of the simulation

    Returns:
        FamilywiseErrorResult with corrected and uncorrected family-wise error
    """
    _check_proportion("p", p)
    _check_count("n1", n1)
    _check_count("n2", n2)
    _check_count("tests", tests)
    _check_count("trials", trials)
    corrected = bonferroni(alpha, tests)

    rng = np.random.default_rng(seed)
    phat1 = rng.binomial(n1, p, size=(trials, tests)) / n1
    phat2 = rng.binomial(n2, p, size=(trials, tests)) / n2
    center = phat1 - phat2

    def any_rejection(level: float) -> float:
        half = wald_half_width(phat1, n1, phat2, n2, z_value(level))
        rejected = (center - half > 0) | (center + half < 0)
        return float(rejected.any(axis=1).mean())

    return FamilywiseErrorResult(
        alpha=alpha,
        corrected_alpha=corrected,
        tests=tests,
        trials=trials,
        familywise_error=any_rejection(corrected),
        uncorrected_familywise_error=any_rejection(alpha),
        config={"p": p, "n1": n1, "n2": n2, "seed": seed},
    )
