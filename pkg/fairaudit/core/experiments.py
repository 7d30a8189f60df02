import logging
from typing import Iterable

import numpy as np

from fairaudit.core.auditor import intra_scan
from fairaudit.core.data import generate_synthetic
from fairaudit.exceptions import InvalidParameterError
from fairaudit.models.schemas import MetricId, NullModelResult, SyntheticConfig

logger = logging.getLogger(__name__)


def null_model_experiment(
    config: SyntheticConfig,
    metric_id: MetricId,
    alpha: float,
    seeds: Iterable[int],
) -> NullModelResult:
    """
    Repeat generate -> intra-metric scan (array form) on attributes that carry no real effect.

    Every attribute is independent noise, so each uncorrected rejection is a
    false positive. The first attribute is excluded from the scan when the
    configuration sets an accuracy gap on it.

    Args:
        config: Synthetic-data parameters; its seed is replaced by each entry of seeds
        metric_id: Group metric to scan
        alpha: Family level
        seeds: Generation seeds, one dataset each

    Returns:
        NullModelResult with per-seed counts, the mean uncorrected flagged fraction
        and the share of seeds with at least one corrected (or uncorrected) hit
    """
    seeds = list(seeds)
    if not seeds:
        raise InvalidParameterError("null-model experiment needs at least one seed")

    flagged_uncorrected, flagged_corrected, tests = [], [], []
    for seed in seeds:
        dataset = generate_synthetic(config.model_copy(update={"seed": seed}))
        attributes = dataset.attribute_names
        if config.accuracy_group0 != config.accuracy_group1:
            attributes = attributes[1:]
        if not attributes:
            raise InvalidParameterError("no null attribute left to scan")
        scan = intra_scan(dataset, metric_id, attributes, alpha)
        flagged_uncorrected.append(int(np.count_nonzero(scan.significant_uncorrected)))
        flagged_corrected.append(int(np.count_nonzero(scan.significant_corrected)))
        tests.append(scan.tests)
        logger.debug(
            f"Seed {seed}: {flagged_uncorrected[-1]} uncorrected / {flagged_corrected[-1]} corrected of {scan.tests}"
        )

    flagged_u = np.asarray(flagged_uncorrected, dtype=np.float64)
    flagged_c = np.asarray(flagged_corrected, dtype=np.float64)
    result = NullModelResult(
        metric_id=metric_id,
        alpha=alpha,
        seeds=seeds,
        flagged_uncorrected=flagged_uncorrected,
        flagged_corrected=flagged_corrected,
        tests=tests,
        mean_flagged_fraction=float(np.mean(flagged_u / np.asarray(tests, dtype=np.float64))),
        familywise_hit_rate=float(np.mean(flagged_c > 0)),
        uncorrected_familywise_hit_rate=float(np.mean(flagged_u > 0)),
    )
    logger.info(
        f"Null model over {len(seeds)} seeds: mean flagged fraction {result.mean_flagged_fraction:.4f}, "
        f"corrected family-wise hit rate {result.familywise_hit_rate:.4f}"
    )
    return result
