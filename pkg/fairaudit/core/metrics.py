import logging
from typing import Callable, Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.special import xlogy

from fairaudit.exceptions import InvalidParameterError, NotEstimableError, SchemaError
from fairaudit.models.schemas import (
    BinomialPair,
    ConfusionCounts,
    Dataset,
    GroupedConfusion,
    MetricEstimate,
    MetricId,
)

logger = logging.getLogger(__name__)

# Above this many records the neighbour search switches from a dense distance matrix to a KD-tree
BRUTE_FORCE_LIMIT = 2048


class Tally(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class _Component(NamedTuple):
    numerator: Callable[[Tally], int]
    denominator: Callable[[Tally], int]
    missing: str


# Per-group proportion of each binomial metric; the difference is group 0 minus group 1
_COMPONENTS: Dict[MetricId, _Component] = {
    MetricId.STATISTICAL_PARITY: _Component(lambda c: c.tp + c.fp, lambda c: c.total, "no records"),
    MetricId.BASE_RATE: _Component(lambda c: c.tp + c.fn, lambda c: c.total, "no records"),
    MetricId.EQUAL_OPPORTUNITY: _Component(lambda c: c.tp, lambda c: c.tp + c.fn, "no actual positives"),
    MetricId.FALSE_POSITIVE_RATE: _Component(lambda c: c.fp, lambda c: c.fp + c.tn, "no actual negatives"),
    MetricId.TRUE_NEGATIVE_RATE: _Component(lambda c: c.tn, lambda c: c.tn + c.fp, "no actual negatives"),
    MetricId.FALSE_OMISSION_RATE: _Component(lambda c: c.fn, lambda c: c.fn + c.tn, "no predicted negatives"),
    MetricId.PREDICTIVE_PARITY: _Component(lambda c: c.tp, lambda c: c.tp + c.fp, "no predicted positives"),
    MetricId.ERROR_RATE: _Component(lambda c: c.fp + c.fn, lambda c: c.total, "no records"),
}

# Metrics where a larger per-group value is the advantageous outcome for that group
HIGHER_IS_FAVORABLE = {
    MetricId.STATISTICAL_PARITY,
    MetricId.BASE_RATE,
    MetricId.EQUAL_OPPORTUNITY,
    MetricId.TRUE_NEGATIVE_RATE,
    MetricId.PREDICTIVE_PARITY,
    MetricId.AVERAGE_ODDS,
    MetricId.CONSISTENCY,
}


def tally(truth: np.ndarray, prediction: np.ndarray) -> Tally:
    """Confusion counts of aligned label and prediction arrays."""
    truth = truth.astype(bool)
    prediction = prediction.astype(bool)
    tp = int(np.count_nonzero(truth & prediction))
    fp = int(np.count_nonzero(~truth & prediction))
    tn = int(np.count_nonzero(~truth & ~prediction))
    fn = int(np.count_nonzero(truth & ~prediction))
    return Tally(tp, fp, tn, fn)


def _require_predictions(dataset: Dataset) -> np.ndarray:
    prediction = dataset.arrays.prediction
    if prediction is None:
        raise SchemaError("Dataset has no predictions; supply a prediction column or a model")
    return prediction


def confusion_by_group(dataset: Dataset, attribute: str) -> GroupedConfusion:
    """
    Partition the confusion matrix by the value of one attribute.

    Args:
        dataset: Dataset with predictions
        attribute: Attribute identifier

    Returns:
        GroupedConfusion with group0 (value 0) and group1 (value 1) counts
    """
    column = dataset.arrays.attributes[:, dataset.attribute_index(attribute)]
    prediction = _require_predictions(dataset)
    truth = dataset.arrays.truth
    in_group1 = column == 1
    c0 = tally(truth[~in_group1], prediction[~in_group1])
    c1 = tally(truth[in_group1], prediction[in_group1])
    if c0.total + c1.total != dataset.n_records:
        raise RuntimeError(f"Confusion counts for '{attribute}' do not add up to the record count")
    return GroupedConfusion(
        attribute=attribute,
        group0=ConfusionCounts(**c0._asdict()),
        group1=ConfusionCounts(**c1._asdict()),
    )


def _proportion(component: _Component, counts: Tally, group: int) -> Tuple[Optional[float], int, Optional[str]]:
    denominator = component.denominator(counts)
    if denominator == 0:
        return None, 0, f"{component.missing} in group {group}"
    return component.numerator(counts) / denominator, denominator, None


def _evaluate(metric_id: MetricId, c0: Tally, c1: Tally) -> Dict:
    """Point estimate and components as plain values; shared by group_metric and the bootstrap."""
    if metric_id == MetricId.AVERAGE_ODDS:
        tpr = _COMPONENTS[MetricId.EQUAL_OPPORTUNITY]
        fpr = _COMPONENTS[MetricId.FALSE_POSITIVE_RATE]
        parts = [_proportion(tpr, c0, 0), _proportion(tpr, c1, 1), _proportion(fpr, c0, 0), _proportion(fpr, c1, 1)]
        reasons = [reason for _, _, reason in parts if reason]
        if reasons:
            return {"estimable": False, "reason": "; ".join(reasons)}
        (t0, nt0, _), (t1, nt1, _), (f0, nf0, _), (f1, nf1, _) = parts
        return {
            "point": 0.5 * ((f0 - f1) + (t0 - t1)),
            "p0": t0, "n0": nt0, "p1": t1, "n1": nt1,
            "secondary": {"p0": f0, "n0": nf0, "p1": f1, "n1": nf1},
        }
    try:
        component = _COMPONENTS[metric_id]
    except KeyError:
        raise InvalidParameterError(f"'{metric_id.value}' is not a group-difference metric")
    p0, n0, reason0 = _proportion(component, c0, 0)
    p1, n1, reason1 = _proportion(component, c1, 1)
    if reason0 or reason1:
        return {"estimable": False, "reason": "; ".join(r for r in (reason0, reason1) if r)}
    return {"point": p0 - p1, "p0": p0, "n0": n0, "p1": p1, "n1": n1}


def group_metric(gc: GroupedConfusion, metric_id: MetricId) -> MetricEstimate:
    """
    Difference (group 0 minus group 1) of one group fairness metric.

    Args:
        gc: Grouped confusion counts of one attribute
        metric_id: One of the nine group metrics

    Returns:
        MetricEstimate; estimable is False with a reason when a denominator is zero
    """
    metric_id = MetricId(metric_id)
    c0 = Tally(gc.group0.tp, gc.group0.fp, gc.group0.tn, gc.group0.fn)
    c1 = Tally(gc.group1.tp, gc.group1.fp, gc.group1.tn, gc.group1.fn)
    values = _evaluate(metric_id, c0, c1)
    secondary = values.pop("secondary", None)
    return MetricEstimate(
        metric_id=metric_id,
        secondary=BinomialPair(**secondary) if secondary else None,
        **values,
    )


class GroupMetricArrays(NamedTuple):
    """One group metric evaluated for many attributes at once; non-estimable entries hold zeros."""

    metric_id: MetricId
    point: np.ndarray
    p0: np.ndarray
    n0: np.ndarray
    p1: np.ndarray
    n1: np.ndarray
    estimable: np.ndarray
    # FPR components (p0, n0, p1, n1) of average odds
    secondary: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = None

    def estimate(self, i: int) -> MetricEstimate:
        """The MetricEstimate of entry i, which must be estimable."""
        secondary = None
        if self.secondary is not None:
            f0, nf0, f1, nf1 = self.secondary
            secondary = BinomialPair(p0=float(f0[i]), n0=int(nf0[i]), p1=float(f1[i]), n1=int(nf1[i]))
        return MetricEstimate(
            metric_id=self.metric_id,
            point=float(self.point[i]),
            p0=float(self.p0[i]),
            n0=int(self.n0[i]),
            p1=float(self.p1[i]),
            n1=int(self.n1[i]),
            secondary=secondary,
        )


def grouped_tallies(dataset: Dataset, attributes: Sequence[str]) -> Tuple[Tally, Tally]:
    """
    Confusion counts of both groups for many attributes in one matrix product.

    Args:
        dataset: Dataset with predictions
        attributes: Attribute identifiers

    Returns:
        (group 0, group 1) tallies whose fields are arrays with one entry per attribute
    """
    truth = dataset.arrays.truth.astype(bool)
    prediction = _require_predictions(dataset).astype(bool)
    columns = [dataset.attribute_index(attribute) for attribute in attributes]
    membership = dataset.arrays.attributes[:, columns]
    cells = np.stack([
        truth & prediction,
        ~truth & prediction,
        ~truth & ~prediction,
        truth & ~prediction,
    ]).astype(np.int64)
    in_group1 = cells @ membership
    in_group0 = cells.sum(axis=1, keepdims=True) - in_group1
    return Tally(*in_group0), Tally(*in_group1)


def _proportion_arrays(component: _Component, counts: Tally) -> Tuple[np.ndarray, np.ndarray]:
    denominator = np.asarray(component.denominator(counts), dtype=np.int64)
    numerator = np.asarray(component.numerator(counts), dtype=np.int64)
    p = np.divide(numerator, denominator, out=np.zeros(denominator.shape), where=denominator > 0)
    return p, denominator


def group_metric_arrays(metric_id: MetricId, c0: Tally, c1: Tally) -> GroupMetricArrays:
    """
    Array counterpart of group_metric over tallies from grouped_tallies.

    Args:
        metric_id: One of the nine group metrics
        c0: Group 0 tallies
        c1: Group 1 tallies

    Returns:
        GroupMetricArrays; estimable is False wherever a required denominator is zero
    """
    metric_id = MetricId(metric_id)
    if metric_id == MetricId.AVERAGE_ODDS:
        t0, nt0 = _proportion_arrays(_COMPONENTS[MetricId.EQUAL_OPPORTUNITY], c0)
        t1, nt1 = _proportion_arrays(_COMPONENTS[MetricId.EQUAL_OPPORTUNITY], c1)
        f0, nf0 = _proportion_arrays(_COMPONENTS[MetricId.FALSE_POSITIVE_RATE], c0)
        f1, nf1 = _proportion_arrays(_COMPONENTS[MetricId.FALSE_POSITIVE_RATE], c1)
        return GroupMetricArrays(
            metric_id=metric_id,
            point=0.5 * ((f0 - f1) + (t0 - t1)),
            p0=t0, n0=nt0, p1=t1, n1=nt1,
            estimable=(nt0 > 0) & (nt1 > 0) & (nf0 > 0) & (nf1 > 0),
            secondary=(f0, nf0, f1, nf1),
        )
    try:
        component = _COMPONENTS[metric_id]
    except KeyError:
        raise InvalidParameterError(f"'{metric_id.value}' is not a group-difference metric")
    p0, n0 = _proportion_arrays(component, c0)
    p1, n1 = _proportion_arrays(component, c1)
    return GroupMetricArrays(
        metric_id=metric_id,
        point=p0 - p1,
        p0=p0, n0=n0, p1=p1, n1=n1,
        estimable=(n0 > 0) & (n1 > 0),
    )


def favored_group(metric_id: MetricId, point: float) -> str:
    """Which group a point estimate favors: 'group0', 'group1' or 'neutral'."""
    if point == 0:
        return "neutral"
    group0_higher = point > 0
    if group0_higher == (metric_id in HIGHER_IS_FAVORABLE):
        return "group0"
    return "group1"


# ---------------------------------------------------------------------------
# Individual metrics
# ---------------------------------------------------------------------------

def theil_from_arrays(truth: np.ndarray, prediction: np.ndarray) -> float:
    """Generalized entropy index (alpha = 1) of the benefits b = yhat - y + 1."""
    benefits = prediction.astype(np.float64) - truth.astype(np.float64) + 1.0
    mu = benefits.mean()
    if mu <= 0:
        raise NotEstimableError("mean benefit is zero (every record has y=1 and yhat=0)")
    ratio = benefits / mu
    # xlogy(0, 0) == 0 carries the 0 * ln 0 convention
    return float(np.mean(xlogy(ratio, ratio)))


def theil_index(dataset: Dataset) -> float:
    """
    Theil index of the dataset's per-record benefits.

    Args:
        dataset: Dataset with predictions

    Returns:
        Non-negative index; 0 when every record receives the same benefit
    """
    return theil_from_arrays(dataset.arrays.truth, _require_predictions(dataset))


def neighbor_indices(features: np.ndarray, k: int) -> np.ndarray:
    """
    Indices of the k nearest neighbours of every row, excluding the row itself.

    Distance is Euclidean on the raw features; ties go to the lower record index.

    Args:
        features: n x f feature matrix
        k: Number of neighbours, 1 <= k < n

    Returns:
        n x k integer array
    """
    n = features.shape[0]
    if k < 1:
        raise InvalidParameterError(f"k must be at least 1, got {k}")
    if k >= n:
        raise InvalidParameterError(f"k={k} needs at least {k + 1} records, got {n}")

    if n <= BRUTE_FORCE_LIMIT:
        distances = cdist(features, features)
        np.fill_diagonal(distances, np.inf)
        # Stable sort over ascending column indices breaks ties by record index
        return np.argsort(distances, axis=1, kind="stable")[:, :k]

    tree = cKDTree(features)
    kth, _ = tree.query(features, k=k + 1)
    result = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        radius = kth[i, -1]
        candidates = np.array(tree.query_ball_point(features[i], r=radius * (1 + 1e-9) + 1e-12), dtype=np.int64)
        candidates = candidates[candidates != i]
        distances = np.linalg.norm(features[candidates] - features[i], axis=1)
        order = np.lexsort((candidates, distances))
        result[i] = candidates[order[:k]]
    return result


def consistency_scores_from_arrays(prediction: np.ndarray, features: np.ndarray, k: int) -> np.ndarray:
    if features.shape[1] == 0:
        raise NotEstimableError("consistency needs at least one feature")
    neighbors = neighbor_indices(features, k)
    prediction = prediction.astype(np.float64)
    return 1.0 - np.abs(prediction - prediction[neighbors].mean(axis=1))


def individual_consistency(dataset: Dataset, k: int = 5) -> np.ndarray:
    """
    Per-record consistency: 1 - |yhat_i - mean yhat of its k nearest neighbours|.

    Args:
        dataset: Dataset with predictions and at least one feature
        k: Neighbour count

    Returns:
        Array of n scores in [0, 1]
    """
    return consistency_scores_from_arrays(_require_predictions(dataset), dataset.arrays.features, k)


def consistency(dataset: Dataset, k: int = 5) -> float:
    """
    Consistency of predictions among feature-space neighbours.

    Args:
        dataset: Dataset with predictions and at least one feature
        k: Neighbour count

    Returns:
        Mean individual consistency in [0, 1]
    """
    return float(individual_consistency(dataset, k).mean())


def _individual_group_values(
    metric_id: MetricId,
    truth: np.ndarray,
    prediction: np.ndarray,
    features: np.ndarray,
    in_group1: np.ndarray,
    k: int,
) -> Tuple[float, float]:
    if not (~in_group1).any():
        raise NotEstimableError("group 0 is empty")
    if not in_group1.any():
        raise NotEstimableError("group 1 is empty")
    if metric_id == MetricId.THEIL:
        try:
            v0 = theil_from_arrays(truth[~in_group1], prediction[~in_group1])
        except NotEstimableError as e:
            raise NotEstimableError(f"{e.reason} in group 0")
        try:
            v1 = theil_from_arrays(truth[in_group1], prediction[in_group1])
        except NotEstimableError as e:
            raise NotEstimableError(f"{e.reason} in group 1")
        return v0, v1
    if metric_id == MetricId.CONSISTENCY:
        scores = consistency_scores_from_arrays(prediction, features, k)
        return float(scores[~in_group1].mean()), float(scores[in_group1].mean())
    raise InvalidParameterError(f"'{metric_id.value}' is not an individual metric")


def individual_group_difference(dataset: Dataset, attribute: str, metric_id: MetricId, k: int = 5) -> MetricEstimate:
    """
    Difference (group 0 minus group 1) of an individual metric within the two groups.

    Theil is computed over each group's own records; consistency averages the
    per-record scores of each group with neighbours drawn from the whole dataset.

    Args:
        dataset: Dataset with predictions
        attribute: Attribute identifier
        metric_id: theil or consistency
        k: Neighbour count for consistency

    Returns:
        MetricEstimate with value0/value1 set, or not estimable with a reason
    """
    metric_id = MetricId(metric_id)
    arrays = dataset.arrays
    in_group1 = arrays.attributes[:, dataset.attribute_index(attribute)] == 1
    try:
        v0, v1 = _individual_group_values(
            metric_id, arrays.truth, _require_predictions(dataset), arrays.features, in_group1, k
        )
    except NotEstimableError as e:
        return MetricEstimate(metric_id=metric_id, estimable=False, reason=e.reason)
    return MetricEstimate(metric_id=metric_id, point=v0 - v1, value0=v0, value1=v1)


def point_from_arrays(
    metric_id: MetricId,
    truth: np.ndarray,
    prediction: np.ndarray,
    features: np.ndarray,
    in_group1: Optional[np.ndarray],
    k: int = 5,
) -> Optional[float]:
    """
    Point value of any metric on raw arrays, None when not estimable.

    With in_group1 given the result is a group difference; without it only the
    dataset-level individual metrics are defined.
    """
    try:
        if metric_id.is_group_metric:
            if in_group1 is None:
                raise InvalidParameterError(f"'{metric_id.value}' needs an attribute")
            c0 = tally(truth[~in_group1], prediction[~in_group1])
            c1 = tally(truth[in_group1], prediction[in_group1])
            return _evaluate(metric_id, c0, c1).get("point")
        if in_group1 is not None:
            v0, v1 = _individual_group_values(metric_id, truth, prediction, features, in_group1, k)
            return v0 - v1
        if metric_id == MetricId.THEIL:
            return theil_from_arrays(truth, prediction)
        return float(consistency_scores_from_arrays(prediction, features, k).mean())
    except NotEstimableError:
        return None
