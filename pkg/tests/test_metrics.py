import math

import numpy as np
import pytest

from fairaudit.core import metrics
from fairaudit.exceptions import InvalidParameterError, NotEstimableError, SchemaError
from fairaudit.core.data import generate_synthetic
from fairaudit.models.schemas import GROUP_METRICS, MetricId, SyntheticConfig


def counting_oracle(truth, prediction, group, metric_id):
    """Per-record loop counting; returns the difference or None when a denominator is zero."""
    counts = {0: dict(tp=0, fp=0, tn=0, fn=0), 1: dict(tp=0, fp=0, tn=0, fn=0)}
    for y, yhat, g in zip(truth, prediction, group):
        key = ("t" if y == yhat else "f") + ("p" if yhat == 1 else "n")
        counts[int(g)][key] += 1

    def rate(c, metric):
        if metric == "sp":
            num, den = c["tp"] + c["fp"], sum(c.values())
        elif metric == "br":
            num, den = c["tp"] + c["fn"], sum(c.values())
        elif metric == "tpr":
            num, den = c["tp"], c["tp"] + c["fn"]
        elif metric == "fpr":
            num, den = c["fp"], c["fp"] + c["tn"]
        elif metric == "tnr":
            num, den = c["tn"], c["tn"] + c["fp"]
        elif metric == "for":
            num, den = c["fn"], c["fn"] + c["tn"]
        elif metric == "ppv":
            num, den = c["tp"], c["tp"] + c["fp"]
        else:
            num, den = c["fp"] + c["fn"], sum(c.values())
        return None if den == 0 else num / den

    short = {
        MetricId.STATISTICAL_PARITY: "sp",
        MetricId.BASE_RATE: "br",
        MetricId.EQUAL_OPPORTUNITY: "tpr",
        MetricId.FALSE_POSITIVE_RATE: "fpr",
        MetricId.TRUE_NEGATIVE_RATE: "tnr",
        MetricId.FALSE_OMISSION_RATE: "for",
        MetricId.PREDICTIVE_PARITY: "ppv",
        MetricId.ERROR_RATE: "er",
    }
    if metric_id == MetricId.AVERAGE_ODDS:
        t0, t1 = rate(counts[0], "tpr"), rate(counts[1], "tpr")
        f0, f1 = rate(counts[0], "fpr"), rate(counts[1], "fpr")
        if None in (t0, t1, f0, f1):
            return None
        return 0.5 * ((f0 - f1) + (t0 - t1))
    r0, r1 = rate(counts[0], short[metric_id]), rate(counts[1], short[metric_id])
    if r0 is None or r1 is None:
        return None
    return r0 - r1


def test_group_metrics_match_counting_oracle(dataset_factory):
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 51))
        truth = rng.integers(0, 2, n)
        prediction = rng.integers(0, 2, n)
        group = rng.integers(0, 2, n)
        dataset = dataset_factory(truth, prediction, group)
        gc = metrics.confusion_by_group(dataset, "a0")
        for metric_id in GROUP_METRICS:
            expected = counting_oracle(truth, prediction, group, metric_id)
            estimate = metrics.group_metric(gc, metric_id)
            if expected is None:
                assert not estimate.estimable
                assert estimate.reason
            else:
                assert estimate.estimable
                assert estimate.point == expected
                assert -1.0 <= estimate.point <= 1.0


def test_array_metrics_match_per_attribute_metrics(dataset_factory):
    rng = np.random.default_rng(12)
    for _ in range(50):
        n = int(rng.integers(2, 40))
        dataset = dataset_factory(rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 2, (n, 4)))
        c0, c1 = metrics.grouped_tallies(dataset, dataset.attribute_names)
        for metric_id in GROUP_METRICS:
            values = metrics.group_metric_arrays(metric_id, c0, c1)
            for i, attribute in enumerate(dataset.attribute_names):
                estimate = metrics.group_metric(metrics.confusion_by_group(dataset, attribute), metric_id)
                assert bool(values.estimable[i]) == estimate.estimable
                if estimate.estimable:
                    assert values.estimate(i).model_dump() == estimate.model_dump()


@pytest.mark.slow
def test_flip_model_leaves_parity_base_rate_and_average_odds_unbiased():
    differences = {MetricId.STATISTICAL_PARITY: [], MetricId.BASE_RATE: [], MetricId.AVERAGE_ODDS: []}
    for seed in range(100):
        config = SyntheticConfig(
            n_participants=10000, n_attributes=1, accuracy_group0=0.95, accuracy_group1=0.25,
            gaussian_feature=False, seed=seed,
        )
        gc = metrics.confusion_by_group(generate_synthetic(config), "attr_0")
        for metric_id, points in differences.items():
            points.append(metrics.group_metric(gc, metric_id).point)
    for points in differences.values():
        assert abs(np.mean(points)) < 0.01


def test_flip_model_error_rate_difference_tracks_accuracy_gap(accuracy_gap):
    gc = metrics.confusion_by_group(accuracy_gap, "attr_0")
    point = metrics.group_metric(gc, MetricId.ERROR_RATE).point
    assert point == pytest.approx(0.25 - 0.95, abs=0.02)


def test_theil_is_invariant_to_record_order(dataset_factory):
    rng = np.random.default_rng(5)
    n = 300
    dataset = dataset_factory(rng.integers(0, 2, n), rng.integers(0, 2, n), rng.integers(0, 2, n))
    shuffled = dataset.subset(rng.permutation(n))
    assert metrics.theil_index(shuffled) == pytest.approx(metrics.theil_index(dataset), rel=1e-12)


def test_relabeling_groups_negates_every_point():
    rng = np.random.default_rng(7)
    from fairaudit.models.schemas import ConfusionCounts, GroupedConfusion

    for _ in range(200):
        c0 = ConfusionCounts(**{k: int(v) for k, v in zip("tp fp tn fn".split(), rng.integers(1, 30, 4))})
        c1 = ConfusionCounts(**{k: int(v) for k, v in zip("tp fp tn fn".split(), rng.integers(1, 30, 4))})
        gc = GroupedConfusion(attribute="a", group0=c0, group1=c1)
        for metric_id in GROUP_METRICS:
            forward = metrics.group_metric(gc, metric_id).point
            backward = metrics.group_metric(gc.relabeled(), metric_id).point
            assert backward == pytest.approx(-forward, abs=1e-15)


def test_confusion_counts_add_up(dataset_factory):
    dataset = dataset_factory([1, 1, 0, 0, 1], [1, 0, 1, 0, 1], [0, 0, 1, 1, 1])
    gc = metrics.confusion_by_group(dataset, "a0")
    assert (gc.group0.tp, gc.group0.fn) == (1, 1)
    assert (gc.group1.tp, gc.group1.fp, gc.group1.tn) == (1, 1, 1)
    assert gc.group0.total + gc.group1.total == 5


def test_empty_group_is_not_estimable(dataset_factory):
    dataset = dataset_factory([1, 0, 1], [1, 0, 0], [0, 0, 0])
    estimate = metrics.group_metric(metrics.confusion_by_group(dataset, "a0"), MetricId.STATISTICAL_PARITY)
    assert not estimate.estimable
    assert "group 1" in estimate.reason


def test_no_actual_positives_reason(dataset_factory):
    dataset = dataset_factory([0, 0, 1, 1], [0, 1, 1, 0], [0, 0, 1, 1])
    estimate = metrics.group_metric(metrics.confusion_by_group(dataset, "a0"), MetricId.EQUAL_OPPORTUNITY)
    assert not estimate.estimable
    assert estimate.reason == "no actual positives in group 0"


def test_average_odds_components(dataset_factory):
    # group 0: TPR 1/2, FPR 1/2; group 1: TPR 1, FPR 0
    dataset = dataset_factory([1, 1, 0, 0, 1, 0], [1, 0, 1, 0, 1, 0], [0, 0, 0, 0, 1, 1])
    estimate = metrics.group_metric(metrics.confusion_by_group(dataset, "a0"), MetricId.AVERAGE_ODDS)
    assert estimate.point == pytest.approx(0.5 * ((0.5 - 0.0) + (0.5 - 1.0)))
    assert estimate.secondary.p0 == 0.5
    assert estimate.secondary.p1 == 0.0
    assert set(estimate.model_dump()) == {
        "metric_id", "point", "p0", "n0", "p1", "n1", "secondary", "value0", "value1", "estimable", "reason",
    }
    assert not hasattr(estimate, "primary")


def test_missing_predictions_raise(dataset_factory):
    dataset = dataset_factory([1, 0], None, [0, 1])
    with pytest.raises(SchemaError):
        metrics.confusion_by_group(dataset, "a0")


def test_unknown_attribute_raises(dataset_factory):
    dataset = dataset_factory([1, 0], [1, 0], [0, 1])
    with pytest.raises(SchemaError):
        metrics.confusion_by_group(dataset, "race")


@pytest.mark.parametrize(
    "metric_id, point, expected",
    [
        (MetricId.EQUAL_OPPORTUNITY, 0.2, "group0"),
        (MetricId.EQUAL_OPPORTUNITY, -0.2, "group1"),
        (MetricId.FALSE_POSITIVE_RATE, 0.2, "group1"),
        (MetricId.ERROR_RATE, -0.1, "group0"),
        (MetricId.STATISTICAL_PARITY, 0.0, "neutral"),
    ],
)
def test_favored_group(metric_id, point, expected):
    assert metrics.favored_group(metric_id, point) == expected


def theil_oracle(truth, prediction):
    benefits = [yhat - y + 1 for y, yhat in zip(truth, prediction)]
    mu = sum(benefits) / len(benefits)
    total = 0.0
    for b in benefits:
        if b > 0:
            total += (b / mu) * math.log(b / mu)
    return total / len(benefits)


def test_theil_matches_direct_formula(dataset_factory):
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(2, 60))
        truth = rng.integers(0, 2, n)
        prediction = rng.integers(0, 2, n)
        if np.all((truth == 1) & (prediction == 0)):
            continue
        dataset = dataset_factory(truth, prediction, np.zeros(n))
        assert metrics.theil_index(dataset) == pytest.approx(theil_oracle(truth, prediction), abs=1e-12)


def test_theil_is_zero_for_equal_benefits(dataset_factory):
    dataset = dataset_factory([1, 0, 1], [1, 0, 1], [0, 1, 0])
    assert metrics.theil_index(dataset) == 0.0


def test_theil_not_estimable_when_mean_benefit_is_zero(dataset_factory):
    dataset = dataset_factory([1, 1], [0, 0], [0, 1])
    with pytest.raises(NotEstimableError):
        metrics.theil_index(dataset)


def knn_oracle(features, prediction, k):
    n = len(features)
    scores = []
    for i in range(n):
        distances = []
        for j in range(n):
            if i == j:
                continue
            d = math.sqrt(sum((features[i][c] - features[j][c]) ** 2 for c in range(len(features[i]))))
            distances.append((d, j))
        distances.sort()
        neighbours = [j for _, j in distances[:k]]
        mean = sum(prediction[j] for j in neighbours) / k
        scores.append(1.0 - abs(prediction[i] - mean))
    return scores


def test_consistency_matches_brute_force_knn(dataset_factory):
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(10, 201))
        features = rng.integers(0, 6, size=(n, 2)).astype(float)
        prediction = rng.integers(0, 2, n)
        dataset = dataset_factory(rng.integers(0, 2, n), prediction, np.zeros(n), features=features)
        expected = knn_oracle(features.tolist(), prediction.tolist(), 5)
        assert metrics.individual_consistency(dataset, 5).tolist() == pytest.approx(expected, abs=1e-12)
        assert metrics.consistency(dataset, 5) == pytest.approx(float(np.mean(expected)), abs=1e-12)


def test_tree_neighbour_search_matches_dense_search():
    rng = np.random.default_rng(5)
    features = rng.integers(0, 8, size=(metrics.BRUTE_FORCE_LIMIT + 100, 2)).astype(float)
    from scipy.spatial.distance import cdist

    dense = cdist(features, features)
    np.fill_diagonal(dense, np.inf)
    expected = np.argsort(dense, axis=1, kind="stable")[:, :4]
    assert np.array_equal(metrics.neighbor_indices(features, 4), expected)


def test_consistency_requires_features(dataset_factory):
    dataset = dataset_factory([1, 0, 1], [1, 0, 1], [0, 1, 0])
    with pytest.raises(NotEstimableError):
        metrics.consistency(dataset, 1)


def test_consistency_rejects_k_too_large(dataset_factory):
    dataset = dataset_factory([1, 0, 1], [1, 0, 1], [0, 1, 0], features=[0.0, 1.0, 2.0])
    with pytest.raises(InvalidParameterError):
        metrics.consistency(dataset, 3)
    with pytest.raises(InvalidParameterError):
        metrics.consistency(dataset, 0)


def test_individual_group_difference(small_synthetic):
    arrays = small_synthetic.arrays
    group1 = arrays.attributes[:, 1] == 1

    theil = metrics.individual_group_difference(small_synthetic, "attr_1", MetricId.THEIL)
    assert theil.value0 == pytest.approx(metrics.theil_from_arrays(arrays.truth[~group1], arrays.prediction[~group1]))
    assert theil.value1 == pytest.approx(metrics.theil_from_arrays(arrays.truth[group1], arrays.prediction[group1]))
    assert theil.point == pytest.approx(theil.value0 - theil.value1)

    scores = metrics.individual_consistency(small_synthetic, 5)
    cons = metrics.individual_group_difference(small_synthetic, "attr_1", MetricId.CONSISTENCY, k=5)
    assert cons.value0 == pytest.approx(scores[~group1].mean())
    assert cons.value1 == pytest.approx(scores[group1].mean())


def test_individual_group_difference_empty_group(dataset_factory):
    dataset = dataset_factory([1, 0, 1], [1, 0, 1], [0, 0, 0], features=[0.0, 1.0, 2.0])
    estimate = metrics.individual_group_difference(dataset, "a0", MetricId.THEIL)
    assert not estimate.estimable
    assert estimate.reason == "group 1 is empty"
