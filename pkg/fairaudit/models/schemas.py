import math
from datetime import datetime
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing_extensions import Annotated, Literal

from fairaudit.exceptions import SchemaError

Binary = Annotated[int, Field(ge=0, le=1)]
Probability = Annotated[float, Field(ge=0.0, le=1.0)]
Level = Annotated[float, Field(gt=0.0, lt=1.0)]


class MetricId(str, Enum):
    """Stable metric identifiers used in reports and on the command line."""

    STATISTICAL_PARITY = "statistical_parity"
    BASE_RATE = "base_rate"
    EQUAL_OPPORTUNITY = "equal_opportunity"
    FALSE_POSITIVE_RATE = "false_positive_rate"
    TRUE_NEGATIVE_RATE = "true_negative_rate"
    FALSE_OMISSION_RATE = "false_omission_rate"
    PREDICTIVE_PARITY = "predictive_parity"
    ERROR_RATE = "error_rate"
    AVERAGE_ODDS = "average_odds"
    THEIL = "theil"
    CONSISTENCY = "consistency"

    @property
    def is_group_metric(self) -> bool:
        return self not in INDIVIDUAL_METRICS


GROUP_METRICS: List[MetricId] = [
    MetricId.STATISTICAL_PARITY,
    MetricId.BASE_RATE,
    MetricId.EQUAL_OPPORTUNITY,
    MetricId.FALSE_POSITIVE_RATE,
    MetricId.TRUE_NEGATIVE_RATE,
    MetricId.FALSE_OMISSION_RATE,
    MetricId.PREDICTIVE_PARITY,
    MetricId.ERROR_RATE,
    MetricId.AVERAGE_ODDS,
]
INDIVIDUAL_METRICS: List[MetricId] = [MetricId.THEIL, MetricId.CONSISTENCY]
ALL_METRICS: List[MetricId] = GROUP_METRICS + INDIVIDUAL_METRICS


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------

class Record(BaseModel):
    """One audited individual: label, prediction, binary attributes, features."""

    model_config = ConfigDict(frozen=True)

    truth: Binary
    prediction: Optional[Binary] = None
    attributes: List[Binary] = Field(default_factory=list)
    features: List[float] = Field(default_factory=list)


class DatasetArrays(NamedTuple):
    truth: np.ndarray
    prediction: Optional[np.ndarray]
    attributes: np.ndarray
    features: np.ndarray


class Dataset(BaseModel):
    """Immutable collection of records sharing one attribute and feature layout."""

    model_config = ConfigDict(frozen=True)

    records: List[Record] = Field(..., min_length=1)
    attribute_names: List[str] = Field(default_factory=list)
    feature_names: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_layout(self) -> "Dataset":
        if len(set(self.attribute_names)) != len(self.attribute_names):
            raise ValueError("attribute names must be unique")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        n_attributes = len(self.attribute_names)
        n_features = len(self.feature_names)
        with_prediction = sum(1 for r in self.records if r.prediction is not None)
        if with_prediction not in (0, len(self.records)):
            raise ValueError("either every record carries a prediction or none does")
        for i, record in enumerate(self.records):
            if len(record.attributes) != n_attributes:
                raise ValueError(f"record {i} has {len(record.attributes)} attributes, expected {n_attributes}")
            if len(record.features) != n_features:
                raise ValueError(f"record {i} has {len(record.features)} features, expected {n_features}")
        return self

    @classmethod
    def from_arrays(
        cls,
        truth: np.ndarray,
        prediction: Optional[np.ndarray],
        attributes: np.ndarray,
        attribute_names: List[str],
        features: Optional[np.ndarray] = None,
        feature_names: Optional[List[str]] = None,
    ) -> "Dataset":
        """
        Build a dataset from column arrays, validating with numpy instead of per cell.

        Args:
            truth: Length-n array of 0/1 labels
            prediction: Length-n array of 0/1 predictions, or None
            attributes: n x a array of 0/1 attribute values
            attribute_names: a attribute identifiers
            features: Optional n x f array of real features
            feature_names: f feature identifiers

        Returns:
            Dataset instance
        """
        truth = np.asarray(truth, dtype=np.int64).reshape(-1)
        n = truth.shape[0]
        if n < 1:
            raise ValueError("a dataset needs at least one record")
        attributes = np.asarray(attributes, dtype=np.int64)
        if attributes.size != n * len(attribute_names):
            raise ValueError("attribute matrix shape does not match records x attribute names")
        attributes = attributes.reshape(n, len(attribute_names))
        feature_names = list(feature_names or [])
        if features is None:
            features = np.zeros((n, 0), dtype=np.float64)
        features = np.asarray(features, dtype=np.float64)
        if features.size != n * len(feature_names):
            raise ValueError("feature matrix shape does not match records x feature names")
        features = features.reshape(n, len(feature_names))
        if len(set(attribute_names)) != len(attribute_names) or len(set(feature_names)) != len(feature_names):
            raise ValueError("column names must be unique")

        binary_columns = [truth, attributes.reshape(-1)]
        if prediction is not None:
            prediction = np.asarray(prediction, dtype=np.int64).reshape(-1)
            if prediction.shape[0] != n:
                raise ValueError("prediction length does not match truth length")
            binary_columns.append(prediction)
        for column in binary_columns:
            if column.size and not np.isin(column, (0, 1)).all():
                raise ValueError("labels, predictions and attributes must be 0 or 1")

        records = [
            Record.model_construct(
                truth=int(truth[i]),
                prediction=None if prediction is None else int(prediction[i]),
                attributes=attributes[i].tolist(),
                features=features[i].tolist(),
            )
            for i in range(n)
        ]
        dataset = cls.model_construct(
            records=records,
            attribute_names=list(attribute_names),
            feature_names=feature_names,
        )
        # Prime the cached `arrays` view with private copies of the validated columns
        dataset.__dict__["arrays"] = DatasetArrays(
            truth=truth.copy(),
            prediction=None if prediction is None else prediction.copy(),
            attributes=attributes.copy(),
            features=features.copy(),
        )
        return dataset

    def __eq__(self, other: object) -> bool:
        # Fields only; the cached numpy views in __dict__ have no truth value
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.records == other.records
            and self.attribute_names == other.attribute_names
            and self.feature_names == other.feature_names
        )

    __hash__ = None

    @property
    def n_records(self) -> int:
        return len(self.records)

    @property
    def has_predictions(self) -> bool:
        return self.records[0].prediction is not None

    @cached_property
    def arrays(self) -> DatasetArrays:
        n = len(self.records)
        truth = np.fromiter((r.truth for r in self.records), dtype=np.int64, count=n)
        prediction = None
        if self.has_predictions:
            prediction = np.fromiter((r.prediction for r in self.records), dtype=np.int64, count=n)
        attributes = np.array([r.attributes for r in self.records], dtype=np.int64).reshape(n, len(self.attribute_names))
        features = np.array([r.features for r in self.records], dtype=np.float64).reshape(n, len(self.feature_names))
        return DatasetArrays(truth=truth, prediction=prediction, attributes=attributes, features=features)

    def attribute_index(self, attribute: str) -> int:
        try:
            return self.attribute_names.index(attribute)
        except ValueError:
            raise SchemaError(f"Unknown attribute '{attribute}'")

    def subset(self, indices: np.ndarray) -> "Dataset":
        """Dataset restricted to the given record indices (in the given order)."""
        arrays = self.arrays
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset.from_arrays(
            truth=arrays.truth[indices],
            prediction=None if arrays.prediction is None else arrays.prediction[indices],
            attributes=arrays.attributes[indices],
            attribute_names=self.attribute_names,
            features=arrays.features[indices],
            feature_names=self.feature_names,
        )

    def with_predictions(self, prediction: np.ndarray) -> "Dataset":
        """Copy of the dataset with its prediction column replaced."""
        arrays = self.arrays
        return Dataset.from_arrays(
            truth=arrays.truth,
            prediction=prediction,
            attributes=arrays.attributes,
            attribute_names=self.attribute_names,
            features=arrays.features,
            feature_names=self.feature_names,
        )


class SyntheticConfig(BaseModel):
    """Parameters of the synthetic null-model and accuracy-gap datasets."""

    model_config = ConfigDict(frozen=True)

    n_participants: int = Field(100, ge=1)
    n_attributes: int = Field(1000, ge=1)
    base_rate: Probability = 0.5
    accuracy_group0: Probability = 0.75
    accuracy_group1: Probability = 0.75
    attribute_probability: Probability = 0.5
    gaussian_feature: bool = True
    seed: int = Field(0, ge=0, lt=2 ** 64)


class CsvSchema(BaseModel):
    """Column mapping for CSV ingestion."""

    model_config = ConfigDict(frozen=True)

    truth_column: str = "y_true"
    prediction_column: Optional[str] = "y_pred"
    attributes: Optional[List[str]] = None  # None means every remaining binary column
    features: List[str] = Field(default_factory=list)
    require_prediction: bool = True


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

class ConfusionCounts(BaseModel):
    """Confusion-matrix counts of one group."""

    model_config = ConfigDict(frozen=True)

    tp: int = Field(0, ge=0)
    fp: int = Field(0, ge=0)
    tn: int = Field(0, ge=0)
    fn: int = Field(0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class GroupedConfusion(BaseModel):
    """Confusion counts of both groups of one attribute."""

    model_config = ConfigDict(frozen=True)

    attribute: str
    group0: ConfusionCounts
    group1: ConfusionCounts

    def relabeled(self) -> "GroupedConfusion":
        """The same counts with the group coding swapped."""
        return GroupedConfusion(attribute=self.attribute, group0=self.group1, group1=self.group0)


class BinomialPair(BaseModel):
    """Per-group proportion and denominator of one binomial comparison."""

    model_config = ConfigDict(frozen=True)

    p0: Probability
    n0: int = Field(..., ge=1)
    p1: Probability
    n1: int = Field(..., ge=1)


class MetricEstimate(BaseModel):
    """Point estimate of one metric plus what its interval needs."""

    model_config = ConfigDict(frozen=True)

    metric_id: MetricId
    point: Optional[float] = None
    p0: Optional[Probability] = None
    n0: Optional[int] = None
    p1: Optional[Probability] = None
    n1: Optional[int] = None
    # FPR pair of average odds; the TPR pair sits in p0/n0/p1/n1
    secondary: Optional[BinomialPair] = None
    # Per-group index values for the individual metrics
    value0: Optional[float] = None
    value1: Optional[float] = None
    estimable: bool = True
    reason: Optional[str] = None

    @model_validator(mode="after")
    def _check_estimable(self) -> "MetricEstimate":
        if self.estimable:
            if self.point is None or not math.isfinite(self.point):
                raise ValueError("estimable metrics need a finite point estimate")
            if self.metric_id.is_group_metric:
                if None in (self.p0, self.n0, self.p1, self.n1):
                    raise ValueError("group metrics need both binomial components")
                if self.n0 < 1 or self.n1 < 1:
                    raise ValueError("binomial denominators must be at least 1")
        elif not self.reason:
            raise ValueError("not-estimable metrics need a reason")
        return self


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

class ConfidenceInterval(BaseModel):
    """Interval bounds together with the alpha, correction and method that produced them."""

    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    alpha: Level
    family_alpha: Level
    correction: Literal["none", "bonferroni"] = "none"
    tests: int = Field(1, ge=1)
    method: Literal["wald", "bootstrap"] = "wald"
    replicates: Optional[int] = None
    dropped_replicates: Optional[int] = None

    @model_validator(mode="after")
    def _check_bounds(self) -> "ConfidenceInterval":
        if self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
        if self.correction == "none" and self.tests != 1:
            raise ValueError("an uncorrected interval belongs to a single test")
        return self

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def excludes_zero(self) -> bool:
        return not self.contains(0.0)

    @property
    def half_width(self) -> float:
        return (self.upper - self.lower) / 2.0


class CoverageResult(BaseModel):
    """Outcome of a Monte Carlo coverage check of the Wald interval."""

    model_config = ConfigDict(frozen=True)

    nominal: Probability
    empirical: Probability
    trials: int = Field(..., ge=1)
    covered: int = Field(..., ge=0)
    config: Dict[str, Any] = Field(default_factory=dict)


class FamilywiseErrorResult(BaseModel):
    """Outcome of a Monte Carlo family-wise error simulation under the null."""

    model_config = ConfigDict(frozen=True)

    alpha: Level
    corrected_alpha: Level
    tests: int = Field(..., ge=1)
    trials: int = Field(..., ge=1)
    familywise_error: Probability
    uncorrected_familywise_error: Probability
    config: Dict[str, Any] = Field(default_factory=dict)


class NullModelResult(BaseModel):
    """Repeated intra-metric scans of datasets where no attribute carries a real effect."""

    model_config = ConfigDict(frozen=True)

    metric_id: MetricId
    alpha: Level
    seeds: List[int]
    flagged_uncorrected: List[int] = Field(default_factory=list)
    flagged_corrected: List[int] = Field(default_factory=list)
    tests: List[int] = Field(default_factory=list)
    mean_flagged_fraction: Probability = 0.0
    familywise_hit_rate: Probability = 0.0
    uncorrected_familywise_hit_rate: Probability = 0.0


# ---------------------------------------------------------------------------
# Classifier
# ---------------------------------------------------------------------------

class TrainingConfig(BaseModel):
    """Hyperparameters of full-batch gradient descent."""

    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(0.1, gt=0.0)
    epochs: int = Field(500, ge=0)
    l2: float = Field(1e-4, ge=0.0)
    seed: int = Field(0, ge=0)


class LogisticModel(BaseModel):
    """Trained logistic-regression weights."""

    model_config = ConfigDict(frozen=True)

    weights: List[float]
    bias: float = 0.0
    threshold: float = Field(0.5, gt=0.0, lt=1.0)
    feature_names: List[str] = Field(default_factory=list)

    @field_validator("weights")
    @classmethod
    def _finite_weights(cls, value: List[float]) -> List[float]:
        if not all(math.isfinite(w) for w in value):
            raise ValueError("weights must be finite")
        return value

    @field_validator("bias")
    @classmethod
    def _finite_bias(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("bias must be finite")
        return value

    @model_validator(mode="after")
    def _check_names(self) -> "LogisticModel":
        if self.feature_names and len(self.feature_names) != len(self.weights):
            raise ValueError("feature names must match the weight vector")
        return self


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------

class FlagKind(str, Enum):
    SIGNIFICANCE_LOST_UNDER_CORRECTION = "significance_lost_under_correction"
    SIGNIFICANCE_GAINED_WITHOUT_CORRECTION = "significance_gained_without_correction"
    METRIC_DISAGREEMENT = "metric_disagreement"
    UNDECLARED_ATTRIBUTE = "undeclared_attribute"
    UNDECLARED_METRIC = "undeclared_metric"
    BELOW_EFFECT_THRESHOLD = "below_effect_threshold"
    DECLARED_OMISSION = "declared_omission"


class HackingFlag(BaseModel):
    """A finding that points at a possible fairness-hacking pattern."""

    model_config = ConfigDict(frozen=True)

    kind: FlagKind
    subject: str
    attribute: Optional[str] = None
    metric_id: Optional[MetricId] = None
    alphas: List[float] = Field(default_factory=list)
    detail: str


class NotEstimableEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    attribute: Optional[str] = None
    metric_id: MetricId
    reason: str


class AuditRow(BaseModel):
    """One (attribute, metric) cell with its corrected interval."""

    model_config = ConfigDict(frozen=True)

    attribute: str
    metric_id: MetricId
    estimate: MetricEstimate
    interval_corrected: ConfidenceInterval
    significant_corrected: bool
    flags: List[HackingFlag] = Field(default_factory=list)


class IntraAuditRow(AuditRow):
    interval_uncorrected: ConfidenceInterval
    significant_uncorrected: bool


class InterAuditRow(AuditRow):
    direction: Literal["group0", "group1", "neutral"]


class IntraAuditResult(BaseModel):
    """One metric scanned over many attributes."""

    model_config = ConfigDict(frozen=True)

    metric_id: MetricId
    alpha: Level
    corrected_alpha: Level
    tests: int = Field(..., ge=1)
    rows: List[IntraAuditRow] = Field(default_factory=list)
    not_estimable: List[NotEstimableEntry] = Field(default_factory=list)
    significant_uncorrected: int = 0
    significant_corrected: int = 0
    flags: List[HackingFlag] = Field(default_factory=list)


class DirectionTally(BaseModel):
    model_config = ConfigDict(frozen=True)

    favors_group0: int = 0
    favors_group1: int = 0
    neutral: int = 0

    @property
    def total(self) -> int:
        return self.favors_group0 + self.favors_group1 + self.neutral


class InterAuditResult(BaseModel):
    """Many metrics evaluated on one attribute."""

    model_config = ConfigDict(frozen=True)

    attribute: str
    alpha: Level
    corrected_alpha: Level
    tests: int = Field(..., ge=1)
    rows: List[InterAuditRow] = Field(default_factory=list)
    not_estimable: List[NotEstimableEntry] = Field(default_factory=list)
    disagreement: bool = False
    tally: DirectionTally = Field(default_factory=DirectionTally)
    global_reason: Optional[str] = None
    flags: List[HackingFlag] = Field(default_factory=list)


class CombinedTable(BaseModel):
    """Every (attribute, metric) cell corrected over the whole table."""

    model_config = ConfigDict(frozen=True)

    alpha: Level
    corrected_alpha: Level
    tests: int = Field(..., ge=1)
    rows: List[AuditRow] = Field(default_factory=list)
    flags: List[HackingFlag] = Field(default_factory=list)


class IndividualMetricRow(BaseModel):
    """A dataset-level Theil or consistency value with its bootstrap interval."""

    model_config = ConfigDict(frozen=True)

    metric_id: MetricId
    value: Optional[float] = None
    interval: Optional[ConfidenceInterval] = None
    estimable: bool = True
    reason: Optional[str] = None
    k: Optional[int] = None


class IndividualScanResult(BaseModel):
    """Group differences of an individual metric across many attributes."""

    model_config = ConfigDict(frozen=True)

    metric_id: MetricId
    estimates: List[MetricEstimate] = Field(default_factory=list)
    attributes: List[str] = Field(default_factory=list)
    not_estimable: List[NotEstimableEntry] = Field(default_factory=list)


class QuadrantShares(BaseModel):
    """Percentage of attributes falling in each sign quadrant of two metric scans."""

    model_config = ConfigDict(frozen=True)

    x_metric: MetricId
    y_metric: MetricId
    attributes: int = 0
    upper_right: float = 0.0
    upper_left: float = 0.0
    lower_left: float = 0.0
    lower_right: float = 0.0
    on_axis: float = 0.0


class Manifest(BaseModel):
    """Pre-registered audit plan."""

    model_config = ConfigDict(frozen=True)

    attributes: List[str] = Field(..., min_length=1)
    metrics: List[MetricId] = Field(..., min_length=1)
    alpha: Level = 0.05
    effect_size_threshold: float = Field(0.0, ge=0.0)
    created_at: Optional[datetime] = None
    rationale: Dict[str, str] = Field(default_factory=dict)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

class AlphaProvenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: Level
    source: Literal["default", "environment", "cli", "manifest"]
    correction_scope: Literal["intra", "inter", "combined"] = "intra"
    intra_tests: Dict[str, int] = Field(default_factory=dict)
    inter_tests: Dict[str, int] = Field(default_factory=dict)
    combined_tests: int = 0


class ReportMetadata(BaseModel):
    model_config = ConfigDict(frozen=True)

    tool_version: str
    dataset_fingerprint: str
    n_records: int
    attributes: List[str] = Field(default_factory=list)
    metrics: List[MetricId] = Field(default_factory=list)
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seeds: Dict[str, int] = Field(default_factory=dict)
    alpha: AlphaProvenance


class AuditReport(BaseModel):
    """Everything one audit computed, in the order it was declared."""

    model_config = ConfigDict(frozen=True)

    metadata: ReportMetadata
    intra: List[IntraAuditResult] = Field(default_factory=list)
    inter: List[InterAuditResult] = Field(default_factory=list)
    combined: Optional[CombinedTable] = None
    individual: List[IndividualMetricRow] = Field(default_factory=list)
    individual_scans: List[IndividualScanResult] = Field(default_factory=list)
    quadrants: List[QuadrantShares] = Field(default_factory=list)
    flags: List[HackingFlag] = Field(default_factory=list)
    manifest_deviations: List[HackingFlag] = Field(default_factory=list)


class CliConfig(BaseModel):
    """Effective configuration of one command-line run."""

    model_config = ConfigDict(frozen=True)

    command: Literal["simulate", "audit", "train", "coverage"]
    seed: int
    seed_source: Literal["default", "environment", "cli"]
    options: Dict[str, Any] = Field(default_factory=dict)
