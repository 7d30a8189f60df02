import logging
from typing import List, Optional

import numpy as np
import pytest

from fairaudit.config import get_settings
from fairaudit.core.data import generate_synthetic
from fairaudit.models.schemas import Dataset, SyntheticConfig

ENV_VARS = [
    "FAIRAUDIT_SEED",
    "FAIRAUDIT_ALPHA",
    "FAIRAUDIT_BOOTSTRAP_REPLICATES",
    "FAIRAUDIT_CONSISTENCY_K",
    "FAIRAUDIT_LOG_LEVEL",
    "FAIRAUDIT_MAX_WORKERS",
    "FAIRAUDIT_MAX_FOREST_PLOTS",
]


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def restore_root_level():
    root = logging.getLogger()
    level = root.level
    yield
    root.setLevel(level)


def make_dataset(
    truth,
    prediction,
    attributes,
    attribute_names: Optional[List[str]] = None,
    features=None,
    feature_names: Optional[List[str]] = None,
) -> Dataset:
    attributes = np.asarray(attributes, dtype=np.int64)
    if attributes.ndim == 1:
        attributes = attributes.reshape(-1, 1)
    if attribute_names is None:
        attribute_names = [f"a{i}" for i in range(attributes.shape[1])]
    if features is not None:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if feature_names is None:
            feature_names = [f"f{i}" for i in range(features.shape[1])]
    return Dataset.from_arrays(
        truth=np.asarray(truth),
        prediction=None if prediction is None else np.asarray(prediction),
        attributes=attributes,
        attribute_names=attribute_names,
        features=features,
        feature_names=feature_names,
    )


def table_one_dataset() -> Dataset:
    """
    134 attributes where only a0 has an equal-opportunity gap: 0.80 vs 0.65
    true positive rate over 100 positives per group. The gap clears the
    uncorrected interval but not the alpha/134 one. The remaining attributes
    split the positives with identical rates (116/160 and 29/40).
    """
    n_pos, n_neg = 200, 50
    n = n_pos + n_neg
    truth = np.r_[np.ones(n_pos, dtype=np.int64), np.zeros(n_neg, dtype=np.int64)]
    prediction = np.zeros(n, dtype=np.int64)
    prediction[0:80] = 1
    prediction[100:165] = 1

    a0 = np.zeros(n, dtype=np.int64)
    a0[100:200] = 1
    balanced = np.zeros(n, dtype=np.int64)
    balanced[0:29] = 1
    balanced[80:91] = 1

    attributes = np.column_stack([a0] + [balanced] * 133)
    names = ["a0"] + [f"b{i}" for i in range(1, 134)]
    return make_dataset(truth, prediction, attributes, names)


@pytest.fixture
def dataset_factory():
    return make_dataset


@pytest.fixture
def table_one():
    return table_one_dataset()


@pytest.fixture(scope="session")
def accuracy_gap():
    config = SyntheticConfig(
        n_participants=10000,
        n_attributes=1,
        accuracy_group0=0.95,
        accuracy_group1=0.25,
        seed=3,
    )
    return generate_synthetic(config)


@pytest.fixture
def small_synthetic():
    return generate_synthetic(SyntheticConfig(n_participants=120, n_attributes=6, seed=11))
