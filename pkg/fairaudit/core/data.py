import hashlib
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from fairaudit.exceptions import InvalidParameterError, StorageError
from fairaudit.models.schemas import CsvSchema, Dataset, SyntheticConfig
from fairaudit.utils.csv_processor import CSVProcessor

logger = logging.getLogger(__name__)


def load_csv(path: Union[str, Path], schema: Optional[CsvSchema] = None) -> Dataset:
    """
    Load an audit dataset from a CSV file.

    Args:
        path: Path to a comma-separated UTF-8 file with a header row
        schema: Column mapping (defaults to y_true / y_pred / auto attributes)

    Returns:
        Dataset with one record per row
    """
    schema = schema or CsvSchema()
    try:
        frame = CSVProcessor.read_frame(path)
        dataset = CSVProcessor.frame_to_dataset(frame, schema)
    except Exception as e:
        logger.error(f"Error loading dataset from {path}: {str(e)}")
        raise
    logger.info(
        f"Loaded {dataset.n_records} records with {len(dataset.attribute_names)} attributes "
        f"and {len(dataset.feature_names)} features from {path}"
    )
    return dataset


def save_csv(dataset: Dataset, path: Union[str, Path]) -> Path:
    """
    Write a dataset in the layout load_csv reads.

    Args:
        dataset: Dataset to write
        path: Destination file

    Returns:
        The written path
    """
    path = Path(path)
    try:
        path.write_text(CSVProcessor.dataset_to_text(dataset), encoding="utf-8")
    except OSError as e:
        logger.error(f"Error writing dataset to {path}: {str(e)}")
        raise StorageError(f"Could not write {path}: {str(e)}")
    return path


def fingerprint(dataset: Dataset) -> str:
    """SHA-256 of the dataset's canonical CSV form."""
    text = CSVProcessor.dataset_to_text(dataset)
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def generate_synthetic(config: SyntheticConfig) -> Dataset:
    """
    Draw a synthetic audit dataset from the label-flip model.

    Attributes are independent Bernoulli draws, labels Bernoulli(base_rate), and
    each prediction equals the label with the accuracy of the record's group on
    the first attribute (one shared accuracy when both are equal), otherwise the
    flipped label.

    Args:
        config: Generation parameters, including the seed

    Returns:
        Dataset with attributes attr_0 .. attr_{n-1} and an optional feature x_0
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_participants

    # Draw order is fixed; changing it changes every seeded dataset
    attributes = rng.binomial(1, config.attribute_probability, size=(n, config.n_attributes))
    truth = rng.binomial(1, config.base_rate, size=n)
    accuracy = np.where(attributes[:, 0] == 1, config.accuracy_group1, config.accuracy_group0)
    correct = rng.random(n) < accuracy
    prediction = np.where(correct, truth, 1 - truth)

    features = None
    feature_names = []
    if config.gaussian_feature:
        features = rng.standard_normal(n).reshape(n, 1)
        feature_names = ["x_0"]

    logger.debug(f"Generated synthetic dataset: n={n}, attributes={config.n_attributes}, seed={config.seed}")
    return Dataset.from_arrays(
        truth=truth,
        prediction=prediction,
        attributes=attributes,
        attribute_names=[f"attr_{i}" for i in range(config.n_attributes)],
        features=features,
        feature_names=feature_names,
    )


def split(dataset: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Randomly partition a dataset into train and test parts.

    Args:
        dataset: Dataset to split
        train_fraction: Share of records in the first part, strictly between 0 and 1
        seed: Seed of the permutation

    Returns:
        (train, test) with round(n * train_fraction) and the remaining records
    """
    if not 0.0 < train_fraction < 1.0:
        raise InvalidParameterError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = dataset.n_records
    n_train = int(round(n * train_fraction))
    if n_train < 1 or n_train >= n:
        raise InvalidParameterError(
            f"Splitting {n} records at {train_fraction} leaves an empty partition"
        )
    order = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(order[:n_train])
    test_idx = np.sort(order[n_train:])
    return dataset.subset(train_idx), dataset.subset(test_idx)
