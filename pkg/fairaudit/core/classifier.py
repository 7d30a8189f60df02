import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit, logit

from fairaudit.exceptions import InvalidParameterError, SchemaError
from fairaudit.models.schemas import Dataset, LogisticModel, TrainingConfig

logger = logging.getLogger(__name__)

# Smallest step the line search tries before giving up on an epoch
MIN_LEARNING_RATE = 1e-12


def log_loss(weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean cross-entropy plus (l2 / 2) * ||w||^2."""
    z = X @ weights + bias
    data_term = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(data_term + 0.5 * l2 * np.dot(weights, weights))


def loss_gradient(weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, l2: float) -> Tuple[np.ndarray, float]:
    """Gradient of log_loss with respect to (weights, bias)."""
    residual = expit(X @ weights + bias) - y
    grad_w = X.T @ residual / X.shape[0] + l2 * weights
    grad_b = float(residual.mean())
    return grad_w, grad_b


def gradient_descent(X: np.ndarray, y: np.ndarray, config: TrainingConfig) -> Tuple[np.ndarray, float, List[float]]:
    """
    Full-batch gradient descent from zero weights.

    A step that would raise the loss is halved until it does not, so the loss
    history never increases.

    Args:
        X: n x f feature matrix
        y: n labels in {0, 1}
        config: Learning rate, epochs and L2 strength

    Returns:
        (weights, bias, loss history including the initial loss)
    """
    weights = np.zeros(X.shape[1], dtype=np.float64)
    bias = 0.0
    rate = config.learning_rate
    loss = log_loss(weights, bias, X, y, config.l2)
    history = [loss]
    for epoch in range(config.epochs):
        grad_w, grad_b = loss_gradient(weights, bias, X, y, config.l2)
        while rate >= MIN_LEARNING_RATE:
            candidate_w = weights - rate * grad_w
            candidate_b = bias - rate * grad_b
            candidate_loss = log_loss(candidate_w, candidate_b, X, y, config.l2)
            if candidate_loss <= loss:
                weights, bias, loss = candidate_w, candidate_b, candidate_loss
                break
            rate /= 2.0
            logger.debug(f"Epoch {epoch}: loss rose, halving learning rate to {rate:g}")
        history.append(loss)
    return weights, bias, history


def train(dataset: Dataset, config: Optional[TrainingConfig] = None) -> LogisticModel:
    """
    Fit a logistic-regression classifier on the dataset's features and labels.

    Args:
        dataset: Dataset with at least two records, both labels and one feature
        config: Training hyperparameters

    Returns:
        Trained LogisticModel
    """
    config = config or TrainingConfig()
    arrays = dataset.arrays
    if dataset.n_records < 2:
        raise InvalidParameterError("training needs at least two records")
    if not dataset.feature_names:
        raise SchemaError("training needs at least one feature column")
    if np.unique(arrays.truth).size < 2:
        raise InvalidParameterError("training labels contain a single class")
    if not np.isfinite(arrays.features).all():
        raise InvalidParameterError("features contain non-finite values")

    try:
        weights, bias, history = gradient_descent(arrays.features, arrays.truth.astype(np.float64), config)
    except Exception as e:
        logger.error(f"Error training logistic model: {str(e)}")
        raise
    logger.info(f"Trained logistic model for {config.epochs} epochs, final loss {history[-1]:.6f}")
    return LogisticModel(
        weights=weights.tolist(),
        bias=float(bias),
        feature_names=list(dataset.feature_names),
    )


def predict(model: LogisticModel, dataset: Dataset) -> Dataset:
    """
    Replace the dataset's predictions with the model's thresholded output.

    Args:
        model: Trained model
        dataset: Dataset with the model's feature layout

    Returns:
        Copy of the dataset where prediction = 1 iff sigmoid(w.x + b) >= threshold
    """
    features = dataset.arrays.features
    if features.shape[1] != len(model.weights):
        raise SchemaError(
            f"Model expects {len(model.weights)} features, dataset has {features.shape[1]}"
        )
    if model.feature_names and model.feature_names != dataset.feature_names:
        raise SchemaError(
            f"Model features {model.feature_names} do not match dataset features {dataset.feature_names}"
        )
    scores = features @ np.asarray(model.weights, dtype=np.float64) + model.bias
    # Compare on the logit scale so a tie at the threshold is exact
    prediction = (scores >= logit(model.threshold)).astype(np.int64)
    return dataset.with_predictions(prediction)


def accuracy(dataset: Dataset) -> float:
    """
    Fraction of records whose prediction equals the label.

    Args:
        dataset: Dataset with predictions

    Returns:
        Accuracy in [0, 1]
    """
    arrays = dataset.arrays
    if arrays.prediction is None:
        raise SchemaError("Dataset has no predictions")
    return float(np.mean(arrays.prediction == arrays.truth))
