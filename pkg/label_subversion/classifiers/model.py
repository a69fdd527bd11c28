from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np

from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.datasets import Dataset
from label_subversion.exceptions import DimensionMismatch, EmptyDataset


def logistic_loss(margins: np.ndarray) -> np.ndarray:
    """log(1 + exp(-margin)), computed without overflow."""
    return np.logaddexp(0.0, -np.asarray(margins, dtype=float))


def hinge_loss(margins: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.asarray(margins, dtype=float))


class TrainedModel(ABC):
    """A fitted binary classifier. Immutable after fit; every method is pure."""

    kind: ClassifierKind

    def __init__(self, *, dimension: int) -> None:
        self.dimension = dimension

    @abstractmethod
    def _decision_function(self, features: np.ndarray) -> np.ndarray:
        """Real-valued scores for validated features; positive means +1."""

    def _check_features(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"{self.kind.label} was trained on {self.dimension} features,"
                f" got shape {features.shape}"
            )
        return features

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        return self._decision_function(self._check_features(features))

    def predict(self, features: np.ndarray) -> np.ndarray:
        """The sign of the decision function; a score of exactly 0 predicts +1."""
        return np.where(self.decision_function(features) >= 0, 1, -1)

    def loss(self, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
        """Per-instance residual of the given labels; the logistic loss on the decision score."""
        return logistic_loss(np.asarray(labels) * self.decision_function(features))

    def per_instance_loss(self, data: Dataset) -> np.ndarray:
        return self.loss(data.features, data.labels)

    def error_rate(self, data: Dataset) -> float:
        if data.n == 0:
            raise EmptyDataset(f"Cannot compute an error rate on the empty dataset {data.name}")
        return float(np.mean(self.predict(data.features) != data.labels))

    def to_json(self) -> Dict[str, Any]:
        return {"kind": str(self.kind)}

    def __str__(self) -> str:
        return f"{self.kind.label} (d={self.dimension})"
