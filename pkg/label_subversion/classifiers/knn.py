from typing import Final

import numpy as np

from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.classifiers.model import TrainedModel
from label_subversion.datasets import Dataset

# rows scored per block, bounds the (rows x n x d) difference tensor.
_CHUNK_SIZE: Final[int] = 256


class NearestNeighbors(TrainedModel):
    """Majority vote of the k closest training rows (euclidean).

    Distance ties favor lower indices.
    """

    kind = ClassifierKind.Knn

    def __init__(self, *, features: np.ndarray, labels: np.ndarray, k_neighbors: int) -> None:
        super().__init__(dimension=int(features.shape[1]))
        self.features = features
        self.labels = labels
        self.k_neighbors = min(k_neighbors, int(features.shape[0]))

    def neighbors(self, features: np.ndarray) -> np.ndarray:
        """Indices of the k nearest training rows, closest first."""
        blocks = []
        for start in range(0, features.shape[0], _CHUNK_SIZE):
            chunk = features[start : start + _CHUNK_SIZE]
            offsets = chunk[:, np.newaxis, :] - self.features[np.newaxis, :, :]
            distances = np.square(offsets).sum(axis=2)
            blocks.append(np.argsort(distances, axis=1, kind="stable")[:, : self.k_neighbors])
        if not blocks:
            return np.empty((0, self.k_neighbors), dtype=np.int64)
        return np.concatenate(blocks)

    def _decision_function(self, features: np.ndarray) -> np.ndarray:
        """(fraction of +1 neighbors - 0.5) * 2"""
        positive_fraction = np.mean(self.labels[self.neighbors(features)] == 1, axis=1)
        return (positive_fraction - 0.5) * 2.0


def fit_knn(data: Dataset, k_neighbors: int) -> NearestNeighbors:
    return NearestNeighbors(features=data.features, labels=data.labels, k_neighbors=k_neighbors)
