from typing import Final

import numpy as np

from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.classifiers.model import TrainedModel
from label_subversion.datasets import Dataset

# fraction of the largest feature variance added to every per-class variance.
VAR_SMOOTHING: Final[float] = 1e-9


class GaussianNaiveBayes(TrainedModel):
    """Per-class independent gaussians. Row 0 of every statistic is class -1, row 1 class +1."""

    kind = ClassifierKind.GaussianNb

    def __init__(self, *, log_priors: np.ndarray, means: np.ndarray, variances: np.ndarray) -> None:
        super().__init__(dimension=int(means.shape[1]))
        self.log_priors = log_priors
        self.means = means
        self.variances = variances

    def _joint_log_likelihood(self, features: np.ndarray) -> np.ndarray:
        deviations = features[:, np.newaxis, :] - self.means[np.newaxis, :, :]
        log_densities = -0.5 * (
            np.log(2.0 * np.pi * self.variances)[np.newaxis, :, :]
            + np.square(deviations) / self.variances[np.newaxis, :, :]
        )
        return self.log_priors[np.newaxis, :] + log_densities.sum(axis=2)

    def _decision_function(self, features: np.ndarray) -> np.ndarray:
        """log P(+1 | x) - log P(-1 | x)"""
        joint = self._joint_log_likelihood(features)
        return joint[:, 1] - joint[:, 0]


def fit_naive_bayes(data: Dataset) -> GaussianNaiveBayes:
    epsilon = VAR_SMOOTHING * float(data.features.var(axis=0).max(initial=0.0))
    if epsilon == 0.0:
        # every feature is constant: fall back to an absolute floor.
        epsilon = VAR_SMOOTHING

    classes = [data.features[data.labels == label] for label in (-1, 1)]
    return GaussianNaiveBayes(
        log_priors=np.log([members.shape[0] / data.n for members in classes]),
        means=np.stack([members.mean(axis=0) for members in classes]),
        variances=np.stack([members.var(axis=0) + epsilon for members in classes]),
    )
