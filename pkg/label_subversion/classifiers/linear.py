"""Regularized logistic regression and linear SVM, solved in the primal.

Both minimize  gamma * sum(V(y_i, w.x_i + b)) + 0.5 * ||w||^2  by batch (sub)gradient descent
with a backtracking line search; the objective never increases between accepted steps.
"""

from typing import Any, Dict, Final, List, Tuple

import numpy as np
from scipy.special import expit

from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.classifiers.model import TrainedModel, hinge_loss, logistic_loss
from label_subversion.datasets import Dataset

ARMIJO_FACTOR: Final[float] = 1e-4
MAX_STEP: Final[float] = 1e6
MIN_STEP: Final[float] = 1e-14


def _margin_loss(margins: np.ndarray, kind: ClassifierKind) -> np.ndarray:
    if kind is ClassifierKind.LogisticRegression:
        return logistic_loss(margins)
    return hinge_loss(margins)


def linear_objective(
    weights: np.ndarray,
    intercept: float,
    features: np.ndarray,
    labels: np.ndarray,
    gamma: float,
    kind: ClassifierKind = ClassifierKind.LogisticRegression,
) -> float:
    margins = labels * (features @ weights + intercept)
    return gamma * float(np.sum(_margin_loss(margins, kind))) + 0.5 * float(weights @ weights)


def linear_gradient(
    weights: np.ndarray,
    intercept: float,
    features: np.ndarray,
    labels: np.ndarray,
    gamma: float,
    kind: ClassifierKind = ClassifierKind.LogisticRegression,
) -> Tuple[np.ndarray, float]:
    """Gradient (subgradient for the hinge) of `linear_objective` w.r.t. (weights, intercept)."""
    margins = labels * (features @ weights + intercept)
    if kind is ClassifierKind.LogisticRegression:
        slope = -expit(-margins)
    else:
        slope = np.where(margins < 1.0, -1.0, 0.0)
    coefficients = gamma * slope * labels
    return features.T @ coefficients + weights, float(coefficients.sum())


class LinearModel(TrainedModel):
    def __init__(
        self,
        *,
        kind: ClassifierKind,
        weights: np.ndarray,
        intercept: float,
        gamma: float,
        converged: bool = True,
        objective_trace: Tuple[float, ...] = (),
    ) -> None:
        super().__init__(dimension=int(weights.shape[0]))
        self.kind = kind
        self.weights = np.array(weights, dtype=float)
        self.weights.setflags(write=False)
        self.intercept = float(intercept)
        self.gamma = gamma
        self.converged = converged
        self.objective_trace = objective_trace

    def _decision_function(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights + self.intercept

    def loss(self, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
        return _margin_loss(np.asarray(labels) * self.decision_function(features), self.kind)

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": str(self.kind),
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "hyperparameters": {"gamma": self.gamma},
            "converged": self.converged,
        }


def fit_linear(
    kind: ClassifierKind,
    data: Dataset,
    *,
    gamma: float,
    max_iterations: int,
    tolerance: float,
) -> LinearModel:
    """Descend from w=0, b=0 until the relative decrease falls under `tolerance`.

    Running out of iterations returns a model flagged `converged=False`.
    """
    features, labels = data.features, data.labels.astype(float)
    weights, intercept = np.zeros(data.d), 0.0
    objective = linear_objective(weights, intercept, features, labels, gamma, kind)
    trace: List[float] = [objective]
    step, converged = 1.0, False

    for _iteration in range(max_iterations):
        gradient_w, gradient_b = linear_gradient(weights, intercept, features, labels, gamma, kind)
        squared_norm = float(gradient_w @ gradient_w) + gradient_b**2
        if np.sqrt(squared_norm) <= tolerance * max(1.0, objective):
            converged = True
            break

        step = min(step * 2.0, MAX_STEP)
        while step >= MIN_STEP:
            candidate_w = weights - step * gradient_w
            candidate_b = intercept - step * gradient_b
            candidate = linear_objective(candidate_w, candidate_b, features, labels, gamma, kind)
            if candidate <= objective - ARMIJO_FACTOR * step * squared_norm:
                break
            step *= 0.5
        else:
            # no descent step along the (sub)gradient: stationary for our purposes.
            converged = True
            break

        decrease = objective - candidate
        weights, intercept, objective = candidate_w, candidate_b, candidate
        trace.append(objective)
        if decrease <= tolerance * max(1.0, abs(objective)):
            converged = True
            break

    return LinearModel(
        kind=kind,
        weights=weights,
        intercept=intercept,
        gamma=gamma,
        converged=converged,
        objective_trace=tuple(trace),
    )
