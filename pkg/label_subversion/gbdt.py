"""A compact gradient boosted decision tree for the logistic loss.

Serves two purposes: it supplies the per-instance gradients used to reduce the flipping search
space, and it is one of the classifiers an attack may use as surrogate or victim.
"""

from dataclasses import dataclass, field
from typing import Final, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import expit

from label_subversion.datasets import Dataset
from label_subversion.exceptions import DimensionMismatch, InvalidParameters

# gains closer than this are considered tied; the earlier (feature, threshold) wins.
GAIN_TIE_TOLERANCE: Final[float] = 1e-12

_LEAF: Final[int] = -1


@dataclass(frozen=True)
class GbdtParams:
    num_trees: int = 50
    max_depth: int = 3
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    min_split_gain: float = 0.0
    min_child_weight: float = 1e-3
    base_score: float = 0.0

    def __post_init__(self) -> None:
        if self.num_trees < 1:
            raise InvalidParameters(f"num_trees must be positive, got {self.num_trees}")
        if self.max_depth < 1:
            raise InvalidParameters(f"max_depth must be positive, got {self.max_depth}")
        if not 0 < self.learning_rate <= 1:
            raise InvalidParameters(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        for name in ("reg_lambda", "min_split_gain", "min_child_weight"):
            if getattr(self, name) < 0:
                raise InvalidParameters(f"{name} must be non-negative, got {getattr(self, name)}")


class GradientPair(NamedTuple):
    g: np.ndarray
    h: np.ndarray


class Split(NamedTuple):
    feature: int
    threshold: float
    gain: float


def logistic_gradients(raw_scores: np.ndarray, labels: np.ndarray) -> GradientPair:
    """First and second derivatives of log(1 + exp(-y * raw)) with respect to the raw score."""
    raw_scores = np.asarray(raw_scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if raw_scores.shape != labels.shape:
        raise DimensionMismatch(f"{raw_scores.shape[0]} scores for {labels.shape[0]} labels")

    residual = expit(-labels * raw_scores)
    g = -labels * residual
    # keep h strictly positive even when the sigmoid saturates.
    h = np.maximum(residual * (1.0 - residual), np.finfo(float).tiny)
    return GradientPair(g, h)


def split_gain(
    g_left: np.ndarray, h_left: np.ndarray, g_total: float, h_total: float, reg_lambda: float
) -> np.ndarray:
    """Loss reduction of splitting a node; accepts vectors of left-side sums."""
    g_right, h_right = g_total - g_left, h_total - h_left
    return 0.5 * (
        np.square(g_left) / (h_left + reg_lambda)
        + np.square(g_right) / (h_right + reg_lambda)
        - g_total**2 / (h_total + reg_lambda)
    )


def leaf_weight(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    return -g_sum / (h_sum + reg_lambda)


def find_best_split(
    features: np.ndarray, g: np.ndarray, h: np.ndarray, params: GbdtParams
) -> Optional[Split]:
    """Exact greedy search over the midpoints between sorted unique values of every feature."""
    g_total, h_total = float(g.sum()), float(h.sum())
    best: Optional[Split] = None

    for feature in range(features.shape[1]):
        order = np.argsort(features[:, feature], kind="stable")
        values = features[order, feature]
        g_left, h_left = np.cumsum(g[order])[:-1], np.cumsum(h[order])[:-1]

        # only cut between distinct values, and keep both children heavy enough.
        valid = (
            (values[:-1] < values[1:])
            & (h_left >= params.min_child_weight)
            & (h_total - h_left >= params.min_child_weight)
        )
        if not valid.any():
            continue

        with np.errstate(divide="ignore", invalid="ignore"):
            raw_gains = split_gain(g_left, h_left, g_total, h_total, params.reg_lambda)
        gains = np.where(valid & np.isfinite(raw_gains), raw_gains, -np.inf)
        if not np.isfinite(gains).any():
            continue
        position = int(np.argmax(gains))  # first maximum: the lowest threshold wins ties
        gain = float(gains[position])
        if best is None or gain > best.gain + GAIN_TIE_TOLERANCE:
            threshold = 0.5 * (values[position] + values[position + 1])
            best = Split(feature, float(threshold), gain)

    if best is None or best.gain <= params.min_split_gain:
        return None
    return best


@dataclass(frozen=True)
class RegressionTree:
    """Array-backed binary tree; rows with x[feature] <= threshold go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def leaf_count(self) -> int:
        return int(np.count_nonzero(self.feature == _LEAF))

    @property
    def depth(self) -> int:
        def _depth(node: int) -> int:
            if self.feature[node] == _LEAF:
                return 0
            return 1 + max(_depth(self.left[node]), _depth(self.right[node]))

        return _depth(0)

    def apply(self, features: np.ndarray) -> np.ndarray:
        """Map every row to the index of the leaf it lands in."""
        nodes = np.zeros(features.shape[0], dtype=np.int64)
        active = self.feature[nodes] != _LEAF
        while active.any():
            current = nodes[active]
            go_left = features[active, self.feature[current]] <= self.threshold[current]
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[nodes] != _LEAF
        return nodes

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.value[self.apply(features)]

    @classmethod
    def single_leaf(cls, weight: float) -> "RegressionTree":
        return cls(
            feature=np.array([_LEAF]),
            threshold=np.array([0.0]),
            left=np.array([_LEAF]),
            right=np.array([_LEAF]),
            value=np.array([weight]),
        )


class _TreeBuilder:
    """Grows one tree depth-first; node ids are assigned in creation order."""

    def __init__(self, params: GbdtParams) -> None:
        self.params = params
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []

    def _new_node(self) -> int:
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def grow(self, features: np.ndarray, g: np.ndarray, h: np.ndarray, depth: int = 0) -> int:
        node = self._new_node()
        split = (
            find_best_split(features, g, h, self.params) if depth < self.params.max_depth else None
        )
        if split is None:
            self.value[node] = leaf_weight(float(g.sum()), float(h.sum()), self.params.reg_lambda)
            return node

        goes_left = features[:, split.feature] <= split.threshold
        self.feature[node] = split.feature
        self.threshold[node] = split.threshold
        self.left[node] = self.grow(features[goes_left], g[goes_left], h[goes_left], depth + 1)
        self.right[node] = self.grow(features[~goes_left], g[~goes_left], h[~goes_left], depth + 1)
        return node

    def build(self) -> RegressionTree:
        return RegressionTree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=float),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            value=np.array(self.value, dtype=float),
        )


def build_tree(
    features: np.ndarray, g: np.ndarray, h: np.ndarray, params: GbdtParams
) -> RegressionTree:
    builder = _TreeBuilder(params)
    builder.grow(features, g, h)
    return builder.build()


@dataclass(frozen=True)
class GbdtModel:
    trees: Tuple[RegressionTree, ...]
    base_score: float = 0.0
    learning_rate: float = 1.0
    dimension: Optional[int] = None
    # mean training logistic loss after each boosting round; empty for hand-built models.
    training_loss: Tuple[float, ...] = field(default=(), repr=False)


def predict_raw(model: GbdtModel, features: np.ndarray) -> np.ndarray:
    """base_score + learning_rate * sum of leaf outputs."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or (model.dimension is not None and features.shape[1] != model.dimension):
        raise DimensionMismatch(
            f"The model expects {model.dimension} features, got shape {features.shape}"
        )

    raw = np.full(features.shape[0], model.base_score, dtype=float)
    for tree in model.trees:
        raw += model.learning_rate * tree.predict(features)
    return raw


def _mean_logistic_loss(raw: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, -labels * raw)))


def train_gbdt(data: Dataset, params: GbdtParams, seed: int = 0) -> Tuple[GbdtModel, GradientPair]:
    """Boost `params.num_trees` trees on the logistic loss.

    The returned gradients are computed against the final model's raw scores. `seed` is accepted
    for interface symmetry; training uses no randomness.
    """
    _ = seed
    features, labels = data.features, data.labels.astype(float)
    raw = np.full(data.n, params.base_score, dtype=float)
    trees: List[RegressionTree] = []
    losses: List[float] = []

    for _round in range(params.num_trees):
        g, h = logistic_gradients(raw, labels)
        tree = build_tree(features, g, h, params)
        trees.append(tree)
        raw = raw + params.learning_rate * tree.predict(features)
        losses.append(_mean_logistic_loss(raw, labels))

    model = GbdtModel(
        trees=tuple(trees),
        base_score=params.base_score,
        learning_rate=params.learning_rate,
        dimension=data.d,
        training_loss=tuple(losses),
    )
    return model, logistic_gradients(raw, labels)
