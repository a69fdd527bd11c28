"""Load, generate, split and standardize binary classification datasets.

Labels are always encoded as -1/+1; every other module relies on it.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Final, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from label_subversion.exceptions import (
    DatasetNotFound,
    InvalidDataset,
    InvalidSplit,
    LabelColumnNotFound,
    NonNumericFeature,
    TooManyLabelValues,
)

# linear generator: class means sit on either side of the vertical line x=0.
LINEAR_CLASS_OFFSET: Final[float] = 1.5
# circular generator: inner disc (+1) up to this radius, annulus (-1) up to twice this radius.
CIRCLE_RADIUS: Final[float] = 1.0

# absorbs representation error such as 0.29 * 100 == 28.999999999999996
_FLOOR_SLACK: Final[float] = 1e-9


def floor_count(fraction: float, total: int) -> int:
    """floor(fraction * total), robust to floating point representation error."""
    return int(math.floor(fraction * total + _FLOOR_SLACK))


def _read_only(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Dataset:
    """A feature matrix with its -1/+1 labels. Immutable once built."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: Optional[Tuple[str, ...]] = None
    name: str = "dataset"

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels)

        if features.ndim != 2:
            raise InvalidDataset(
                f"{self.name}: features must be a 2-d matrix, got {features.ndim}-d"
            )
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise InvalidDataset(
                f"{self.name}: expected {features.shape[0]} labels, got shape {labels.shape}"
            )
        if labels.size and not np.isin(labels, (-1, 1)).all():
            raise InvalidDataset(f"{self.name}: labels must be exactly -1 or +1")
        if not np.isfinite(features).all():
            raise InvalidDataset(f"{self.name}: features contain NaN or infinite values")
        if self.feature_names is not None and len(self.feature_names) != features.shape[1]:
            raise InvalidDataset(
                f"{self.name}: {len(self.feature_names)} feature names"
                f" for {features.shape[1]} features"
            )

        object.__setattr__(self, "features", _read_only(features))
        object.__setattr__(self, "labels", _read_only(labels.astype(np.int64)))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def has_both_classes(self) -> bool:
        return bool(np.any(self.labels == 1) and np.any(self.labels == -1))

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        """The same instances with different labels; features are shared, never copied back."""
        return Dataset(self.features, labels, self.feature_names, self.name)

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(features, self.labels, self.feature_names, self.name)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.feature_names, self.name)

    def __str__(self) -> str:
        return f"{self.name} (n={self.n}, d={self.d})"


@dataclass(frozen=True)
class TrainTestSplit:
    train: Dataset
    test: Dataset
    seed: int
    train_indices: np.ndarray = field(repr=False)
    test_indices: np.ndarray = field(repr=False)


def load_csv(
    path: Union[str, Path], label_column: str, positive_value: str, *, name: Optional[str] = None
) -> Dataset:
    """Load a headed, comma-separated file. Rows whose label equals `positive_value` become +1."""
    path = Path(path)
    if not path.is_file():
        raise DatasetNotFound(f"Cannot find the dataset file: {path}")

    frame = pd.read_csv(path, dtype=str, encoding="utf-8", keep_default_na=False)
    if label_column not in frame.columns:
        raise LabelColumnNotFound(
            f"{path}: label column {label_column!r} not found in {list(frame.columns)}"
        )

    raw_labels = frame[label_column].str.strip()
    values = sorted(raw_labels.unique())
    if len(values) > 2:
        raise TooManyLabelValues(f"{path}: expected 2 label values, found {len(values)}: {values}")
    if len(values) < 2:
        raise InvalidDataset(f"{path}: expected 2 label values, found only {values}")
    if str(positive_value) not in values:
        raise InvalidDataset(f"{path}: positive value {positive_value!r} not among labels {values}")

    feature_frame = frame.drop(columns=[label_column])
    numeric = feature_frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    invalid = numeric.isna().to_numpy() | ~np.isfinite(numeric.to_numpy(dtype=float))
    if invalid.any():
        row, column = (int(_) for _ in np.argwhere(invalid)[0])
        raise NonNumericFeature(
            f"{path}: non-numeric cell {feature_frame.iat[row, column]!r} "
            f"at row {row + 2}, column {feature_frame.columns[column]!r}"
        )

    return Dataset(
        features=numeric.to_numpy(dtype=float),
        labels=np.where(raw_labels.to_numpy() == str(positive_value), 1, -1),
        feature_names=tuple(feature_frame.columns),
        name=name or path.stem,
    )


def _class_sizes(n: int) -> Tuple[int, int]:
    if n < 4:
        raise InvalidDataset(f"Synthetic datasets need at least 4 instances, got {n}")
    return (n + 1) // 2, n // 2


def _shuffled(
    rng: np.random.Generator, features: np.ndarray, labels: np.ndarray, name: str
) -> Dataset:
    order = rng.permutation(labels.shape[0])
    return Dataset(features[order], labels[order], ("x0", "x1"), name)


def generate_linear(n: int, noise: float, seed: int) -> Dataset:
    """Two isotropic gaussian clusters on both sides of a line; the side decides the class."""
    if noise < 0:
        raise InvalidDataset(f"noise must be non-negative, got {noise}")
    positives, negatives = _class_sizes(n)
    rng = np.random.default_rng(seed)

    labels = np.concatenate(
        (np.ones(positives, dtype=np.int64), -np.ones(negatives, dtype=np.int64))
    )
    means = np.zeros((n, 2))
    means[:, 0] = labels * LINEAR_CLASS_OFFSET
    features = means + noise * rng.standard_normal((n, 2))
    return _shuffled(rng, features, labels, "linear")


def generate_circular(n: int, noise: float, seed: int) -> Dataset:
    """An inner disc (+1) surrounded by an annulus (-1), blurred by gaussian radial noise."""
    if noise < 0:
        raise InvalidDataset(f"noise must be non-negative, got {noise}")
    positives, negatives = _class_sizes(n)
    rng = np.random.default_rng(seed)

    # uniform by area: the disc for positives, the annulus [R, 2R) for negatives.
    inner = CIRCLE_RADIUS * np.sqrt(rng.uniform(0.0, 1.0, positives))
    outer = CIRCLE_RADIUS * np.sqrt(rng.uniform(1.0, 4.0, negatives))
    radius = np.abs(np.concatenate((inner, outer)) + noise * rng.standard_normal(n))
    angle = rng.uniform(0.0, 2 * np.pi, n)

    features = np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))
    labels = np.concatenate(
        (np.ones(positives, dtype=np.int64), -np.ones(negatives, dtype=np.int64))
    )
    return _shuffled(rng, features, labels, "circular")


def _balance_sides(train: np.ndarray, test: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Move one instance over when a side is empty."""
    if train.size == 0:
        train, test = test[:1], test[1:]
    elif test.size == 0:
        train, test = train[:-1], train[-1:]
    return train, test


def split(
    data: Dataset, train_fraction: float, seed: int, stratified: bool = False
) -> TrainTestSplit:
    """Split into disjoint train/test sides covering the source. Counts use floor rounding."""
    if not 0 < train_fraction < 1:
        raise InvalidSplit(f"train_fraction must be in (0, 1), got {train_fraction}")
    if data.n < 2:
        raise InvalidSplit(f"Cannot split {data}: at least 2 instances are required")

    rng = np.random.default_rng(seed)
    if stratified:
        train_parts, test_parts = [], []
        for label in (1, -1):
            members = rng.permutation(np.flatnonzero(data.labels == label))
            count = floor_count(train_fraction, members.size)
            train_parts.append(members[:count])
            test_parts.append(members[count:])
        train_indices, test_indices = np.concatenate(train_parts), np.concatenate(test_parts)
    else:
        order = rng.permutation(data.n)
        count = floor_count(train_fraction, data.n)
        train_indices, test_indices = order[:count], order[count:]

    train_indices, test_indices = _balance_sides(train_indices, test_indices)
    train_indices, test_indices = np.sort(train_indices), np.sort(test_indices)

    train = data.subset(train_indices)
    if not train.has_both_classes:
        raise InvalidSplit(
            f"The train side of {data} holds a single class; raise train_fraction or stratify"
        )

    return TrainTestSplit(
        train=train,
        test=data.subset(test_indices),
        seed=seed,
        train_indices=_read_only(train_indices),
        test_indices=_read_only(test_indices),
    )


def standardize(data_split: TrainTestSplit) -> TrainTestSplit:
    """Center and scale both sides with the train statistics. Constant columns pass through."""
    train, test = data_split.train, data_split.test
    mean = train.features.mean(axis=0)
    deviation = train.features.std(axis=0)
    constant = deviation == 0
    mean = np.where(constant, 0.0, mean)
    deviation = np.where(constant, 1.0, deviation)

    return TrainTestSplit(
        train=train.with_features((train.features - mean) / deviation),
        test=test.with_features((test.features - mean) / deviation),
        seed=data_split.seed,
        train_indices=data_split.train_indices,
        test_indices=data_split.test_indices,
    )
