from pathlib import Path
from shutil import copyfile

import numpy as np
import pytest

from label_subversion.datasets import (
    Dataset,
    TrainTestSplit,
    generate_circular,
    generate_linear,
    split,
    standardize,
)

MOCK_DATASET = Path(__file__).parent / "mock-dataset.csv"
MOCK_LABEL_COLUMN = "class"
MOCK_POSITIVE_VALUE = "yes"

# csv exports (banknote, wine, australian) with a header row and a `class` column of 0/1.
DATA_DIRECTORY_VARIABLE = "SUBVERSION_DATA_DIR"


@pytest.fixture
def mock_dataset_csv(tmp_path: Path) -> Path:
    """12 rows, 2 features; the first 6 rows are positive."""
    target = tmp_path / MOCK_DATASET.name
    copyfile(MOCK_DATASET, target)
    return target


@pytest.fixture(scope="module")
def linear_split() -> TrainTestSplit:
    return standardize(split(generate_linear(400, 0.85, seed=11), 0.5, seed=5))


@pytest.fixture(scope="module")
def circular_split() -> TrainTestSplit:
    return standardize(split(generate_circular(600, 0.1, seed=7), 0.5, seed=3))


def balanced_dataset(seed: int, n: int = 24, d: int = 2) -> Dataset:
    """Half +1 then half -1, features shifted by the label so the classes separate."""
    rng = np.random.default_rng(seed)
    labels = np.repeat([1, -1], n // 2)
    features = rng.standard_normal((n, d)) + 0.75 * labels[:, np.newaxis]
    return Dataset(features, labels, name="balanced")


def balanced_split(seed: int, n: int = 24) -> TrainTestSplit:
    """`balanced_dataset` for training, a fresh draw of the same size for validation."""
    train, validation = balanced_dataset(seed, n), balanced_dataset(seed + 10_000, n)
    return TrainTestSplit(
        train=train,
        test=validation,
        seed=seed,
        train_indices=np.arange(n),
        test_indices=np.arange(n, 2 * n),
    )
