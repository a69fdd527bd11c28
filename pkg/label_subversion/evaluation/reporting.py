"""Report writers: CSV tables, nested JSON and two-column plot data.

Writers go through `safe_text_write` and only touch files whose content changed.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional

import numpy as np
import pandas as pd
from coveo_systools.filesystem import safe_text_write

from label_subversion.attacks.config import AttackResult
from label_subversion.classifiers.model import TrainedModel
from label_subversion.datasets import Dataset
from label_subversion.evaluation.protocols import (
    CostAnalysisRow,
    SusceptibilityReport,
    SweepResult,
    TransferMatrix,
)
from label_subversion.sampling import GradientProfile

FLOAT_FORMAT = "%.6f"


def write_csv(frame: pd.DataFrame, path: Path, *, dry_run: bool = False) -> bool:
    """Returns True when the file was (or, on a dry run, would be) written."""
    content = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return safe_text_write(path, content, only_if_changed=True, dry_run=dry_run)


def write_json(payload: Mapping[str, Any], path: Path, *, dry_run: bool = False) -> bool:
    content = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    return safe_text_write(path, content, only_if_changed=True, dry_run=dry_run)


def write_text(content: str, path: Path, *, dry_run: bool = False) -> bool:
    return safe_text_write(path, content, only_if_changed=True, dry_run=dry_run)


def poisoned_labels_frame(
    original: np.ndarray, result: AttackResult, index: Optional[np.ndarray] = None
) -> pd.DataFrame:
    """`index` maps training rows back to the source dataset; defaults to 0..n-1."""
    return pd.DataFrame(
        {
            "index": np.arange(original.shape[0]) if index is None else index,
            "original": original,
            "poisoned": result.poisoned_labels,
        }
    )


def poisoned_points_frame(
    train: Dataset,
    result: AttackResult,
    clean_model: TrainedModel,
    poisoned_model: TrainedModel,
    index: Optional[np.ndarray] = None,
) -> pd.DataFrame:
    """Training rows with their features, both labelings and both surrogates' predictions."""
    names = train.feature_names or tuple(f"x{column}" for column in range(train.d))
    frame = pd.DataFrame(train.features, columns=list(names))
    frame.insert(0, "index", np.arange(train.n) if index is None else index)
    frame["original"] = train.labels
    frame["poisoned"] = result.poisoned_labels
    frame["clean_prediction"] = clean_model.predict(train.features)
    frame["poisoned_prediction"] = poisoned_model.predict(train.features)
    return frame


def gradients_frame(profile: GradientProfile) -> pd.DataFrame:
    frame = pd.DataFrame({"index": np.arange(profile.n), "g": profile.g})
    if profile.h is not None:
        frame["h"] = profile.h
    frame["rank"] = profile.ranks()
    return frame


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    rows = [
        {
            "dataset": result.dataset,
            "victim": result.victim,
            "strategy": str(strategy),
            "budget": budget,
            "error": error,
            "flips": flips,
        }
        for strategy, curve in result.curves.items()
        for budget, error, flips in zip(result.budgets, curve, result.flips[strategy])
    ]
    return pd.DataFrame(rows, columns=["dataset", "victim", "strategy", "budget", "error", "flips"])


def plot_data(result: SweepResult) -> Dict[str, str]:
    """One whitespace-separated (budget, error) listing per strategy."""
    return {
        str(strategy): "".join(
            f"{budget:.6f} {error:.6f}\n" for budget, error in zip(result.budgets, curve)
        )
        for strategy, curve in result.curves.items()
    }


def matrix_frame(matrix: TransferMatrix) -> pd.DataFrame:
    """One row per cell, plus a `clean` row per victim."""
    highlighted = matrix.highlighted()
    increase = matrix.increase()
    rows = [
        {
            "surrogate": surrogate.label,
            "victim": victim.label,
            "error": float(matrix.cells[s, v]),
            "increase": float(increase[s, v]),
            "highlighted": (s, v) in highlighted,
        }
        for s, surrogate in enumerate(matrix.surrogates)
        for v, victim in enumerate(matrix.victims)
    ]
    rows.extend(
        {
            "surrogate": "clean",
            "victim": victim.label,
            "error": matrix.clean_errors[v],
            "increase": 0.0,
            "highlighted": False,
        }
        for v, victim in enumerate(matrix.victims)
    )
    return pd.DataFrame(rows, columns=["surrogate", "victim", "error", "increase", "highlighted"])


def ranking_frame(report: SusceptibilityReport) -> pd.DataFrame:
    return pd.DataFrame(report.ranking(), columns=["victim", "increase"])


def cost_frame(rows: Iterable[CostAnalysisRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [row.to_json() for row in rows],
        columns=[
            "scheme",
            "budget",
            "budget_units",
            "error",
            "flips",
            "count_a",
            "count_b",
            "total_cost",
        ],
    )
