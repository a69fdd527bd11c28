import json
from functools import partial
from pathlib import Path
from typing import Tuple

import numpy as np
import pytest
from coveo_testing.markers import Integration, UnitTest
from coveo_testing.parametrize import parametrize

from label_subversion.attacks.config import AttackConfig, CostScheme, Strategy
from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.classifiers.spec import ClassifierSpec
from label_subversion.datasets import TrainTestSplit, generate_linear, split, standardize
from label_subversion.evaluation.grid import Cell, run_cells
from label_subversion.evaluation.protocols import (
    SusceptibilityReport,
    TransferMatrix,
    budget_sweep,
    cost_analysis,
    transferability_matrix,
    victim_error,
)
from label_subversion.evaluation.reporting import (
    cost_frame,
    matrix_frame,
    plot_data,
    ranking_frame,
    sweep_frame,
    write_csv,
    write_json,
)
from label_subversion.exceptions import InvalidAttackConfig, InvalidParameters
from label_subversion.gbdt import GbdtParams

LR = ClassifierSpec(ClassifierKind.LogisticRegression)
NB = ClassifierSpec(ClassifierKind.GaussianNb)
KNN = ClassifierSpec(ClassifierKind.Knn)
QUICK_GBDT = GbdtParams(num_trees=5)


@pytest.fixture(scope="module")
def small_split() -> TrainTestSplit:
    """60 training rows: budgets of 0.1 are 6 flips."""
    return standardize(split(generate_linear(120, 0.85, seed=21), 0.5, seed=2))


def _base_config() -> AttackConfig:
    return AttackConfig(t_max=3, seed=4, surrogate=LR)


def _matrix(cells: np.ndarray, clean_errors: Tuple[float, ...] = (0.1, 0.2)) -> TransferMatrix:
    surrogates = (LR, NB, KNN)[: cells.shape[0]]
    return TransferMatrix(
        dataset="handmade",
        budget=0.1,
        surrogates=surrogates,
        victims=(LR, NB),
        cells=cells,
        clean_errors=clean_errors,
    )


@UnitTest
def test_run_cells_gathers_by_key() -> None:
    cells = [Cell(key, partial(pow, key, 2)) for key in range(6)]
    assert run_cells(cells, jobs=3) == {key: key**2 for key in range(6)}


@UnitTest
def test_run_cells_without_cells() -> None:
    assert run_cells([], jobs=2) == {}


@UnitTest
def test_run_cells_needs_a_worker() -> None:
    with pytest.raises(InvalidParameters):
        run_cells([Cell("a", lambda: 1)], jobs=0)


@UnitTest
def test_highlighted_ties() -> None:
    matrix = _matrix(np.array([[0.3, 0.5], [0.4, 0.2], [0.4, 0.5]]))
    assert matrix.is_diagonal(0, 0)
    assert matrix.is_diagonal(1, 1)
    assert not matrix.is_diagonal(2, 0)
    assert matrix.highlighted() == {(1, 0), (2, 0), (0, 1), (2, 1)}


@UnitTest
def test_highlighted_ignores_the_diagonal() -> None:
    matrix = _matrix(np.array([[0.9, 0.5], [0.4, 0.9], [0.35, 0.45]]))
    assert matrix.highlighted() == {(1, 0), (0, 1)}


@UnitTest
def test_susceptibility_ranking() -> None:
    report = SusceptibilityReport(_matrix(np.array([[0.3, 0.25], [0.15, 0.5]])))
    assert np.allclose(report.worst_increase(), [0.2, 0.3])
    assert [label for label, _ in report.ranking()] == ["NB", "LR"]


@UnitTest
def test_susceptibility_ranking_ties_keep_the_victim_order() -> None:
    report = SusceptibilityReport(_matrix(np.array([[0.5, 0.5]]), clean_errors=(0.25, 0.25)))
    assert [label for label, _ in report.ranking()] == ["LR", "NB"]


@UnitTest
def test_matrix_frame() -> None:
    frame = matrix_frame(_matrix(np.array([[0.3, 0.25], [0.15, 0.5]])))
    assert len(frame) == 4 + 2
    clean = frame[frame["surrogate"] == "clean"]
    assert clean["error"].tolist() == [0.1, 0.2]
    assert frame["highlighted"].sum() == 2


@UnitTest
def test_ranking_frame() -> None:
    frame = ranking_frame(SusceptibilityReport(_matrix(np.array([[0.3, 0.25], [0.15, 0.5]]))))
    assert frame["victim"].tolist() == ["NB", "LR"]


@UnitTest
def test_transfer_json_marks_highlighted_cells() -> None:
    payload = _matrix(np.array([[0.3, 0.5], [0.4, 0.2]])).to_json()
    assert payload["cells"][1][0] == {"error": 0.4, "highlighted": True}
    assert payload["cells"][0][0]["highlighted"] is False


@Integration
def test_sweep_at_zero_budget_is_the_clean_error(small_split: TrainTestSplit) -> None:
    result = budget_sweep(
        small_split, ("ogds", "random"), LR, (0.0,), _base_config(), gbdt_params=QUICK_GBDT
    )
    clean = victim_error(LR, small_split.train, small_split.train.labels, small_split.test, 4)
    assert result.clean_error == clean
    assert result.curves == {Strategy.Ogds: (clean,), Strategy.Random: (clean,)}
    assert result.flips == {Strategy.Ogds: (0,), Strategy.Random: (0,)}


@Integration
def test_sweep_points(small_split: TrainTestSplit) -> None:
    result = budget_sweep(
        small_split,
        (Strategy.Ogds, Strategy.Sgds, Strategy.Linear),
        LR,
        (0.0, 0.1),
        _base_config(),
        gbdt_params=QUICK_GBDT,
    )
    for strategy in (Strategy.Ogds, Strategy.Sgds, Strategy.Linear):
        assert len(result.curves[strategy]) == 2
        assert result.curves[strategy][0] == result.clean_error
        assert result.flips[strategy][1] <= 6
    assert result.curves[Strategy.Ogds] == result.curves[Strategy.Sgds]
    assert result.flips[Strategy.Linear][1] == 6

    frame = sweep_frame(result)
    assert len(frame) == 3 * 2
    assert set(plot_data(result)) == {"ogds", "sgds", "linear"}
    assert plot_data(result)["ogds"].count("\n") == 2


@Integration
def test_sweep_concurrency_does_not_change_the_results(small_split: TrainTestSplit) -> None:
    options = dict(gbdt_params=QUICK_GBDT)
    budgets = (0.05, 0.1)
    serial = budget_sweep(small_split, ("ogds", "gds"), NB, budgets, _base_config(), **options)
    parallel = budget_sweep(
        small_split, ("ogds", "gds"), NB, budgets, _base_config(), jobs=4, **options
    )
    assert serial == parallel


@UnitTest
@parametrize("budgets", ((0.2, 0.1), (0.1, 1.5), (-0.1,)))
def test_sweep_rejects_invalid_budgets(
    budgets: Tuple[float, ...], small_split: TrainTestSplit
) -> None:
    with pytest.raises(InvalidAttackConfig):
        budget_sweep(small_split, ("ogds",), LR, budgets, _base_config(), gbdt_params=QUICK_GBDT)


@Integration
def test_transfer_at_zero_budget(small_split: TrainTestSplit) -> None:
    matrix = transferability_matrix(small_split, (LR, NB), (LR, NB, KNN), 0.0, _base_config())
    assert matrix.cells.shape == (2, 3)
    assert np.array_equal(matrix.cells, np.tile(matrix.clean_errors, (2, 1)))
    assert matrix.flips == (0, 0)
    clean = victim_error(KNN, small_split.train, small_split.train.labels, small_split.test, 4)
    assert matrix.clean_errors[2] == clean


@Integration
def test_transfer_matrix(small_split: TrainTestSplit) -> None:
    matrix = transferability_matrix(
        small_split, (LR, NB), (LR, NB), 0.1, _base_config(), gbdt_params=QUICK_GBDT
    )
    assert matrix.cells.shape == (2, 2)
    assert np.all((matrix.cells >= 0) & (matrix.cells <= 1))
    assert all(flips <= 6 for flips in matrix.flips)
    assert matrix.highlighted() == {(1, 0), (0, 1)}
    assert json.loads(json.dumps(matrix.to_json()))["victims"] == ["LR", "NB"]


@UnitTest
def test_transfer_needs_surrogates(small_split: TrainTestSplit) -> None:
    with pytest.raises(InvalidAttackConfig):
        transferability_matrix(small_split, (), (LR,), 0.1, _base_config())


@Integration
def test_cost_analysis(small_split: TrainTestSplit) -> None:
    runs = [
        (CostScheme(), 0.0),
        (CostScheme(), 0.1),
        (CostScheme(large_cost=1.0, small_cost=2.0), 0.2),
    ]
    rows = cost_analysis(small_split, runs, _base_config(), gbdt_params=QUICK_GBDT)
    assert [row.scheme for row in rows] == ["uniform", "uniform", "varied[1,2]"]
    assert [row.budget_units for row in rows] == [0, 6, 12]

    clean = rows[0]
    assert (clean.flips, clean.count_a, clean.count_b, clean.total_cost) == (0, 0, 0, 0.0)
    for row in rows:
        assert row.count_a + row.count_b == row.flips
        assert row.total_cost <= row.budget_units + 1e-9
    assert rows[2].total_cost == rows[2].count_a + 2 * rows[2].count_b

    frame = cost_frame(rows)
    assert frame.columns.tolist()[:3] == ["scheme", "budget", "budget_units"]
    assert len(frame) == 3


@UnitTest
def test_write_csv_only_when_changed(tmp_path: Path) -> None:
    frame = ranking_frame(SusceptibilityReport(_matrix(np.array([[0.3, 0.25]]))))
    target = tmp_path / "ranking.csv"
    assert write_csv(frame, target)
    assert target.read_text() == "victim,increase\nLR,0.200000\nNB,0.050000\n"
    assert not write_csv(frame, target)


@UnitTest
def test_write_json(tmp_path: Path) -> None:
    target = tmp_path / "report.json"
    write_json({"b": 1, "a": [0.5]}, target)
    assert target.read_text() == '{\n  "a": [\n    0.5\n  ],\n  "b": 1\n}\n'


@UnitTest
def test_dry_run_writes_nothing(tmp_path: Path) -> None:
    target = tmp_path / "report.json"
    write_json({"a": 1}, target, dry_run=True)
    assert not target.exists()
