"""Experiment protocols: budget sweeps, transferability, cost analysis and susceptibility.

Reported errors are always measured on the test side of the split, which also serves as the
attacks' validation set. Victims are fit with the same seed on clean and poisoned labels.
"""

from dataclasses import asdict, dataclass, field, replace
from functools import partial
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np

from label_subversion.attacks.config import (
    AttackConfig,
    AttackResult,
    CostScheme,
    Strategy,
    budget_from_fraction,
)
from label_subversion.attacks.strategies import run_strategy
from label_subversion.classifiers.factory import fit
from label_subversion.classifiers.spec import ClassifierSpec
from label_subversion.datasets import Dataset, TrainTestSplit
from label_subversion.evaluation.grid import Cell, run_cells
from label_subversion.exceptions import InvalidAttackConfig
from label_subversion.gbdt import GbdtParams
from label_subversion.sampling import GradientProfile, gradient_profile
from label_subversion.utils import derive_seed

# cells closer than this to a column maximum are tied with it.
HIGHLIGHT_TOLERANCE = 1e-12


class _Outcome(NamedTuple):
    error: float
    attack: AttackResult


def _check_fraction(budget: float) -> float:
    if not 0 <= budget <= 1:
        raise InvalidAttackConfig(
            f"Budgets are fractions of the training set in [0, 1], got {budget}"
        )
    return float(budget)


def _gradients(
    split: TrainTestSplit, base_config: AttackConfig, params: GbdtParams
) -> GradientProfile:
    seed = derive_seed(base_config.seed, "gradients")
    return gradient_profile(split.train, params, seed, ordering=base_config.gradient_order)


def victim_error(
    victim: ClassifierSpec, train: Dataset, labels: np.ndarray, test: Dataset, master_seed: int
) -> float:
    """Test error of `victim` fit on `train` relabeled with `labels`."""
    model = fit(victim, train.with_labels(labels), derive_seed(master_seed, "victim", victim.label))
    return model.error_rate(test)


def _attack_cell(
    strategy: Strategy,
    split: TrainTestSplit,
    config: AttackConfig,
    gradients: GradientProfile,
    victims: Sequence[ClassifierSpec],
    master_seed: int,
) -> Tuple[AttackResult, Tuple[float, ...]]:
    attack = run_strategy(strategy, split.train, config, gradients)
    errors = tuple(
        victim_error(victim, split.train, attack.poisoned_labels, split.test, master_seed)
        for victim in victims
    )
    return attack, errors


def _cell_config(
    base_config: AttackConfig,
    split: TrainTestSplit,
    surrogate: ClassifierSpec,
    budget: int,
    seed: int,
    **changes: Any,
) -> AttackConfig:
    return replace(
        base_config, budget=budget, surrogate=surrogate, validation=split.test, seed=seed, **changes
    )


@dataclass(frozen=True)
class SweepResult:
    dataset: str
    victim: str
    budgets: Tuple[float, ...]
    clean_error: float
    curves: Dict[Strategy, Tuple[float, ...]]
    flips: Dict[Strategy, Tuple[int, ...]]

    def to_json(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset,
            "victim": self.victim,
            "budgets": list(self.budgets),
            "clean_error": self.clean_error,
            "curves": {str(strategy): list(curve) for strategy, curve in self.curves.items()},
            "flips": {str(strategy): list(flips) for strategy, flips in self.flips.items()},
        }


def budget_sweep(
    split: TrainTestSplit,
    strategies: Iterable[Any],
    victim: ClassifierSpec,
    budgets: Sequence[float],
    base_config: AttackConfig,
    *,
    surrogate: Optional[ClassifierSpec] = None,
    gbdt_params: GbdtParams = GbdtParams(),
    jobs: int = 1,
    verbose: bool = False,
) -> SweepResult:
    """Victim test error per (strategy, budget). The surrogate defaults to the victim itself."""
    budgets = tuple(_check_fraction(budget) for budget in budgets)
    if list(budgets) != sorted(budgets):
        raise InvalidAttackConfig(f"Budgets must be sorted in ascending order, got {budgets}")
    strategies = tuple(dict.fromkeys(Strategy.parse(strategy) for strategy in strategies))
    surrogate = surrogate or victim

    gradients = _gradients(split, base_config, gbdt_params)
    clean_error = victim_error(
        victim, split.train, split.train.labels, split.test, base_config.seed
    )

    cells: List[Cell[_Outcome]] = []
    for strategy in strategies:
        for budget in budgets:
            if (units := budget_from_fraction(budget, split.train.n)) == 0:
                continue
            seed = derive_seed(base_config.seed, surrogate.label, victim.label, budget)
            config = _cell_config(base_config, split, surrogate, units, seed)
            task = partial(
                _sweep_cell, strategy, split, config, gradients, victim, base_config.seed
            )
            cells.append(Cell((strategy, budget), task))

    results = run_cells(cells, jobs=jobs, verbose=verbose)
    curves: Dict[Strategy, Tuple[float, ...]] = {}
    flips: Dict[Strategy, Tuple[int, ...]] = {}
    for strategy in strategies:
        outcomes = [results.get((strategy, budget)) for budget in budgets]
        curves[strategy] = tuple(clean_error if _ is None else _.error for _ in outcomes)
        flips[strategy] = tuple(0 if _ is None else _.attack.flips for _ in outcomes)

    return SweepResult(split.train.name, victim.label, budgets, clean_error, curves, flips)


def _sweep_cell(
    strategy: Strategy,
    split: TrainTestSplit,
    config: AttackConfig,
    gradients: GradientProfile,
    victim: ClassifierSpec,
    master_seed: int,
) -> _Outcome:
    attack, (error,) = _attack_cell(strategy, split, config, gradients, (victim,), master_seed)
    return _Outcome(error, attack)


@dataclass(frozen=True)
class TransferMatrix:
    """Victim test errors indexed by [surrogate, victim]."""

    dataset: str
    budget: float
    surrogates: Tuple[ClassifierSpec, ...]
    victims: Tuple[ClassifierSpec, ...]
    cells: np.ndarray = field(repr=False)
    clean_errors: Tuple[float, ...]
    flips: Tuple[int, ...] = ()

    def is_diagonal(self, surrogate: int, victim: int) -> bool:
        return self.surrogates[surrogate] == self.victims[victim]

    def increase(self) -> np.ndarray:
        """Error increase of every cell over the victim's clean error."""
        return self.cells - np.asarray(self.clean_errors)[np.newaxis, :]

    def highlighted(self) -> Set[Tuple[int, int]]:
        """The off-diagonal maximum of every victim column, all ties included."""
        marked: Set[Tuple[int, int]] = set()
        for victim in range(len(self.victims)):
            rows = [s for s in range(len(self.surrogates)) if not self.is_diagonal(s, victim)]
            if not rows:
                continue
            best = max(self.cells[s, victim] for s in rows)
            marked.update(
                (s, victim) for s in rows if self.cells[s, victim] >= best - HIGHLIGHT_TOLERANCE
            )
        return marked

    def to_json(self) -> Dict[str, Any]:
        highlighted = self.highlighted()
        return {
            "dataset": self.dataset,
            "budget": self.budget,
            "surrogates": [spec.label for spec in self.surrogates],
            "victims": [spec.label for spec in self.victims],
            "clean_errors": list(self.clean_errors),
            "flips": list(self.flips),
            "cells": [
                [
                    {"error": float(self.cells[s, v]), "highlighted": (s, v) in highlighted}
                    for v in range(len(self.victims))
                ]
                for s in range(len(self.surrogates))
            ],
        }


def transferability_matrix(
    split: TrainTestSplit,
    surrogates: Sequence[ClassifierSpec],
    victims: Sequence[ClassifierSpec],
    budget_fraction: float,
    base_config: AttackConfig,
    *,
    strategy: Strategy = Strategy.Ogds,
    gbdt_params: GbdtParams = GbdtParams(),
    jobs: int = 1,
    verbose: bool = False,
) -> TransferMatrix:
    """One attack per surrogate; every victim is then fit on that surrogate's poisoned labels."""
    budget = _check_fraction(budget_fraction)
    surrogates, victims = tuple(surrogates), tuple(victims)
    if not surrogates or not victims:
        raise InvalidAttackConfig(
            "A transferability matrix needs at least one surrogate and one victim"
        )

    clean_errors = tuple(
        victim_error(victim, split.train, split.train.labels, split.test, base_config.seed)
        for victim in victims
    )
    units = budget_from_fraction(budget, split.train.n)
    if units == 0:
        return TransferMatrix(
            dataset=split.train.name,
            budget=budget,
            surrogates=surrogates,
            victims=victims,
            cells=np.tile(np.asarray(clean_errors), (len(surrogates), 1)),
            clean_errors=clean_errors,
            flips=(0,) * len(surrogates),
        )

    gradients = _gradients(split, base_config, gbdt_params)
    attack_cells = []
    for row, surrogate in enumerate(surrogates):
        seed = derive_seed(base_config.seed, surrogate.label, budget)
        config = _cell_config(base_config, split, surrogate, units, seed)
        task = partial(_attack_cell, strategy, split, config, gradients, victims, base_config.seed)
        attack_cells.append(Cell(row, task))
    results = run_cells(attack_cells, jobs=jobs, verbose=verbose)

    return TransferMatrix(
        dataset=split.train.name,
        budget=budget,
        surrogates=surrogates,
        victims=victims,
        cells=np.array([results[row][1] for row in range(len(surrogates))], dtype=float),
        clean_errors=clean_errors,
        flips=tuple(results[row][0].flips for row in range(len(surrogates))),
    )


@dataclass(frozen=True)
class SusceptibilityReport:
    matrix: TransferMatrix

    @property
    def clean_errors(self) -> Tuple[float, ...]:
        return self.matrix.clean_errors

    def worst_increase(self) -> np.ndarray:
        """Per victim, the largest error increase any surrogate achieved."""
        return self.matrix.increase().max(axis=0)

    def ranking(self) -> List[Tuple[str, float]]:
        """Victims from most to least susceptible; ties keep the configured order."""
        worst = self.worst_increase()
        order = np.argsort(-worst, kind="stable")
        return [(self.matrix.victims[v].label, float(worst[v])) for v in order]

    def to_json(self) -> Dict[str, Any]:
        return {
            **self.matrix.to_json(),
            "ranking": [
                {"victim": label, "increase": increase} for label, increase in self.ranking()
            ],
        }


def susceptibility_report(
    split: TrainTestSplit,
    surrogates: Sequence[ClassifierSpec],
    victims: Sequence[ClassifierSpec],
    budget: float,
    base_config: AttackConfig,
    **options: Any,
) -> SusceptibilityReport:
    return SusceptibilityReport(
        transferability_matrix(split, surrogates, victims, budget, base_config, **options)
    )


@dataclass(frozen=True)
class CostAnalysisRow:
    scheme: str
    budget: float
    # the budget in cost units, floor(budget * n)
    budget_units: int
    error: float
    flips: int
    count_a: int  # flips from the large-gradient block
    count_b: int  # flips from the small-gradient block
    total_cost: float

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)


def cost_analysis(
    split: TrainTestSplit,
    budgets_and_schemes: Iterable[Tuple[CostScheme, float]],
    base_config: AttackConfig,
    *,
    victim: Optional[ClassifierSpec] = None,
    gbdt_params: GbdtParams = GbdtParams(),
    jobs: int = 1,
    verbose: bool = False,
) -> List[CostAnalysisRow]:
    """OGDS once per (cost scheme, budget), rows in input order.

    The victim defaults to the surrogate. Budgets are in cost units: floor(budget * n).
    """
    pairs = [(scheme, _check_fraction(budget)) for scheme, budget in budgets_and_schemes]
    surrogate = base_config.surrogate
    victim = victim or surrogate

    gradients = _gradients(split, base_config, gbdt_params)
    clean_error = victim_error(
        victim, split.train, split.train.labels, split.test, base_config.seed
    )

    cells: List[Cell[_Outcome]] = []
    for position, (scheme, budget) in enumerate(pairs):
        if (units := budget_from_fraction(budget, split.train.n)) == 0:
            continue
        seed = derive_seed(base_config.seed, surrogate.label, victim.label, budget)
        config = _cell_config(
            base_config, split, surrogate, units, seed, cost_scheme=scheme, costs=None
        )
        task = partial(
            _sweep_cell, Strategy.Ogds, split, config, gradients, victim, base_config.seed
        )
        cells.append(Cell(position, task))
    results = run_cells(cells, jobs=jobs, verbose=verbose)

    rows = []
    for position, (scheme, budget) in enumerate(pairs):
        units = budget_from_fraction(budget, split.train.n)
        if (outcome := results.get(position)) is None:
            rows.append(CostAnalysisRow(scheme.name, budget, units, clean_error, 0, 0, 0, 0.0))
            continue
        attack = outcome.attack
        rows.append(
            CostAnalysisRow(
                scheme=scheme.name,
                budget=budget,
                budget_units=units,
                error=outcome.error,
                flips=attack.flips,
                count_a=attack.count_large,
                count_b=attack.count_small,
                total_cost=attack.total_cost,
            )
        )
    return rows
