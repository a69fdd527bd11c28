"""The attack strategies and their baselines.

Every strategy only ever changes labels; features of the training set are shared, never written.
"""

import math
from typing import Callable, List, Optional, Sequence

import numpy as np
from coveo_styles.styles import echo

from label_subversion.attacks.config import AttackConfig, AttackResult, Strategy
from label_subversion.attacks.flip import flip, materialize
from label_subversion.attacks.lp import (
    ErrorVectors,
    IndicatorVector,
    solve_flip_lp,
    sorted_greedy_selection,
)
from label_subversion.classifiers.factory import fit
from label_subversion.classifiers.model import TrainedModel
from label_subversion.datasets import Dataset
from label_subversion.exceptions import (
    InvalidAttackConfig,
    SubversionException,
    SurrogateFitFailed,
)
from label_subversion.sampling import (
    CandidateSet,
    GradientProfile,
    build_candidate_set,
    check_ratios,
)
from label_subversion.utils import derive_seed

Selection = Callable[[ErrorVectors, np.ndarray], IndicatorVector]


def _candidate_set(config: AttackConfig, gradients: GradientProfile) -> CandidateSet:
    check_ratios(config.a, config.b)
    seed = derive_seed(config.seed, "candidates")
    return build_candidate_set(gradients, config.a, config.b, seed)


def _fit_surrogate(config: AttackConfig, data: Dataset, iteration: int) -> TrainedModel:
    try:
        return fit(config.surrogate, data, derive_seed(config.seed, "surrogate", iteration))
    except SubversionException as exception:
        raise SurrogateFitFailed(
            f"The {config.surrogate.label} surrogate failed at iteration {iteration}: {exception}"
        ) from exception


def slot_residuals(model: TrainedModel, train: Dataset, candidate: CandidateSet) -> np.ndarray:
    """Loss of every candidate under its original label (first k slots), then its complement."""
    features = train.features[candidate.indices]
    original = train.labels[candidate.indices]
    return np.concatenate((model.loss(features, original), model.loss(features, -original)))


def _result(
    strategy: Strategy,
    train: Dataset,
    poisoned: np.ndarray,
    candidate: CandidateSet,
    budget: int,
    costs: Optional[np.ndarray] = None,
    val_errors: Sequence[float] = (),
    chosen_iteration: Optional[int] = None,
) -> AttackResult:
    flipped_mask = poisoned[candidate.indices] != train.labels[candidate.indices]
    small = candidate.small_mask
    spent = costs[flipped_mask] if costs is not None else flipped_mask
    total_cost = float(np.sum(spent))
    poisoned.setflags(write=False)
    return AttackResult(
        strategy=strategy,
        budget=budget,
        poisoned_labels=poisoned,
        flipped_indices=np.flatnonzero(poisoned != train.labels),
        candidate=candidate,
        val_errors=tuple(val_errors),
        chosen_iteration=chosen_iteration,
        count_large=int(np.count_nonzero(flipped_mask & ~small)),
        count_small=int(np.count_nonzero(flipped_mask & small)),
        total_cost=total_cost,
    )


def gds(train: Dataset, config: AttackConfig, gradients: GradientProfile) -> AttackResult:
    """Random indicator draws over a fixed candidate set; keeps the most damaging draw."""
    validation = config.require_validation()
    candidate = _candidate_set(config, gradients)
    costs = config.costs_for(candidate)
    walk_costs = None if np.all(costs == 1.0) else costs
    rng = np.random.default_rng(derive_seed(config.seed, Strategy.Gds))

    labelings: List[np.ndarray] = []
    val_errors: List[float] = []
    for iteration in range(1, config.t_max + 1):
        indicators = rng.integers(0, 2, size=candidate.k)
        labels = flip(indicators, train.labels, candidate, config.budget, walk_costs)
        model = _fit_surrogate(config, train.with_labels(labels), iteration)
        labelings.append(labels)
        val_errors.append(model.error_rate(validation))

    chosen = int(np.argmax(val_errors))
    return _result(
        Strategy.Gds, train, labelings[chosen], candidate, config.budget, costs, val_errors, chosen
    )


def _optimized_loop(
    strategy: Strategy,
    train: Dataset,
    config: AttackConfig,
    gradients: GradientProfile,
    select: Selection,
) -> AttackResult:
    """Solve, materialize, retrain, until t_max or until the selection stops changing."""
    validation = config.require_validation()
    candidate = _candidate_set(config, gradients)
    clean_model = _fit_surrogate(config, train, 0)

    if candidate.k == 0:
        echo.warning(f"{strategy}: the candidate set is empty; returning the clean labeling.")
        clean = np.array(train.labels, copy=True)
        clean_error = clean_model.error_rate(validation)
        return _result(strategy, train, clean, candidate, config.budget, None, (clean_error,), 0)

    costs = config.costs_for(candidate)
    errs = ErrorVectors.initial(slot_residuals(clean_model, train, candidate))
    previous: Optional[IndicatorVector] = None
    labelings: List[np.ndarray] = []
    val_errors: List[float] = []

    for iteration in range(1, config.t_max + 1):
        indicators = select(errs, costs)
        if indicators == previous:
            break
        labels = materialize(indicators, train.labels, candidate)
        model = _fit_surrogate(config, train.with_labels(labels), iteration)
        errs = ErrorVectors(errs.e, slot_residuals(model, train, candidate))
        labelings.append(labels)
        val_errors.append(model.error_rate(validation))
        previous = indicators

    chosen = int(np.argmax(val_errors))
    return _result(
        strategy, train, labelings[chosen], candidate, config.budget, costs, val_errors, chosen
    )


def ogds(train: Dataset, config: AttackConfig, gradients: GradientProfile) -> AttackResult:
    def _select(errs: ErrorVectors, costs: np.ndarray) -> IndicatorVector:
        return solve_flip_lp(errs, costs, config.budget).indicators

    return _optimized_loop(Strategy.Ogds, train, config, gradients, _select)


def sgds(train: Dataset, config: AttackConfig, gradients: GradientProfile) -> AttackResult:
    """The OGDS loop with a sort-and-pick selection in place of the LP. Requires uniform costs."""

    def _select(errs: ErrorVectors, costs: np.ndarray) -> IndicatorVector:
        if costs.size and not np.all(costs == costs[0]):
            raise InvalidAttackConfig(
                "sGDS only supports uniform flip costs; use OGDS for varied costs"
            )
        flip_limit = math.floor(config.budget / costs[0] + 1e-9) if costs.size else 0
        return sorted_greedy_selection(errs, flip_limit, pair_normalized=config.pair_normalized)

    return _optimized_loop(Strategy.Sgds, train, config, gradients, _select)


def linear_flip_baseline(train: Dataset, gradients: GradientProfile, budget: int) -> AttackResult:
    """Flip the `budget` instances at the tail of the gradient ranking."""
    if not 0 <= budget <= train.n:
        raise InvalidAttackConfig(f"The budget must be within [0, {train.n}], got {budget}")
    tail = gradients.order[train.n - budget :][::-1].astype(np.int64)
    candidate = CandidateSet(indices=tail, count_small=budget, count_large=0)
    poisoned = flip(np.ones(budget), train.labels, candidate, budget)
    return _result(Strategy.Linear, train, poisoned, candidate, budget)


def random_flip_baseline(train: Dataset, budget: int, seed: int) -> AttackResult:
    """Flip `budget` distinct instances drawn uniformly."""
    if not 0 <= budget <= train.n:
        raise InvalidAttackConfig(f"The budget must be within [0, {train.n}], got {budget}")
    everyone = np.arange(train.n, dtype=np.int64)
    candidate = CandidateSet(indices=everyone, count_small=0, count_large=train.n)
    indicators = np.zeros(train.n, dtype=np.int64)
    indicators[np.random.default_rng(seed).choice(train.n, size=budget, replace=False)] = 1
    poisoned = flip(indicators, train.labels, candidate, budget)
    return _result(Strategy.Random, train, poisoned, candidate, budget)


def run_strategy(
    strategy: Strategy, train: Dataset, config: AttackConfig, gradients: GradientProfile
) -> AttackResult:
    if strategy is Strategy.Gds:
        return gds(train, config, gradients)
    if strategy is Strategy.Ogds:
        return ogds(train, config, gradients)
    if strategy is Strategy.Sgds:
        return sgds(train, config, gradients)
    if strategy is Strategy.Linear:
        return linear_flip_baseline(train, gradients, config.budget)
    return random_flip_baseline(train, config.budget, derive_seed(config.seed, Strategy.Random))
