from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from label_subversion.classifiers.spec import ClassifierSpec
from label_subversion.datasets import Dataset, floor_count
from label_subversion.exceptions import InvalidAttackConfig
from label_subversion.sampling import (
    DEFAULT_LARGE_RATIO,
    DEFAULT_SMALL_RATIO,
    CandidateSet,
    GradientOrder,
)


class Strategy(Enum):
    Gds = "gds"
    Ogds = "ogds"
    Sgds = "sgds"
    Linear = "linear"
    Random = "random"

    def __str__(self) -> str:
        return self.value

    @property
    def is_iterative(self) -> bool:
        return self in (Strategy.Gds, Strategy.Ogds, Strategy.Sgds)

    @classmethod
    def parse(cls, value: Any) -> "Strategy":
        if isinstance(value, Strategy):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError as exception:
            raise InvalidAttackConfig(
                f"Unknown strategy {value!r}; expected one of {[str(_) for _ in cls]}"
            ) from exception


@dataclass(frozen=True)
class CostScheme:
    """Flip costs per candidate.

    `large_cost` applies to the sampled large-gradient block, `small_cost` to the small-gradient
    block. A scheme with equal costs is uniform.
    """

    large_cost: float = 1.0
    small_cost: float = 1.0
    label: Optional[str] = None

    def __post_init__(self) -> None:
        if self.large_cost <= 0 or self.small_cost <= 0:
            raise InvalidAttackConfig(f"Costs must be positive, got {self}")

    @property
    def is_uniform(self) -> bool:
        return self.large_cost == self.small_cost

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.is_uniform:
            return "uniform"
        return f"varied[{self.large_cost:g},{self.small_cost:g}]"

    def costs_for(self, candidate: CandidateSet) -> np.ndarray:
        return np.where(candidate.small_mask, self.small_cost, self.large_cost).astype(float)


def budget_from_fraction(fraction: float, n: int) -> int:
    """Budgets quoted as a share of the training set become a flip count by floor."""
    if not 0 <= fraction <= 1:
        raise InvalidAttackConfig(f"A budget fraction must be in [0, 1], got {fraction}")
    return floor_count(fraction, n)


@dataclass(frozen=True)
class AttackConfig:
    budget: int = 0
    a: float = DEFAULT_LARGE_RATIO
    b: float = DEFAULT_SMALL_RATIO
    t_max: int = 10
    seed: int = 0
    surrogate: ClassifierSpec = field(default_factory=ClassifierSpec)
    validation: Optional[Dataset] = field(default=None, repr=False)
    cost_scheme: CostScheme = field(default_factory=CostScheme)
    # explicit per-candidate costs; overrides `cost_scheme` when set.
    costs: Optional[Tuple[float, ...]] = None
    # sGDS: sort pair-normalized coefficients (matches the LP optimum) or the raw 2k coefficients.
    pair_normalized: bool = True
    # how the protocols rank the gradients they compute; attacks take a ready profile.
    gradient_order: GradientOrder = GradientOrder.Magnitude

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise InvalidAttackConfig(f"The budget must be non-negative, got {self.budget}")
        if self.t_max < 1:
            raise InvalidAttackConfig(f"t_max must be positive, got {self.t_max}")
        if self.costs is not None and any(cost <= 0 for cost in self.costs):
            raise InvalidAttackConfig("Explicit costs must all be positive")

    def costs_for(self, candidate: CandidateSet) -> np.ndarray:
        if self.costs is None:
            return self.cost_scheme.costs_for(candidate)
        if len(self.costs) != candidate.k:
            raise InvalidAttackConfig(
                f"{len(self.costs)} explicit costs were given for {candidate.k} candidates"
            )
        return np.array(self.costs, dtype=float)

    def require_validation(self) -> Dataset:
        if self.validation is None or self.validation.n == 0:
            raise InvalidAttackConfig("Iterative attacks need a non-empty validation dataset")
        return self.validation


@dataclass(frozen=True)
class AttackResult:
    strategy: Strategy
    budget: int
    poisoned_labels: np.ndarray = field(repr=False)
    flipped_indices: np.ndarray
    candidate: CandidateSet = field(repr=False)
    val_errors: Tuple[float, ...] = ()
    # index into val_errors of the kept labeling; None for the one-shot baselines.
    chosen_iteration: Optional[int] = None
    count_large: int = 0
    count_small: int = 0
    total_cost: float = 0.0

    @property
    def flips(self) -> int:
        return int(self.flipped_indices.shape[0])

    def to_json(self) -> Dict[str, Any]:
        return {
            "strategy": str(self.strategy),
            "budget": self.budget,
            "flipped_indices": [int(_) for _ in self.flipped_indices],
            "t_f": self.chosen_iteration,
            "val_errors": list(self.val_errors),
            "count_large": self.count_large,
            "count_small": self.count_small,
        }
