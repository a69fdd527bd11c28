from typing import Final, Optional

import numpy as np

from label_subversion.attacks.lp import IndicatorVector
from label_subversion.exceptions import InvalidAttackConfig
from label_subversion.sampling import CandidateSet

_BUDGET_SLACK: Final[float] = 1e-9


def flip(
    indicators: np.ndarray,
    labels: np.ndarray,
    candidate: CandidateSet,
    budget: float,
    costs: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Flip the candidates whose indicator is 1, walking them in stored order.

    Without costs the walk stops after `budget` flips. With costs, a flip that would overspend
    the budget is skipped and the walk goes on.
    """
    indicators = np.asarray(indicators)
    if indicators.shape != (candidate.k,):
        raise InvalidAttackConfig(
            f"Expected {candidate.k} indicators, got shape {indicators.shape}"
        )
    if costs is not None and np.shape(costs) != (candidate.k,):
        raise InvalidAttackConfig(f"Expected {candidate.k} costs, got shape {np.shape(costs)}")

    poisoned = np.array(labels, copy=True)
    spent = 0.0
    for position in np.flatnonzero(indicators == 1):
        cost = 1.0 if costs is None else float(costs[position])
        if spent + cost > budget + _BUDGET_SLACK:
            if costs is None:
                break
            continue
        index = candidate.indices[position]
        poisoned[index] = -poisoned[index]
        spent += cost
    return poisoned


def materialize(
    indicators: IndicatorVector, labels: np.ndarray, candidate: CandidateSet
) -> np.ndarray:
    """The labeling y' selected by q: complement labels wherever q_{i+k} = 1."""
    if indicators.k != candidate.k or not indicators.is_paired():
        raise InvalidAttackConfig(
            "The indicator vector must hold one paired decision per candidate"
        )
    poisoned = np.array(labels, copy=True)
    chosen = candidate.indices[indicators.complement == 1]
    poisoned[chosen] = -poisoned[chosen]
    return poisoned
