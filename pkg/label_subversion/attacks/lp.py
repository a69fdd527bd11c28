"""The paired label-selection program and its solvers.

Slot i < k keeps candidate i's original label, slot i + k takes its complement. The program
minimizes sum(q * (eps - e)) under q_i + q_{i+k} = 1 and sum(c_i * q_{i+k}) <= budget.
"""

from dataclasses import dataclass
from typing import Final, NamedTuple, Optional

import numpy as np

from label_subversion.exceptions import InvalidAttackConfig, OracleTooLarge

MAX_ORACLE_CANDIDATES: Final[int] = 20
_BUDGET_SLACK: Final[float] = 1e-9
_ORACLE_BLOCK: Final[int] = 1 << 14


@dataclass(frozen=True)
class ErrorVectors:
    """Residuals over the 2k slots.

    `e` is measured under the clean model and `eps` under the latest poisoned one.
    """

    e: np.ndarray
    eps: np.ndarray

    def __post_init__(self) -> None:
        e, eps = np.asarray(self.e, dtype=float), np.asarray(self.eps, dtype=float)
        if e.shape != eps.shape or e.ndim != 1 or e.shape[0] % 2:
            raise InvalidAttackConfig(
                f"e and eps must both have length 2k, got {e.shape} and {eps.shape}"
            )
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "eps", eps)

    @classmethod
    def initial(cls, e: np.ndarray) -> "ErrorVectors":
        """eps starts at zero before the first iteration."""
        return cls(e, np.zeros_like(np.asarray(e, dtype=float)))

    @property
    def k(self) -> int:
        return int(self.e.shape[0] // 2)

    @property
    def coefficients(self) -> np.ndarray:
        return self.eps - self.e

    def pair_deltas(self) -> np.ndarray:
        """Change of the objective when candidate i switches to its complement label."""
        coefficients = self.coefficients
        return coefficients[self.k :] - coefficients[: self.k]


@dataclass(frozen=True)
class IndicatorVector:
    q: np.ndarray

    @classmethod
    def from_complements(cls, complement: np.ndarray) -> "IndicatorVector":
        complement = np.asarray(complement, dtype=np.int64)
        return cls(np.concatenate((1 - complement, complement)))

    @property
    def k(self) -> int:
        return int(self.q.shape[0] // 2)

    @property
    def complement(self) -> np.ndarray:
        """1 where the candidate takes its complement label."""
        return self.q[self.k :]

    def objective(self, errs: ErrorVectors) -> float:
        return float(self.q @ errs.coefficients)

    def cost(self, costs: np.ndarray) -> float:
        return float(self.complement @ costs)

    def is_paired(self) -> bool:
        return bool(np.all(self.q[: self.k] + self.q[self.k :] == 1))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, IndicatorVector):
            return bool(np.array_equal(self.q, other.q))
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.q.tobytes())


class LpSolution(NamedTuple):
    indicators: IndicatorVector
    # optimum of the relaxation with the boundary item taken fractionally.
    # it lower-bounds the integer program.
    relaxed_objective: float


def _check_costs(errs: ErrorVectors, costs: np.ndarray) -> np.ndarray:
    costs = np.asarray(costs, dtype=float)
    if costs.shape != (errs.k,) or np.any(costs <= 0):
        raise InvalidAttackConfig(f"Expected {errs.k} positive costs, got shape {costs.shape}")
    return costs


def solve_flip_lp(errs: ErrorVectors, costs: np.ndarray, budget: float) -> LpSolution:
    """Analytic optimum of the relaxed program (a fractional knapsack over the pairs).

    Pairs with a negative delta are taken in ascending delta / cost order while the budget lasts.
    The item that only fits fractionally is rounded down and ends the walk; under uniform costs
    there is no such item and the solution is the exact integer optimum.
    """
    costs = _check_costs(errs, costs)
    deltas = errs.pair_deltas()
    complement = np.zeros(errs.k, dtype=np.int64)
    relaxed = float(errs.coefficients[: errs.k].sum())
    remaining = float(budget)

    beneficial = np.flatnonzero(deltas < 0)
    for pair in beneficial[np.argsort(deltas[beneficial] / costs[beneficial], kind="stable")]:
        if costs[pair] <= remaining + _BUDGET_SLACK:
            complement[pair] = 1
            remaining -= costs[pair]
            relaxed += deltas[pair]
        else:
            relaxed += deltas[pair] * max(remaining, 0.0) / costs[pair]
            break

    return LpSolution(IndicatorVector.from_complements(complement), relaxed)


def ilp_bruteforce(errs: ErrorVectors, costs: np.ndarray, budget: float) -> IndicatorVector:
    """Exhaustive integer optimum over all 2^k pairings; a test oracle for small k."""
    if errs.k > MAX_ORACLE_CANDIDATES:
        raise OracleTooLarge(
            f"Exhaustive search is limited to {MAX_ORACLE_CANDIDATES} candidates, got {errs.k}"
        )
    costs = _check_costs(errs, costs)
    deltas = errs.pair_deltas()
    bits = np.arange(errs.k)

    best_value: float = np.inf
    best_mask: Optional[np.ndarray] = None
    for start in range(0, 1 << errs.k, _ORACLE_BLOCK):
        numbers = np.arange(start, min(start + _ORACLE_BLOCK, 1 << errs.k))
        masks = (numbers[:, np.newaxis] >> bits) & 1
        values = np.where(masks @ costs <= budget + _BUDGET_SLACK, masks @ deltas, np.inf)
        position = int(np.argmin(values))
        if values[position] < best_value:
            best_value, best_mask = float(values[position]), masks[position]

    assert best_mask is not None  # the empty selection is always feasible
    return IndicatorVector.from_complements(best_mask)


def sorted_greedy_selection(
    errs: ErrorVectors, budget: int, *, pair_normalized: bool = True
) -> IndicatorVector:
    """Walk the 2k coefficients in ascending order and fix each pair with its first slot seen.

    A complement slot reached first flips the candidate, counted against the budget; an original
    slot reached first keeps the label. Pairs left undecided keep their label.

    With `pair_normalized`, each pair is shifted by its original slot's coefficient (a constant of
    the objective under the pairing constraint): original slots sort at 0 and complements at their
    delta, which makes the walk select exactly what `solve_flip_lp` selects under uniform costs.
    """
    k = errs.k
    if pair_normalized:
        coefficients = np.concatenate((np.zeros(k), errs.pair_deltas()))
    else:
        coefficients = errs.coefficients

    decided = np.zeros(k, dtype=bool)
    complement = np.zeros(k, dtype=np.int64)
    flips = 0
    for slot in np.argsort(coefficients, kind="stable"):
        if flips >= budget:
            break
        pair = slot - k if slot >= k else slot
        if decided[pair]:
            continue
        decided[pair] = True
        if slot >= k:
            complement[pair] = 1
            flips += 1

    return IndicatorVector.from_complements(complement)
