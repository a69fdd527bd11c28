"""Reduce the training set to the candidates eligible for flipping, using the GBDT gradients.

Instances at the tail of the gradient ranking make up most of the candidate set. A few
instances drawn at random among the others keep the data distribution represented.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Final, Optional

import numpy as np
from coveo_styles.styles import echo

from label_subversion.datasets import Dataset, floor_count
from label_subversion.exceptions import CandidateSetError
from label_subversion.gbdt import GbdtParams, GradientPair, train_gbdt

DEFAULT_LARGE_RATIO: Final[float] = 0.01
DEFAULT_SMALL_RATIO: Final[float] = 0.49
# above this share of the training set, the reduction stops being a reduction.
RECOMMENDED_MAX_RATIO: Final[float] = 0.7


class GradientOrder(Enum):
    """How the gradient ranking sorts instances, descending.

    `magnitude` sorts |g|: the tail holds the best-fit instances of both classes.
    `signed` sorts g itself: with +/-1 labels the tail holds the positives, worst fit last.
    """

    Magnitude = "magnitude"
    Signed = "signed"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value: Any) -> "GradientOrder":
        if isinstance(value, GradientOrder):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError as exception:
            raise CandidateSetError(
                f"Unknown gradient order {value!r}; expected one of {[str(_) for _ in cls]}"
            ) from exception


@dataclass(frozen=True)
class GradientProfile:
    """Per-instance gradients and the permutation sorting them in descending order.

    Ties keep ascending original indices.
    """

    g: np.ndarray
    order: np.ndarray
    h: Optional[np.ndarray] = None
    ordering: GradientOrder = GradientOrder.Magnitude

    @property
    def n(self) -> int:
        return int(self.g.shape[0])

    def ranks(self) -> np.ndarray:
        """1-based position of every instance in `order`."""
        ranks = np.empty(self.n, dtype=np.int64)
        ranks[self.order] = np.arange(1, self.n + 1)
        return ranks


@dataclass(frozen=True)
class CandidateSet:
    """The small-gradient block (the ranking's tail, reversed) then the sampled large block."""

    indices: np.ndarray
    count_small: int
    count_large: int

    @property
    def k(self) -> int:
        return int(self.indices.shape[0])

    @property
    def small_mask(self) -> np.ndarray:
        """True for candidates of the small-gradient block, in candidate order."""
        return np.arange(self.k) < self.count_small

    @classmethod
    def empty(cls) -> "CandidateSet":
        return cls(np.empty(0, dtype=np.int64), 0, 0)


def rank_by_gradient(
    g: np.ndarray,
    h: Optional[np.ndarray] = None,
    *,
    ordering: GradientOrder = GradientOrder.Magnitude,
) -> GradientProfile:
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size == 0 or not np.isfinite(g).all():
        raise CandidateSetError("Gradients must be a non-empty vector of finite values")
    keys = np.abs(g) if ordering is GradientOrder.Magnitude else g
    order = np.argsort(-keys, kind="stable")
    return GradientProfile(g=g, order=order, h=h, ordering=ordering)


def gradient_profile(
    train: Dataset,
    params: GbdtParams,
    seed: int = 0,
    *,
    ordering: GradientOrder = GradientOrder.Magnitude,
) -> GradientProfile:
    """Fit one GBDT on the clean training data and rank its final gradients."""
    _, gradients = train_gbdt(train, params, seed)
    return profile_from_pair(gradients, ordering=ordering)


def profile_from_pair(
    gradients: GradientPair, *, ordering: GradientOrder = GradientOrder.Magnitude
) -> GradientProfile:
    return rank_by_gradient(gradients.g, gradients.h, ordering=ordering)


def check_ratios(a: float, b: float, *, warn: bool = True) -> None:
    if a < 0 or b < 0 or a + b > 1 + 1e-12:
        raise CandidateSetError(
            f"Sampling ratios must satisfy 0 <= a, b and a + b <= 1; got a={a}, b={b}"
        )
    if warn and a + b > RECOMMENDED_MAX_RATIO:
        echo.warning(
            f"a + b = {a + b:.2f} exceeds {RECOMMENDED_MAX_RATIO}: "
            "the candidate set covers most of the training data."
        )


def build_candidate_set(profile: GradientProfile, a: float, b: float, seed: int) -> CandidateSet:
    """floor(b*n) instances at the tail of the ranking, then floor(a*n) drawn from the rest."""
    check_ratios(a, b, warn=False)
    count_small, count_large = floor_count(b, profile.n), floor_count(a, profile.n)

    small = profile.order[profile.n - count_small :][::-1]
    remaining = profile.order[: profile.n - count_small]
    large = np.random.default_rng(seed).choice(remaining, size=count_large, replace=False)

    indices = np.concatenate((small, large)).astype(np.int64)
    indices.setflags(write=False)
    return CandidateSet(indices=indices, count_small=count_small, count_large=count_large)
