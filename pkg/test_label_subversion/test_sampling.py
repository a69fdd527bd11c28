import numpy as np
import pytest
from coveo_testing.markers import UnitTest
from coveo_testing.parametrize import parametrize

from label_subversion.datasets import TrainTestSplit
from label_subversion.exceptions import CandidateSetError
from label_subversion.gbdt import GbdtParams, logistic_gradients, predict_raw, train_gbdt
from label_subversion.sampling import (
    CandidateSet,
    GradientOrder,
    build_candidate_set,
    check_ratios,
    gradient_profile,
    rank_by_gradient,
)
from test_label_subversion.data_mock.fixtures import linear_split

_ = linear_split  # mark the fixture as used


def _profile(n: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1, 1, n)


@UnitTest
def test_rank_by_gradient() -> None:
    profile = rank_by_gradient(np.array([0.1, -0.9, 0.5, -0.5]))
    assert profile.order.tolist() == [1, 2, 3, 0]
    assert profile.ranks().tolist() == [4, 1, 2, 3]


@UnitTest
def test_rank_ties_keep_index_order() -> None:
    assert rank_by_gradient(np.array([0.2, -0.2, 0.2])).order.tolist() == [0, 1, 2]


@UnitTest
@parametrize("g", (np.array([]), np.array([0.1, np.nan]), np.zeros((2, 2))))
def test_rank_by_gradient_invalid(g: np.ndarray) -> None:
    with pytest.raises(CandidateSetError):
        rank_by_gradient(g)


@UnitTest
def test_ranks_are_a_permutation() -> None:
    ranks = rank_by_gradient(_profile(57)).ranks()
    assert sorted(ranks.tolist()) == list(range(1, 58))


@UnitTest
def test_candidate_set_sizes() -> None:
    candidate = build_candidate_set(rank_by_gradient(_profile(100)), a=0.01, b=0.49, seed=0)
    assert (candidate.k, candidate.count_small, candidate.count_large) == (50, 49, 1)
    assert len(set(candidate.indices.tolist())) == 50


@UnitTest
def test_candidate_small_block_holds_the_smallest_gradients() -> None:
    g = np.array([0.9, 0.05, -0.6, 0.3, -0.01, 0.7, 0.2, -0.8, 0.4, 0.1])
    candidate = build_candidate_set(rank_by_gradient(g), a=0.2, b=0.5, seed=3)
    assert candidate.indices[:5].tolist() == [4, 1, 9, 6, 3]
    large = set(candidate.indices[5:].tolist())
    assert len(large) == 2
    assert large <= {0, 2, 5, 7, 8}


@UnitTest
def test_candidate_large_block_depends_on_the_seed() -> None:
    profile = rank_by_gradient(_profile(400))
    first = build_candidate_set(profile, a=0.1, b=0.2, seed=1)
    same = build_candidate_set(profile, a=0.1, b=0.2, seed=1)
    other = build_candidate_set(profile, a=0.1, b=0.2, seed=2)
    assert np.array_equal(first.indices, same.indices)
    assert np.array_equal(first.indices[:80], other.indices[:80])
    assert not np.array_equal(first.indices[80:], other.indices[80:])


@UnitTest
def test_empty_candidate_set() -> None:
    candidate = build_candidate_set(rank_by_gradient(_profile(10)), a=0.0, b=0.0, seed=0)
    assert candidate.k == 0
    assert CandidateSet.empty().k == 0


@UnitTest
def test_whole_training_set() -> None:
    candidate = build_candidate_set(rank_by_gradient(_profile(10)), a=0.5, b=0.5, seed=0)
    assert sorted(candidate.indices.tolist()) == list(range(10))


@UnitTest
@parametrize(("a", "b"), ((-0.1, 0.5), (0.5, -0.1), (0.6, 0.5)))
def test_invalid_ratios(a: float, b: float) -> None:
    with pytest.raises(CandidateSetError):
        check_ratios(a, b)


@UnitTest
def test_small_mask() -> None:
    candidate = build_candidate_set(rank_by_gradient(_profile(20)), a=0.1, b=0.2, seed=0)
    assert candidate.small_mask.tolist() == [True] * 4 + [False] * 2


@UnitTest
def test_gradient_profile_uses_the_final_model(linear_split: TrainTestSplit) -> None:
    params = GbdtParams(num_trees=5)
    profile = gradient_profile(linear_split.train, params)
    model, _ = train_gbdt(linear_split.train, params)
    raw = predict_raw(model, linear_split.train.features)
    expected = logistic_gradients(raw, linear_split.train.labels)
    assert np.allclose(profile.g, expected.g)
    assert profile.h is not None
    assert profile.n == linear_split.train.n


@UnitTest
def test_signed_ranking() -> None:
    g = np.array([0.9, -0.95, 0.1])
    assert rank_by_gradient(g).order.tolist() == [1, 0, 2]
    signed = rank_by_gradient(g, ordering=GradientOrder.Signed)
    assert signed.order.tolist() == [0, 2, 1]
    assert signed.ordering is GradientOrder.Signed


@UnitTest
def test_signed_tail_is_one_class(linear_split: TrainTestSplit) -> None:
    train = linear_split.train
    profile = gradient_profile(train, GbdtParams(num_trees=5), ordering=GradientOrder.Signed)
    positives = int((train.labels == 1).sum())
    candidate = build_candidate_set(profile, a=0.0, b=positives / train.n, seed=0)
    assert (train.labels[candidate.indices] == 1).all()
    # worst-fit positives lead the block
    assert np.all(np.diff(profile.g[candidate.indices]) >= 0)


@UnitTest
@parametrize(
    ("value", "expected"),
    (("signed", GradientOrder.Signed), (" Magnitude ", GradientOrder.Magnitude)),
)
def test_gradient_order_parse(value: str, expected: GradientOrder) -> None:
    assert GradientOrder.parse(value) is expected


@UnitTest
def test_gradient_order_parse_unknown() -> None:
    with pytest.raises(CandidateSetError):
        GradientOrder.parse("sideways")
