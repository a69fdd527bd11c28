import numpy as np
import pytest
from coveo_testing.markers import UnitTest
from coveo_testing.parametrize import parametrize

from label_subversion.classifiers.factory import fit
from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.classifiers.linear import LinearModel, linear_gradient, linear_objective
from label_subversion.classifiers.spec import ClassifierSpec
from label_subversion.datasets import Dataset, TrainTestSplit
from label_subversion.exceptions import (
    ConfigError,
    DimensionMismatch,
    EmptyDataset,
    InvalidParameters,
    SingleClassTraining,
)
from label_subversion.gbdt import GbdtParams
from test_label_subversion.data_mock.fixtures import (
    balanced_dataset,
    circular_split,
    linear_split,
)

_ = linear_split, circular_split  # mark the fixtures as used


@UnitTest
def test_logistic_gradient_matches_finite_differences() -> None:
    rng = np.random.default_rng(3)
    data = balanced_dataset(3, n=30, d=3)
    labels = data.labels.astype(float)
    step = 1e-6

    for _trial in range(10):
        weights, intercept = rng.standard_normal(3), float(rng.standard_normal())
        gradient_w, gradient_b = linear_gradient(weights, intercept, data.features, labels, 1.0)

        numeric_w = np.array(
            [
                (
                    linear_objective(weights + step * unit, intercept, data.features, labels, 1.0)
                    - linear_objective(weights - step * unit, intercept, data.features, labels, 1.0)
                )
                / (2 * step)
                for unit in np.eye(3)
            ]
        )
        numeric_b = (
            linear_objective(weights, intercept + step, data.features, labels, 1.0)
            - linear_objective(weights, intercept - step, data.features, labels, 1.0)
        ) / (2 * step)

        assert np.allclose(gradient_w, numeric_w, rtol=1e-5, atol=1e-5)
        assert np.isclose(gradient_b, numeric_b, rtol=1e-5, atol=1e-5)


@UnitTest
@parametrize("kind", (ClassifierKind.LogisticRegression, ClassifierKind.LinearSvm))
def test_linear_objective_never_increases(
    kind: ClassifierKind, linear_split: TrainTestSplit
) -> None:
    model = fit(ClassifierSpec(kind), linear_split.train)
    assert isinstance(model, LinearModel)
    assert np.all(np.diff(model.objective_trace) <= 0)


@UnitTest
@parametrize(
    ("kind", "max_error"),
    (
        (ClassifierKind.LogisticRegression, 0.1),
        (ClassifierKind.LinearSvm, 0.1),
        (ClassifierKind.GaussianNb, 0.1),
        (ClassifierKind.Knn, 0.12),
        (ClassifierKind.Gbdt, 0.12),
    ),
)
def test_classifiers_learn_linear_data(
    kind: ClassifierKind, max_error: float, linear_split: TrainTestSplit
) -> None:
    model = fit(ClassifierSpec(kind), linear_split.train)
    assert model.kind is kind
    assert model.error_rate(linear_split.test) <= max_error


@UnitTest
@parametrize("kind", (ClassifierKind.Knn, ClassifierKind.Gbdt))
def test_nonlinear_classifiers_learn_circular_data(
    kind: ClassifierKind, circular_split: TrainTestSplit
) -> None:
    model = fit(ClassifierSpec(kind), circular_split.train)
    assert model.error_rate(circular_split.test) <= 0.15


@UnitTest
def test_linear_models_fail_on_circular_data(circular_split: TrainTestSplit) -> None:
    model = fit(ClassifierSpec(ClassifierKind.LogisticRegression), circular_split.train)
    assert model.error_rate(circular_split.test) >= 0.25


@UnitTest
def test_zero_score_predicts_positive() -> None:
    model = LinearModel(
        kind=ClassifierKind.LogisticRegression, weights=np.zeros(2), intercept=0.0, gamma=1.0
    )
    assert model.predict(np.ones((3, 2))).tolist() == [1, 1, 1]


@UnitTest
@parametrize("kind", tuple(ClassifierKind))
def test_fit_requires_both_classes(kind: ClassifierKind) -> None:
    data = Dataset(np.arange(8.0).reshape(-1, 2), np.ones(4, dtype=int))
    with pytest.raises(SingleClassTraining):
        fit(ClassifierSpec(kind), data)


@UnitTest
@parametrize("kind", tuple(ClassifierKind))
def test_fit_is_deterministic(kind: ClassifierKind) -> None:
    data = balanced_dataset(4, n=30)
    first = fit(ClassifierSpec(kind), data, seed=5)
    second = fit(ClassifierSpec(kind), data, seed=5)
    points = balanced_dataset(8, n=20).features
    assert np.array_equal(first.decision_function(points), second.decision_function(points))


@UnitTest
@parametrize("kind", tuple(ClassifierKind))
def test_dimension_mismatch(kind: ClassifierKind) -> None:
    model = fit(ClassifierSpec(kind), balanced_dataset(4, n=30))
    with pytest.raises(DimensionMismatch):
        model.predict(np.zeros((2, 5)))


@UnitTest
def test_error_rate_on_empty_data() -> None:
    model = fit(ClassifierSpec(ClassifierKind.GaussianNb), balanced_dataset(4))
    with pytest.raises(EmptyDataset):
        model.error_rate(Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int)))


@UnitTest
def test_losses_are_non_negative() -> None:
    data = balanced_dataset(6, n=30)
    for kind in ClassifierKind:
        losses = fit(ClassifierSpec(kind), data).per_instance_loss(data)
        assert losses.shape == (30,)
        assert np.all(losses >= 0)


@UnitTest
def test_knn_votes() -> None:
    data = Dataset(np.array([[0.0], [1.0], [2.0], [10.0]]), np.array([1, 1, -1, -1]))
    model = fit(ClassifierSpec(ClassifierKind.Knn, k_neighbors=3), data)
    assert model.predict(np.array([[0.5], [9.0]])).tolist() == [1, -1]
    assert np.allclose(model.decision_function(np.array([[0.5]])), 1 / 3)


@UnitTest
@parametrize(
    ("value", "expected"),
    (
        ("LR", ClassifierKind.LogisticRegression),
        ("logistic_regression", ClassifierKind.LogisticRegression),
        ("linear-svm", ClassifierKind.LinearSvm),
        ("knn", ClassifierKind.Knn),
        (ClassifierKind.Gbdt, ClassifierKind.Gbdt),
    ),
)
def test_kind_parse(value: str, expected: ClassifierKind) -> None:
    assert ClassifierKind.parse(value) is expected


@UnitTest
def test_kind_parse_unknown() -> None:
    with pytest.raises(ValueError):
        ClassifierKind.parse("forest")


@UnitTest
def test_spec_short_form() -> None:
    assert ClassifierSpec.from_config("knn") == ClassifierSpec(ClassifierKind.Knn)


@UnitTest
def test_spec_mapping() -> None:
    spec = ClassifierSpec.from_config(
        {"kind": "gbdt", "gbdt-params": {"num-trees": 7, "max_depth": 2}}
    )
    assert spec.kind is ClassifierKind.Gbdt
    assert spec.gbdt_params == GbdtParams(num_trees=7, max_depth=2)


@UnitTest
@parametrize(
    "spec",
    (
        ClassifierSpec(),
        ClassifierSpec(ClassifierKind.Knn, k_neighbors=3),
        ClassifierSpec(ClassifierKind.Gbdt, gbdt_params=GbdtParams(num_trees=4)),
    ),
)
def test_spec_config_reads_back(spec: ClassifierSpec) -> None:
    assert ClassifierSpec.from_config(spec.to_config()) == spec


@UnitTest
@parametrize(
    "config",
    ({"kind": "knn", "neighbours": 3}, {"kind": "forest"}, {"kind": "lr", "gamma": -1}, 42),
)
def test_spec_invalid_config(config: object) -> None:
    with pytest.raises(ConfigError):
        ClassifierSpec.from_config(config)  # type: ignore[arg-type]


@UnitTest
def test_spec_validation() -> None:
    with pytest.raises(InvalidParameters):
        ClassifierSpec(ClassifierKind.Knn, k_neighbors=0)


@UnitTest
def test_negated_labels_negate_predictions() -> None:
    rng = np.random.default_rng(12)
    labels = np.repeat([1, -1], 20)
    features = rng.standard_normal((40, 2)) + 3.0 * labels[:, np.newaxis]
    data = Dataset(features, labels)
    spec = ClassifierSpec(ClassifierKind.LogisticRegression)

    original = fit(spec, data)
    negated = fit(spec, data.with_labels(-labels))
    grid = rng.uniform(-6.0, 6.0, size=(200, 2))
    assert original.error_rate(data) <= 0.05
    assert np.array_equal(negated.predict(grid), -original.predict(grid))


@UnitTest
@parametrize("kind", tuple(ClassifierKind))
def test_predict_is_the_sign_of_the_score(kind: ClassifierKind) -> None:
    for seed in range(5):
        model = fit(ClassifierSpec(kind), balanced_dataset(seed, n=30), seed=seed)
        points = np.random.default_rng(seed).uniform(-3.0, 3.0, size=(100, 2))
        scores = model.decision_function(points)
        assert np.array_equal(model.predict(points), np.where(scores >= 0, 1, -1))


@UnitTest
def test_tied_knn_vote_predicts_positive() -> None:
    data = Dataset(np.array([[0.0], [2.0], [10.0], [12.0]]), np.array([1, -1, 1, -1]))
    model = fit(ClassifierSpec(ClassifierKind.Knn, k_neighbors=2), data)
    assert model.decision_function(np.array([[1.0]])).tolist() == [0.0]
    assert model.predict(np.array([[1.0]])).tolist() == [1]


@UnitTest
@parametrize(
    ("kind", "label", "score", "expected"),
    (
        (ClassifierKind.LogisticRegression, 1, 0.0, np.log(2.0)),
        (ClassifierKind.LinearSvm, 1, 2.0, 0.0),
        (ClassifierKind.LogisticRegression, -1, 5.0, 5.0067153),
        (ClassifierKind.LinearSvm, -1, 0.5, 1.5),
    ),
)
def test_loss_values(kind: ClassifierKind, label: int, score: float, expected: float) -> None:
    model = LinearModel(kind=kind, weights=np.zeros(1), intercept=score, gamma=1.0)
    loss = model.loss(np.zeros((1, 1)), np.array([label]))
    assert loss.tolist() == pytest.approx([expected], abs=1e-6)


@UnitTest
def test_naive_bayes_without_evidence_scores_zero() -> None:
    features = np.array([[0.0, 1.0], [1.0, 3.0], [0.0, 1.0], [1.0, 3.0]])
    data = Dataset(features, np.array([1, 1, -1, -1]))
    model = fit(ClassifierSpec(ClassifierKind.GaussianNb), data)
    points = np.random.default_rng(2).standard_normal((10, 2))
    assert np.all(model.decision_function(points) == 0.0)
    assert model.predict(points).tolist() == [1] * 10


@UnitTest
def test_one_neighbor_reproduces_the_training_labels() -> None:
    data = balanced_dataset(5, n=40)
    model = fit(ClassifierSpec(ClassifierKind.Knn, k_neighbors=1), data)
    assert np.array_equal(model.predict(data.features), data.labels)
    assert model.error_rate(data) == 0.0
