"""Fit any classifier of the zoo from its spec."""

from label_subversion.classifiers.boosted import fit_boosted_trees
from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.classifiers.knn import fit_knn
from label_subversion.classifiers.linear import fit_linear
from label_subversion.classifiers.model import TrainedModel
from label_subversion.classifiers.naive_bayes import fit_naive_bayes
from label_subversion.classifiers.spec import ClassifierSpec
from label_subversion.datasets import Dataset
from label_subversion.exceptions import SingleClassTraining


def fit(spec: ClassifierSpec, data: Dataset, seed: int = 0) -> TrainedModel:
    """Deterministic given (spec, data, seed)."""
    if data.n < 2 or not data.has_both_classes:
        raise SingleClassTraining(f"Cannot fit {spec.label} on {data}: both classes are required")

    if spec.kind.is_linear:
        return fit_linear(
            spec.kind,
            data,
            gamma=spec.gamma,
            max_iterations=spec.max_iterations,
            tolerance=spec.tolerance,
        )
    if spec.kind is ClassifierKind.GaussianNb:
        return fit_naive_bayes(data)
    if spec.kind is ClassifierKind.Knn:
        return fit_knn(data, spec.k_neighbors)
    assert spec.kind is ClassifierKind.Gbdt
    return fit_boosted_trees(data, spec.gbdt_params, seed)
