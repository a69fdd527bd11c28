from enum import Enum
from typing import Dict, Final, Union


class ClassifierKind(Enum):
    LogisticRegression = "logistic_regression"
    LinearSvm = "linear_svm"
    GaussianNb = "gaussian_nb"
    Knn = "knn"
    Gbdt = "gbdt"

    def __str__(self) -> str:
        return self.value

    @property
    def label(self) -> str:
        """Short name used as report coordinates, e.g. LR or KNN."""
        return _LABELS[self]

    @property
    def is_linear(self) -> bool:
        return self in (ClassifierKind.LogisticRegression, ClassifierKind.LinearSvm)

    @classmethod
    def parse(cls, value: Union[str, "ClassifierKind"]) -> "ClassifierKind":
        """Accepts the kind itself, its value or its short label, case-insensitive."""
        if isinstance(value, ClassifierKind):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for kind in cls:
            if key in (kind.value, kind.label.lower()):
                return kind
        expected = [kind.value for kind in cls]
        raise ValueError(f"Unknown classifier kind {value!r}; expected one of {expected}")


_LABELS: Final[Dict[ClassifierKind, str]] = {
    ClassifierKind.LogisticRegression: "LR",
    ClassifierKind.LinearSvm: "SVM",
    ClassifierKind.GaussianNb: "NB",
    ClassifierKind.Knn: "KNN",
    ClassifierKind.Gbdt: "GBDT",
}
