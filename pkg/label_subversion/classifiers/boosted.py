import numpy as np

from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.classifiers.model import TrainedModel
from label_subversion.datasets import Dataset
from label_subversion.gbdt import GbdtModel, GbdtParams, predict_raw, train_gbdt


class BoostedTrees(TrainedModel):
    kind = ClassifierKind.Gbdt

    def __init__(self, *, ensemble: GbdtModel, dimension: int) -> None:
        super().__init__(dimension=dimension)
        self.ensemble = ensemble

    def _decision_function(self, features: np.ndarray) -> np.ndarray:
        return predict_raw(self.ensemble, features)


def fit_boosted_trees(data: Dataset, params: GbdtParams, seed: int) -> BoostedTrees:
    ensemble, _ = train_gbdt(data, params, seed)
    return BoostedTrees(ensemble=ensemble, dimension=data.d)
