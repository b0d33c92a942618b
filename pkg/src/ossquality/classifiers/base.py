from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import PreconditionError, TrainingError
from ..features import EncodedDataset, FeatureDescriptor, apply_imputation, fit_imputation
from ..ingest import Label


@dataclass(frozen=True)
class Prediction:
    label: Label
    confidence: float
    successfulness: float


def label_for(successfulness: float) -> Label:
    return Label.SUCCESSFUL if successfulness >= 0.5 else Label.UNSUCCESSFUL


class Model:
    """Common surface of the trained classifiers.

    Every model carries the feature dictionary it was trained on and the
    mean-imputation values fitted on its training rows.
    """

    family = ""

    def __init__(self, features: Sequence[FeatureDescriptor], imputation: dict):
        self.features = tuple(features)
        self.imputation = dict(imputation)

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    def _matrix(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.features):
            raise PreconditionError(
                f"row has {X.shape[1]} values, model expects {len(self.features)}")
        return apply_imputation(X, self.features, self.imputation)

    def scores(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(confidence, successfulness)`` arrays for a batch of rows."""
        raise NotImplementedError

    def predict(self, row) -> Prediction:
        conf, succ = self.scores(np.asarray(row, dtype=np.float64).reshape(1, -1))
        return Prediction(label_for(succ[0]), float(conf[0]), float(succ[0]))

    def predict_many(self, X) -> list[Prediction]:
        conf, succ = self.scores(X)
        return [Prediction(label_for(s), float(c), float(s)) for c, s in zip(conf, succ)]

    def predict_labels(self, X) -> np.ndarray:
        """1 for Successful, 0 for Unsuccessful."""
        return (self.scores(X)[1] >= 0.5).astype(np.int8)

    def params(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_params(cls, features, imputation, params) -> "Model":
        raise NotImplementedError


def prepare(dataset: EncodedDataset, require_both: bool = True) -> tuple[np.ndarray, np.ndarray, dict]:
    """Validate a training set and return its imputed matrix, labels, and means."""
    if len(dataset) == 0:
        raise TrainingError("training set is empty")
    if dataset.y is None:
        raise TrainingError("training set is unlabeled")
    if require_both and len(np.unique(dataset.y)) < 2:
        raise TrainingError("training set contains a single class")
    means = fit_imputation(dataset)
    X = apply_imputation(dataset.X, dataset.features, means)
    return X, dataset.y.astype(np.int8), means


class MajorityModel(Model):
    """Baseline that always predicts the training majority class."""

    family = "majority"

    def __init__(self, features, imputation, positive_rate: float):
        super().__init__(features, imputation)
        self.positive_rate = float(positive_rate)

    def scores(self, X):
        X = self._matrix(X)
        succ = np.full(X.shape[0], 1.0 if self.positive_rate > 0.5 else 0.0)
        return succ.copy(), succ

    def params(self):
        return {"positive_rate": self.positive_rate}

    @classmethod
    def from_params(cls, features, imputation, params):
        return cls(features, imputation, params["positive_rate"])


def train_majority(dataset: EncodedDataset) -> MajorityModel:
    X, y, means = prepare(dataset, require_both=False)
    return MajorityModel(dataset.features, means, float(y.mean()))
