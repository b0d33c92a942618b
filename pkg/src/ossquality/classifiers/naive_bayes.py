"""Naive Bayes over mixed categorical and numeric features.

Categorical and binary features use smoothed likelihood tables, numeric
features a per-class Gaussian.  Class arrays are indexed 0 = Unsuccessful,
1 = Successful.
"""

from __future__ import annotations

import numpy as np

from ..errors import PreconditionError
from ..features import MISSING_CATEGORY, EncodedDataset
from .base import Model, prepare

VARIANCE_FLOOR = 1e-9
_LOG_2PI = np.log(2 * np.pi)


class NaiveBayesModel(Model):
    family = "nb"

    def __init__(self, features, imputation, *, priors, tables, means, variances, smoothing):
        super().__init__(features, imputation)
        self.priors = np.asarray(priors, dtype=np.float64)
        # feature index -> (2, k) likelihood table; numeric features absent
        self.tables = {int(j): np.asarray(t, dtype=np.float64) for j, t in tables.items()}
        # feature index -> (2,) arrays
        self.means = {int(j): np.asarray(m, dtype=np.float64) for j, m in means.items()}
        self.variances = {int(j): np.asarray(v, dtype=np.float64) for j, v in variances.items()}
        self.smoothing = float(smoothing)

    def log_joint(self, X) -> np.ndarray:
        """Unnormalized log P(class, row) as an ``(n, 2)`` array."""
        X = self._matrix(X)
        with np.errstate(divide="ignore"):
            out = np.tile(np.log(self.priors), (X.shape[0], 1))
        for j, f in enumerate(self.features):
            col = X[:, j]
            if j in self.tables:
                table = self.tables[j]
                k = table.shape[1]
                idx = np.where(np.isnan(col), -1, col)
                valid = (idx >= 0) & (idx < k) & (idx == np.floor(idx))
                if MISSING_CATEGORY in f.categories:
                    idx = np.where(valid, idx, f.categories.index(MISSING_CATEGORY))
                    valid = np.ones_like(valid)
                idx = idx.astype(np.intp)
                logt = np.log(table)
                contrib = np.where(valid[:, None], logt[:, np.where(valid, idx, 0)].T, 0.0)
                out += contrib
            else:
                mu, var = self.means[j], self.variances[j]
                out += -0.5 * (_LOG_2PI + np.log(var)[None, :]
                               + (col[:, None] - mu[None, :]) ** 2 / var[None, :])
        return out

    def posteriors(self, X) -> np.ndarray:
        """P(Successful | row) for each row, computed in log space."""
        lj = self.log_joint(X)
        d = lj[:, 1] - lj[:, 0]
        out = np.empty_like(d)
        pos = d >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
        e = np.exp(d[~pos])
        out[~pos] = e / (1.0 + e)
        return out

    def scores(self, X):
        post = self.posteriors(X)
        return post, post

    def params(self):
        return {
            "priors": self.priors.tolist(),
            "tables": {str(j): t.tolist() for j, t in sorted(self.tables.items())},
            "means": {str(j): m.tolist() for j, m in sorted(self.means.items())},
            "variances": {str(j): v.tolist() for j, v in sorted(self.variances.items())},
            "smoothing": self.smoothing,
        }

    @classmethod
    def from_params(cls, features, imputation, params):
        return cls(features, imputation, priors=params["priors"], tables=params["tables"],
                   means=params["means"], variances=params["variances"],
                   smoothing=params["smoothing"])


def train_nb(dataset: EncodedDataset, smoothing: float = 1.0, prior_power: float = 1.0) -> NaiveBayesModel:
    """Fit class priors and per-feature class-conditional distributions.

    ``prior_power`` < 1 dampens skewed priors (0 gives uniform priors).
    """
    if smoothing <= 0:
        raise PreconditionError("smoothing must be positive")
    X, y, means = prepare(dataset)
    counts = np.bincount(y, minlength=2).astype(np.float64)
    priors = (counts / counts.sum()) ** prior_power
    priors /= priors.sum()
    tables, mus, variances = {}, {}, {}
    for j, f in enumerate(dataset.features):
        col = X[:, j]
        if f.is_numeric:
            mus[j] = np.array([col[y == c].mean() for c in (0, 1)])
            variances[j] = np.array([max(col[y == c].var(), VARIANCE_FLOOR) for c in (0, 1)])
        else:
            k = len(f.categories)
            idx = col.astype(np.intp)
            table = np.empty((2, k))
            for c in (0, 1):
                hist = np.bincount(idx[y == c], minlength=k)[:k]
                table[c] = (hist + smoothing) / (counts[c] + smoothing * k)
            tables[j] = table
    return NaiveBayesModel(dataset.features, means, priors=priors, tables=tables,
                           means=mus, variances=variances, smoothing=smoothing)


def predict_nb(model: NaiveBayesModel, row):
    return model.predict(row)
