"""Primal linear SVM trained by seeded stochastic subgradient descent.

Objective: ``lam/2 * |w_aug|^2 + mean(c_i * max(0, 1 - y_i (w.x_i + b)))``
where ``w_aug`` is ``w`` augmented with the bias (the bias is learned as
the weight of a constant input and is regularized with it).  The step at
iteration ``t`` is ``1 / (lam * t)``, each iterate is projected onto the
ball of radius ``1 / sqrt(lam)``, and the returned hyperplane is the running
average of all iterates.

Numeric and binary columns are standardized with training statistics;
categorical columns are one-hot expanded over their category dictionary.
"""

from __future__ import annotations

import numpy as np

from ..errors import PreconditionError
from ..features import MISSING_CATEGORY, EncodedDataset
from .base import Model, prepare


def _design(X, features, mean, std) -> np.ndarray:
    blocks = []
    for j, f in enumerate(features):
        col = X[:, j]
        if f.kind == "categorical":
            k = len(f.categories)
            idx = np.where(np.isnan(col), -1, col).astype(np.intp)
            bad = (idx < 0) | (idx >= k)
            if MISSING_CATEGORY in f.categories:
                idx = np.where(bad, f.categories.index(MISSING_CATEGORY), idx)
                bad = np.zeros_like(bad)
            block = np.zeros((X.shape[0], k))
            rows = np.nonzero(~bad)[0]
            block[rows, idx[rows]] = 1.0
            blocks.append(block)
        else:
            blocks.append(((col - mean[j]) / std[j])[:, None])
    if not blocks:
        return np.zeros((X.shape[0], 0))
    return np.hstack(blocks)


def design_columns(features) -> list[str]:
    names = []
    for f in features:
        if f.kind == "categorical":
            names.extend(f"{f.name}={c}" for c in f.categories)
        else:
            names.append(f.name)
    return names


def hinge_objective(w, b, Z, signs, lam, weights=None) -> float:
    margins = signs * (Z @ w + b)
    loss = np.maximum(0.0, 1.0 - margins)
    if weights is not None:
        loss = loss * weights
    return float(lam / 2 * (w @ w + b * b) + loss.mean())


class LinearSvmModel(Model):
    family = "svm"

    def __init__(self, features, imputation, *, weights, bias, lam, mean, std,
                 epochs, seed, objective_trace=()):
        super().__init__(features, imputation)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)
        self.lam = float(lam)
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)
        self.epochs = int(epochs)
        self.seed = int(seed)
        self.objective_trace = tuple(float(v) for v in objective_trace)

    def design(self, X) -> np.ndarray:
        return _design(self._matrix(X), self.features, self.mean, self.std)

    def decision_function(self, X) -> np.ndarray:
        return self.design(X) @ self.weights + self.bias

    def scores(self, X):
        z = self.decision_function(X)
        norm = float(np.linalg.norm(self.weights))
        if norm == 0.0:
            # degenerate hyperplane: distance 0, always Unsuccessful
            succ = np.minimum(_sigmoid(z), np.nextafter(0.5, 0.0))
            return np.zeros_like(z), succ
        succ = _sigmoid(z)
        # keep label and sign consistent where the squash rounds to 0.5
        succ = np.where((z < 0) & (succ >= 0.5), np.nextafter(0.5, 0.0), succ)
        return z / norm, succ

    def params(self):
        return {"weights": self.weights.tolist(), "bias": self.bias, "lambda": self.lam,
                "mean": self.mean.tolist(), "std": self.std.tolist(), "epochs": self.epochs,
                "seed": self.seed, "objective_trace": list(self.objective_trace)}

    @classmethod
    def from_params(cls, features, imputation, params):
        return cls(features, imputation, weights=params["weights"], bias=params["bias"],
                   lam=params["lambda"], mean=params["mean"], std=params["std"],
                   epochs=params["epochs"], seed=params["seed"],
                   objective_trace=params.get("objective_trace", ()))


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_svm(dataset: EncodedDataset, lam: float = 1e-3, epochs: int = 20, seed: int = 42,
              class_weight: str | None = None) -> LinearSvmModel:
    """Train a linear hinge-loss classifier.

    Each epoch visits every training row once in a seeded random order.
    ``class_weight="balanced"`` scales each row's loss by ``n / (2 n_c)``.
    The objective of the averaged hyperplane after every epoch is kept in
    ``objective_trace``.
    """
    if lam <= 0:
        raise PreconditionError("lambda must be positive")
    if epochs < 1:
        raise PreconditionError("epochs must be at least 1")
    X, y, means = prepare(dataset)
    feats = dataset.features
    mean = np.zeros(len(feats))
    std = np.ones(len(feats))
    for j, f in enumerate(feats):
        if f.kind != "categorical":
            mean[j] = X[:, j].mean()
            s = X[:, j].std()
            std[j] = s if s > 0 else 1.0
    Z = _design(X, feats, mean, std)
    signs = np.where(y == 1, 1.0, -1.0)
    n, d = Z.shape
    if class_weight == "balanced":
        counts = np.bincount(y, minlength=2)
        cw = n / (2.0 * counts[y])
    elif class_weight is None:
        cw = None
    else:
        raise PreconditionError(f"unknown class_weight {class_weight!r}")

    # w_aug = scale * v, so the shrink step costs O(1)
    v = np.zeros(d + 1)
    scale = 1.0
    Za = np.hstack([Z, np.ones((n, 1))])
    rows = [Za[i] for i in range(n)]
    rng = np.random.default_rng(seed)
    trace = []
    t = 0
    radius = 1.0 / np.sqrt(lam)
    avg = np.zeros(d + 1)
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            x = rows[i]
            margin = signs[i] * scale * float(v @ x)
            shrink = 1.0 - eta * lam
            if shrink <= 0.0:
                v[:] = 0.0
                scale = 1.0
            else:
                scale *= shrink
            if margin < 1.0:
                c = 1.0 if cw is None else cw[i]
                v += (eta * c * signs[i] / scale) * x
            # project onto the ball of radius 1/sqrt(lam) that holds the optimum
            norm = scale * float(np.linalg.norm(v))
            if norm > radius:
                scale *= radius / norm
            if scale < 1e-9:
                v *= scale
                scale = 1.0
            avg += (scale * v - avg) / t
        trace.append(hinge_objective(avg[:d], avg[d], Z, signs, lam, cw))
    w_aug = avg
    return LinearSvmModel(feats, means, weights=w_aug[:d], bias=w_aug[d], lam=lam,
                          mean=mean, std=std, epochs=epochs, seed=seed, objective_trace=trace)


def predict_svm(model: LinearSvmModel, row):
    return model.predict(row)
