"""Stratified cross-validation and precision/recall/F-measure accounting.

The positive class is always Successful.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .classifiers import TRAINERS, Model
from .errors import OssQualityError, PreconditionError, StratificationError, TrainingError
from .features import EncodedDataset
from .selection import FeatureScore, aggregate_by_source


@dataclass(frozen=True)
class ConfusionMatrix:
    true_pos: int = 0
    false_neg: int = 0
    false_pos: int = 0
    true_neg: int = 0

    @classmethod
    def from_labels(cls, actual, predicted) -> "ConfusionMatrix":
        a = np.asarray(actual).astype(bool)
        p = np.asarray(predicted).astype(bool)
        return cls(int((a & p).sum()), int((a & ~p).sum()), int((~a & p).sum()), int((~a & ~p).sum()))

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.true_pos + other.true_pos, self.false_neg + other.false_neg,
                               self.false_pos + other.false_pos, self.true_neg + other.true_neg)

    @property
    def total(self) -> int:
        return self.true_pos + self.false_neg + self.false_pos + self.true_neg

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f_measure: float
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall,
                "f_measure": self.f_measure, "flags": list(self.flags)}


def f_measure(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def precision_recall_f1(cm: ConfusionMatrix) -> Metrics:
    """Precision, recall and F-measure; 0/0 cases are 0 and flagged."""
    flags = []
    if cm.true_pos + cm.false_neg == 0:
        recall = 0.0
        flags.append("recall_undefined")
    else:
        recall = cm.true_pos / (cm.true_pos + cm.false_neg)
    if cm.true_pos + cm.false_pos == 0:
        precision = 0.0
        flags.append("precision_undefined")
    else:
        precision = cm.true_pos / (cm.true_pos + cm.false_pos)
    if precision + recall == 0:
        flags.append("f_measure_undefined")
    return Metrics(precision, recall, f_measure(precision, recall), tuple(flags))


def stratified_folds(labels, k: int, seed: int) -> list[np.ndarray]:
    """Partition row indices into ``k`` class-stratified folds.

    ``labels`` may be an :class:`EncodedDataset` or a label array.  Each
    class is shuffled with the seed and dealt round-robin, continuing the
    rotation across classes so fold sizes stay balanced.
    """
    if isinstance(labels, EncodedDataset):
        labels = labels.y
    y = np.asarray(labels)
    if k < 2:
        raise PreconditionError("k must be at least 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in np.unique(y)[::-1]:
        members = np.nonzero(y == cls)[0]
        if members.size < k:
            raise StratificationError(f"class {cls!r} has {members.size} instances, fewer than k={k}")
        for t, i in enumerate(rng.permutation(members)):
            folds[(offset + t) % k].append(int(i))
        offset = (offset + members.size) % k
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict = field(default_factory=dict)

    def train(self, dataset: EncodedDataset) -> Model:
        if self.family not in TRAINERS:
            raise PreconditionError(f"unknown model family {self.family!r}")
        return TRAINERS[self.family](dataset, **self.params)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}


def fold_models(dataset: EncodedDataset, spec: ModelSpec, k: int, seed: int
                ) -> Iterator[tuple[int, np.ndarray, Model]]:
    """Yield ``(fold_index, test_rows, model_trained_on_the_rest)``."""
    folds = stratified_folds(dataset.y, k, seed)
    all_rows = np.arange(len(dataset))
    for i, test in enumerate(folds):
        train = np.setdiff1d(all_rows, test)
        try:
            model = spec.train(dataset.take(train))
        except OssQualityError as exc:
            raise TrainingError(f"fold {i}: {exc}") from exc
        yield i, test, model


@dataclass
class EvaluationReport:
    config: dict
    folds: list  # one dict per fold: confusion matrix and metrics
    mean: Metrics
    pooled_matrix: ConfusionMatrix
    pooled: Metrics

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "folds": self.folds,
            "mean": self.mean.to_dict(),
            "pooled": {"confusion_matrix": self.pooled_matrix.to_dict(), **self.pooled.to_dict()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _mean_metrics(per_fold: Sequence[Metrics]) -> Metrics:
    flags = sorted({f for m in per_fold for f in m.flags})
    return Metrics(float(np.mean([m.precision for m in per_fold])),
                   float(np.mean([m.recall for m in per_fold])),
                   float(np.mean([m.f_measure for m in per_fold])),
                   tuple(flags))


def cross_validate(dataset: EncodedDataset, spec: ModelSpec, k: int = 10, seed: int = 42,
                   feature_subset: Sequence[str] | None = None,
                   config: dict | None = None) -> EvaluationReport:
    """k-fold stratified cross-validation.

    Aggregate metrics are the unweighted mean of per-fold metrics; metrics
    of the pooled confusion matrix are reported alongside.
    """
    if dataset.y is None:
        raise PreconditionError("cross-validation needs labels")
    data = dataset if feature_subset is None else dataset.select(feature_subset)
    fold_rows, metrics = [], []
    pooled = ConfusionMatrix()
    for i, test, model in fold_models(data, spec, k, seed):
        cm = ConfusionMatrix.from_labels(data.y[test], model.predict_labels(data.X[test]))
        m = precision_recall_f1(cm)
        pooled = pooled + cm
        metrics.append(m)
        fold_rows.append({"fold": i, "size": int(test.size),
                          "confusion_matrix": cm.to_dict(), **m.to_dict()})
    run = {
        "model": spec.to_dict(),
        "folds": k,
        "seed": seed,
        "features": data.feature_names,
        "feature_subset": None if feature_subset is None else list(feature_subset),
        "repository": data.repository.value if data.repository else None,
        "rows": len(data),
    }
    if config:
        run["run"] = config
    return EvaluationReport(run, fold_rows, _mean_metrics(metrics), pooled, precision_recall_f1(pooled))


def top_k_subset(ranking: Sequence[FeatureScore], k: int) -> list[str]:
    """Names of the ``k`` source attributes with the highest IG."""
    attributes = aggregate_by_source(ranking)
    if not 1 <= k <= len(attributes):
        raise PreconditionError(f"k={k} outside 1..{len(attributes)}")
    return [s.name for s in attributes[:k]]


FAMILY_TITLES = {"svm": "SVM", "tree": "Tree", "nb": "NB", "majority": "Majority"}


def row_title(report: EvaluationReport) -> str:
    family = report.config["model"]["family"]
    subset = report.config["feature_subset"]
    cond = "All Features" if subset is None else f"Top-{len(subset)} Features"
    return f"{FAMILY_TITLES.get(family, family)} {cond}"


def render_evaluation_table(reports: Sequence[EvaluationReport]) -> str:
    """Rows: model x feature condition; columns: P, R, F per repository."""
    repos = []
    rows: dict[str, dict[str, Metrics]] = {}
    for rep in reports:
        repo = rep.config.get("repository") or "-"
        if repo not in repos:
            repos.append(repo)
        rows.setdefault(row_title(rep), {})[repo] = rep.mean
    width = max([5] + [len(t) for t in rows])
    cell = 9
    head1 = " " * width + "".join(f" | {r:^{cell * 3 + 2}}" for r in repos)
    head2 = " " * width + "".join(
        f" | {'Precision':>{cell}} {'Recall':>{cell}} {'F-Measure':>{cell}}" for _ in repos)
    lines = [head1, head2, "-" * len(head2)]
    for title, by_repo in rows.items():
        line = f"{title:<{width}}"
        for r in repos:
            m = by_repo.get(r)
            if m is None:
                line += f" | {'':>{cell}} {'':>{cell}} {'':>{cell}}"
            else:
                line += f" | {m.precision:>{cell}.2f} {m.recall:>{cell}.2f} {m.f_measure:>{cell}.2f}"
        lines.append(line)
    return "\n".join(lines) + "\n"
