"""Feature scoring by Information Gain and Chi-Square.

Contingency tables are ``r x m`` count matrices: one row per feature value,
one column per class.  For the binary problem column 0 counts Successful
(positive) instances and column 1 Unsuccessful ones.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import PreconditionError
from .features import EncodedDataset

MISSING_CODE = -1


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.float64)
        if counts.ndim != 2:
            raise PreconditionError("contingency table must be two-dimensional")
        if (counts < 0).any():
            raise PreconditionError("contingency counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> float:
        return float(self.counts.sum())

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def class_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @classmethod
    def from_columns(cls, codes, y) -> "ContingencyTable":
        """Build a value-by-class table; ``y`` is 1 for the positive class."""
        codes = np.asarray(codes)
        y = np.asarray(y).astype(bool)
        _, inverse = np.unique(codes, return_inverse=True)
        r = int(inverse.max()) + 1 if inverse.size else 0
        pos = np.bincount(inverse[y], minlength=r)
        neg = np.bincount(inverse[~y], minlength=r)
        return cls(np.column_stack([pos, neg]))


def _counts(table) -> np.ndarray:
    return table.counts if isinstance(table, ContingencyTable) else np.asarray(table, dtype=np.float64)


def entropy(counts) -> float:
    """Class entropy in bits; an empty distribution has entropy 0."""
    counts = np.asarray(counts, dtype=np.float64).ravel()
    s = counts.sum()
    if s <= 0:
        return 0.0
    p = counts[counts > 0] / s
    return float(-(p * np.log2(p)).sum())


def conditional_entropy(table) -> float:
    counts = _counts(table)
    s = counts.sum()
    if s <= 0:
        return 0.0
    return float(sum(row.sum() / s * entropy(row) for row in counts if row.sum() > 0))


def information_gain(table) -> float:
    counts = _counts(table)
    gain = entropy(counts.sum(axis=0)) - conditional_entropy(counts)
    return max(gain, 0.0)


def chi_square(table) -> float:
    counts = _counts(table)
    counts = counts[counts.sum(axis=1) > 0]
    n = counts.sum()
    if n <= 0:
        return 0.0
    col = counts.sum(axis=0)
    if (col == 0).any():
        return 0.0
    expected = np.outer(counts.sum(axis=1), col) / n
    return float(((counts - expected) ** 2 / expected).sum())


def equal_width_edges(values, bins: int) -> np.ndarray:
    if bins < 2:
        raise PreconditionError("bins must be at least 2")
    values = np.asarray(values, dtype=np.float64)
    finite = values[~np.isnan(values)]
    if finite.size == 0:
        return np.zeros(bins + 1)
    return np.linspace(finite.min(), finite.max(), bins + 1)


def apply_bins(values, edges) -> np.ndarray:
    """Map values to bin indices using edges from :func:`equal_width_edges`.

    NaN stays NaN; out-of-range values clamp into the end bins.
    """
    values = np.asarray(values, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.float64)
    bins = len(edges) - 1
    lo, hi = edges[0], edges[-1]
    out = np.full(values.shape, np.nan)
    ok = ~np.isnan(values)
    if hi > lo:
        idx = np.floor(bins * (values[ok] - lo) / (hi - lo))
        out[ok] = np.clip(idx, 0, bins - 1)
    else:
        out[ok] = 0.0
    return out


def discretize_equal_width(values, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width binning; returns ``(bin_indices, edges)``."""
    edges = equal_width_edges(values, bins)
    return apply_bins(values, edges), edges


@dataclass(frozen=True)
class FeatureScore:
    name: str
    source: str
    information_gain: float
    chi_square: float
    rank_ig: int = 0
    rank_chi: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def feature_codes(dataset: EncodedDataset, j: int, bins: int, edges=None) -> np.ndarray:
    """Discrete codes for column ``j``; Missing maps to its own code."""
    col = dataset.X[:, j]
    if dataset.features[j].is_numeric:
        col = apply_bins(col, equal_width_edges(col, bins) if edges is None else edges)
    return np.where(np.isnan(col), MISSING_CODE, col).astype(np.int64)


def _assign_ranks(scores: list[FeatureScore]) -> list[FeatureScore]:
    by_ig = sorted(scores, key=lambda s: (-s.information_gain, s.name))
    by_chi = sorted(scores, key=lambda s: (-s.chi_square, s.name))
    rank_ig = {s.name: i + 1 for i, s in enumerate(by_ig)}
    rank_chi = {s.name: i + 1 for i, s in enumerate(by_chi)}
    ranked = [FeatureScore(s.name, s.source, s.information_gain, s.chi_square,
                           rank_ig[s.name], rank_chi[s.name]) for s in scores]
    return sorted(ranked, key=lambda s: s.rank_ig)


def _raw_scores(dataset: EncodedDataset, bins: int) -> dict[str, tuple[float, float]]:
    out = {}
    for j, f in enumerate(dataset.features):
        table = ContingencyTable.from_columns(feature_codes(dataset, j, bins), dataset.y)
        out[f.name] = (information_gain(table), chi_square(table))
    return out


def rank_features(dataset: EncodedDataset, bins: int = 10, mode: str = "full",
                  folds: int = 10, seed: int = 42) -> list[FeatureScore]:
    """Score every feature by IG and chi-square and rank them.

    ``mode="full"`` scores once on all rows.  ``mode="fold_mean"`` averages
    the scores computed on the training part of each stratified fold.
    Output is sorted by IG rank; ties are broken by feature name.
    """
    if len(dataset) == 0 or dataset.y is None or not dataset.features:
        raise PreconditionError("ranking needs a non-empty labeled dataset")
    if mode == "full":
        raw = _raw_scores(dataset, bins)
    elif mode == "fold_mean":
        from .evaluation import stratified_folds

        parts = stratified_folds(dataset.y, folds, seed)
        acc = {f.name: np.zeros(2) for f in dataset.features}
        for test in parts:
            train = np.setdiff1d(np.arange(len(dataset)), test)
            for name, pair in _raw_scores(dataset.take(train), bins).items():
                acc[name] += pair
        raw = {name: tuple(v / len(parts)) for name, v in acc.items()}
    else:
        raise PreconditionError(f"unknown ranking mode {mode!r}")
    scores = [FeatureScore(f.name, f.source, float(raw[f.name][0]), float(raw[f.name][1]))
              for f in dataset.features]
    return _assign_ranks(scores)


def aggregate_by_source(scores: Sequence[FeatureScore]) -> list[FeatureScore]:
    """Collapse expanded features to their source attribute (max score)."""
    best: dict[str, list[float]] = {}
    for s in scores:
        cur = best.setdefault(s.source, [0.0, 0.0])
        cur[0] = max(cur[0], s.information_gain)
        cur[1] = max(cur[1], s.chi_square)
    return _assign_ranks([FeatureScore(src, src, ig, chi) for src, (ig, chi) in best.items()])


def ranking_report(scores: Sequence[FeatureScore], *, mode: str, bins: int,
                   config: dict | None = None) -> dict:
    return {
        "mode": mode,
        "bins": bins,
        "features": [s.to_dict() for s in scores],
        "attributes": [s.to_dict() for s in aggregate_by_source(scores)],
        "config": config or {},
    }


def render_ranking_table(scores: Sequence[FeatureScore], title: str = "") -> str:
    """Plain-text table: feature, IG, chi-square, sorted by IG descending."""
    rows = sorted(scores, key=lambda s: s.rank_ig)
    width = max([len("Feature")] + [len(s.name) for s in rows])
    lines = []
    if title:
        lines.append(title)
    header = f"{'Feature':<{width}}  {'Information Gain':>16}  {'Chi-Square':>12}"
    lines += [header, "-" * len(header)]
    for s in rows:
        lines.append(f"{s.name:<{width}}  {s.information_gain:>16.3f}  {s.chi_square:>12.3f}")
    return "\n".join(lines) + "\n"


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
