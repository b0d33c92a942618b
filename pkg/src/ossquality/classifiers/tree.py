"""Top-down decision-tree induction with information-gain splits.

Categorical and binary features split multi-way, at most once per path.
Numeric features split on a binary threshold placed at the midpoint
between adjacent distinct sorted values; ``x <= threshold`` goes left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import PreconditionError
from ..features import EncodedDataset
from ..selection import entropy
from .base import Model, prepare

_EPS = 1e-12


@dataclass
class Node:
    counts: tuple  # (unsuccessful, successful) training rows routed here
    feature: int | None = None
    threshold: float | None = None
    gain: float = 0.0
    children: dict = field(default_factory=dict)  # category index or "le"/"gt" -> Node

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def total(self) -> int:
        return int(self.counts[0] + self.counts[1])

    def to_dict(self) -> dict:
        doc = {"counts": [int(self.counts[0]), int(self.counts[1])]}
        if not self.is_leaf:
            doc.update(feature=self.feature, threshold=self.threshold, gain=self.gain,
                       children={str(k): c.to_dict() for k, c in self.children.items()})
        return doc

    @classmethod
    def from_dict(cls, doc) -> "Node":
        node = cls(tuple(int(c) for c in doc["counts"]))
        if "feature" in doc:
            node.feature = int(doc["feature"])
            node.threshold = doc["threshold"]
            node.gain = float(doc["gain"])
            for key, child in doc["children"].items():
                key = key if node.threshold is not None else int(key)
                node.children[key] = cls.from_dict(child)
        return node


def _entropy2(pos, neg):
    """Vectorized binary entropy of count arrays."""
    tot = pos + neg
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(tot > 0, pos / tot, 0.0)
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(np.where(p > 0, p, 1)), 0.0)
              + np.where(q > 0, q * np.log2(np.where(q > 0, q, 1)), 0.0))
    return h


class DecisionTreeModel(Model):
    family = "tree"

    def __init__(self, features, imputation, root: Node, *, max_depth=None, min_leaf=2,
                 stop_on_zero_gain=True):
        super().__init__(features, imputation)
        self.root = root
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.stop_on_zero_gain = stop_on_zero_gain

    def leaf_for(self, x) -> Node:
        node = self.root
        while not node.is_leaf:
            v = x[node.feature]
            if node.threshold is not None:
                if math.isnan(v):
                    node = _largest_child(node)
                else:
                    node = node.children["le" if v <= node.threshold else "gt"]
            else:
                child = None if math.isnan(v) else node.children.get(int(v))
                node = child if child is not None else _largest_child(node)
        return node

    def scores(self, X):
        X = self._matrix(X)
        succ = np.empty(X.shape[0])
        for i, x in enumerate(X):
            leaf = self.leaf_for(x)
            succ[i] = (leaf.counts[1] + 1) / (leaf.total + 2)
        return succ.copy(), succ

    def depth(self) -> int:
        def walk(node):
            return 0 if node.is_leaf else 1 + max(walk(c) for c in node.children.values())
        return walk(self.root)

    def leaves(self) -> list[Node]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend(node.children[k] for k in sorted(node.children, key=str, reverse=True))
        return out

    def params(self):
        return {"root": self.root.to_dict(), "max_depth": self.max_depth, "min_leaf": self.min_leaf,
                "stop_on_zero_gain": self.stop_on_zero_gain}

    @classmethod
    def from_params(cls, features, imputation, params):
        return cls(features, imputation, Node.from_dict(params["root"]),
                   max_depth=params["max_depth"], min_leaf=params["min_leaf"],
                   stop_on_zero_gain=params.get("stop_on_zero_gain", True))


def _largest_child(node: Node) -> Node:
    return max(node.children.items(), key=lambda kv: (kv[1].total, -_key_order(kv[0])))[1]


def _key_order(key) -> float:
    return {"le": 0, "gt": 1}.get(key, key) if isinstance(key, str) else key


def _best_categorical(col, y, min_leaf, parent_h):
    values = col.astype(np.intp)
    uniq, inverse = np.unique(values, return_inverse=True)
    if uniq.size < 2:
        return None
    pos = np.bincount(inverse, weights=y, minlength=uniq.size)
    tot = np.bincount(inverse, minlength=uniq.size).astype(np.float64)
    if tot.min() < min_leaf:
        return None
    cond = float((tot / tot.sum() * _entropy2(pos, tot - pos)).sum())
    return parent_h - cond, None


def _best_threshold(col, y, min_leaf, parent_h):
    order = np.argsort(col, kind="stable")
    xs, ys = col[order], y[order]
    n = xs.size
    # candidate cut after position i (left = xs[:i+1]) where the value changes
    cuts = np.nonzero(xs[1:] > xs[:-1])[0]
    if cuts.size == 0:
        return None
    left_n = cuts + 1.0
    valid = (left_n >= min_leaf) & (n - left_n >= min_leaf)
    if not valid.any():
        return None
    cum_pos = np.cumsum(ys)
    left_pos = cum_pos[cuts]
    right_pos = cum_pos[-1] - left_pos
    right_n = n - left_n
    cond = (left_n * _entropy2(left_pos, left_n - left_pos)
            + right_n * _entropy2(right_pos, right_n - right_pos)) / n
    gains = np.where(valid, parent_h - cond, -np.inf)
    best = int(np.argmax(gains))
    threshold = (xs[cuts[best]] + xs[cuts[best] + 1]) / 2.0
    return float(gains[best]), float(threshold)


def train_tree(dataset: EncodedDataset, max_depth: int | None = None, min_leaf: int = 2,
               stop_on_zero_gain: bool = True) -> DecisionTreeModel:
    """Greedy induction maximizing information gain at every node.

    Growth stops on a pure node, when no split has positive gain, at
    ``max_depth``, or when no split leaves ``min_leaf`` rows in every child.
    No pruning is applied.  A single-class training set yields one leaf.

    With ``stop_on_zero_gain=False`` an impure node still takes its best
    zero-gain split (XOR-like structure is otherwise left unsplit).
    """
    if min_leaf < 1:
        raise PreconditionError("min_leaf must be at least 1")
    if max_depth is not None and max_depth < 0:
        raise PreconditionError("max_depth must be non-negative")
    X, y, means = prepare(dataset, require_both=False)
    yf = y.astype(np.float64)
    numeric = [f.is_numeric for f in dataset.features]

    def grow(rows, depth, used):
        pos = int(y[rows].sum())
        node = Node((len(rows) - pos, pos))
        if pos == 0 or pos == len(rows):
            return node
        if max_depth is not None and depth >= max_depth:
            return node
        if len(rows) < 2 * min_leaf:
            return node
        parent_h = entropy([pos, len(rows) - pos])
        best = None
        for j in range(X.shape[1]):
            if not numeric[j] and j in used:
                continue
            col = X[rows, j]
            found = (_best_threshold if numeric[j] else _best_categorical)(col, yf[rows], min_leaf, parent_h)
            if found is not None and (best is None or found[0] > best[0] + _EPS):
                best = (found[0], found[1], j)
        if best is None or (stop_on_zero_gain and best[0] <= _EPS):
            return node
        gain, threshold, j = best
        node.feature, node.threshold, node.gain = j, threshold, gain
        col = X[rows, j]
        if threshold is not None:
            node.children["le"] = grow(rows[col <= threshold], depth + 1, used)
            node.children["gt"] = grow(rows[col > threshold], depth + 1, used)
        else:
            for v in np.unique(col.astype(np.intp)):
                node.children[int(v)] = grow(rows[col == v], depth + 1, used | {j})
        return node

    root = grow(np.arange(len(y)), 0, frozenset())
    return DecisionTreeModel(dataset.features, means, root, max_depth=max_depth, min_leaf=min_leaf,
                             stop_on_zero_gain=stop_on_zero_gain)


def predict_tree(model: DecisionTreeModel, row):
    return model.predict(row)
