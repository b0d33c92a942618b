"""Composite quality features and encoding of project records.

Encoding is split into a fit step (category vocabularies, observed
multi-valued categories, global mean rating) and a transform step so the
same encoder can be persisted with a model and replayed on new projects.
Numeric Missing values stay NaN in the encoded matrix; mean imputation is a
separate, training-split-only step (:func:`fit_imputation`).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import date
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, PreconditionError, SchemaError
from .ingest import MISSING, Label, ProjectRecord, Repository, Schema

log = logging.getLogger(__name__)

MISSING_CATEGORY = "<missing>"
DEFAULT_MIN_VOTES = 20
DEFAULT_RATING_SCALE = (1.0, 10.0)

# raw attributes consumed by each composite
COMPOSITE_INPUTS = {
    "vitality": ("versions", "first_release", "latest_release"),
    "popularity": ("url_hits", "page_hits", "subscriptions"),
    "weighted_rating": ("rating", "votes"),
}


def vitality_score(versions: float, first_upload_days: float, latest_upload_days: float) -> float:
    """Release activity normalized by recency: ``V * T0 / Tn``."""
    if latest_upload_days <= 0:
        raise DomainError("days since latest version must be positive")
    if versions < 1:
        raise DomainError("a project has at least one version")
    if first_upload_days < latest_upload_days:
        raise DomainError("first upload cannot be more recent than latest upload")
    return versions * first_upload_days / latest_upload_days


def popularity_score(url_hits: float, page_hits: float, subscriptions: float) -> float:
    if min(url_hits, page_hits, subscriptions) < 0:
        raise DomainError("hit and subscription counts are non-negative")
    return math.sqrt((url_hits + page_hits) * (subscriptions + 1))


def weighted_rating(rating: float, votes: float, global_mean: float,
                    min_votes: int = DEFAULT_MIN_VOTES,
                    scale: tuple[float, float] = DEFAULT_RATING_SCALE) -> float:
    """Shrink a project's mean rating toward the global mean.

    With ``votes == 0`` the result is ``global_mean`` whatever ``rating`` is.
    """
    if votes < 0:
        raise DomainError("vote count is non-negative")
    if min_votes < 1:
        raise DomainError("min_votes must be at least 1")
    lo, hi = scale
    if not lo <= global_mean <= hi:
        raise DomainError(f"global mean {global_mean} outside rating scale {scale}")
    if votes == 0:
        return float(global_mean)
    if not lo <= rating <= hi:
        raise DomainError(f"rating {rating} outside rating scale {scale}")
    total = votes + min_votes
    return (votes / total) * rating + (min_votes / total) * global_mean


def days_since(registration: date, as_of: date) -> int:
    if as_of < registration:
        raise DomainError(f"as_of {as_of} precedes {registration}")
    return (as_of - registration).days


def _date_feature_name(attribute: str) -> str:
    stem = attribute[:-5] if attribute.endswith("_date") else attribute
    return f"days_since_{stem}"


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: str  # numeric | categorical | binary
    source: str
    encoding: str
    categories: tuple = ()

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "source": self.source,
                "encoding": self.encoding, "categories": list(self.categories)}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FeatureDescriptor":
        return cls(doc["name"], doc["kind"], doc["source"], doc["encoding"],
                   tuple(doc.get("categories", ())))

    @property
    def is_numeric(self) -> bool:
        return self.kind == "numeric"


BINARY = ("0", "1")


@dataclass(frozen=True)
class EncodingPolicy:
    as_of: date
    min_votes: int = DEFAULT_MIN_VOTES
    rating_scale: tuple = DEFAULT_RATING_SCALE
    global_mean_rating: float | None = None
    log1p: tuple = ()
    missing_indicators: bool = True

    def to_dict(self) -> dict:
        return {"as_of": self.as_of.isoformat(), "min_votes": self.min_votes,
                "rating_scale": list(self.rating_scale),
                "global_mean_rating": self.global_mean_rating,
                "log1p": list(self.log1p), "missing_indicators": self.missing_indicators}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "EncodingPolicy":
        return cls(as_of=date.fromisoformat(doc["as_of"]),
                   min_votes=int(doc.get("min_votes", DEFAULT_MIN_VOTES)),
                   rating_scale=tuple(doc.get("rating_scale", DEFAULT_RATING_SCALE)),
                   global_mean_rating=doc.get("global_mean_rating"),
                   log1p=tuple(doc.get("log1p", ())),
                   missing_indicators=bool(doc.get("missing_indicators", True)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EncodedDataset:
    """Encoded feature matrix with a parallel label vector.

    ``X`` holds floats; categorical and binary columns hold category
    indices, and NaN marks a Missing numeric value.  ``y`` is 1 for
    Successful and 0 for Unsuccessful, or ``None`` for unlabeled data.
    """

    features: tuple
    X: np.ndarray
    y: np.ndarray | None
    repository: Repository | None = None
    project_ids: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            X = X.reshape(len(self.project_ids) if self.project_ids else 0, len(self.features))
        if X.shape[1] != len(self.features):
            raise PreconditionError("row width does not match feature count")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise PreconditionError("feature names must be unique")
        object.__setattr__(self, "X", _frozen(X))
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.int8)
            if y.shape != (X.shape[0],):
                raise PreconditionError("label count does not match row count")
            object.__setattr__(self, "y", _frozen(y))
        ids = tuple(self.project_ids) if self.project_ids else tuple(str(i) for i in range(X.shape[0]))
        if len(ids) != X.shape[0]:
            raise PreconditionError("project_ids length does not match row count")
        object.__setattr__(self, "project_ids", ids)
        object.__setattr__(self, "features", tuple(self.features))

    def __len__(self):
        return self.X.shape[0]

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def labels(self) -> list[Label]:
        return [Label.SUCCESSFUL if v else Label.UNSUCCESSFUL for v in self.y]

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(name)

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.index_of(name)]

    def take(self, rows) -> "EncodedDataset":
        rows = np.asarray(rows, dtype=np.intp)
        return EncodedDataset(self.features, self.X[rows], None if self.y is None else self.y[rows],
                              self.repository, tuple(self.project_ids[i] for i in rows))

    def select(self, names: Iterable[str]) -> "EncodedDataset":
        """Keep features whose name or source attribute is in ``names``."""
        wanted = set(names)
        cols = [i for i, f in enumerate(self.features) if f.name in wanted or f.source in wanted]
        known = {f.name for f in self.features} | {f.source for f in self.features}
        unknown = wanted - known
        if unknown:
            raise PreconditionError(f"unknown features: {', '.join(sorted(unknown))}")
        return EncodedDataset(tuple(self.features[i] for i in cols), self.X[:, cols], self.y,
                              self.repository, self.project_ids)

    def with_values(self, X: np.ndarray) -> "EncodedDataset":
        return replace(self, X=np.array(X, dtype=np.float64))

    def to_dict(self) -> dict:
        columns = {}
        for j, f in enumerate(self.features):
            col = self.X[:, j]
            columns[f.name] = [None if math.isnan(v) else (int(v) if not f.is_numeric else float(v))
                               for v in col]
        return {
            "format": "ossquality.dataset",
            "version": 1,
            "repository": self.repository.value if self.repository else None,
            "features": [f.to_dict() for f in self.features],
            "project_ids": list(self.project_ids),
            "labels": None if self.y is None else [int(v) for v in self.y],
            "columns": columns,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "EncodedDataset":
        features = tuple(FeatureDescriptor.from_dict(d) for d in doc["features"])
        n = len(doc["project_ids"])
        X = np.empty((n, len(features)))
        for j, f in enumerate(features):
            X[:, j] = [np.nan if v is None else v for v in doc["columns"][f.name]]
        y = None if doc["labels"] is None else np.array(doc["labels"], dtype=np.int8)
        repo = Repository(doc["repository"]) if doc["repository"] else None
        return cls(features, X, y, repo, tuple(doc["project_ids"]))

    @classmethod
    def from_json(cls, text: str) -> "EncodedDataset":
        return cls.from_dict(json.loads(text))


class Encoder:
    """Fit-then-transform encoder for one repository schema."""

    def __init__(self, schema: Schema, policy: EncodingPolicy):
        self.schema = schema
        self.policy = policy
        self.vocabularies: dict[str, tuple] = {}
        self.observed: dict[str, tuple] = {}
        self.global_mean_rating: float | None = policy.global_mean_rating
        self.indicators: tuple = ()
        self.fitted = False

    # -- fitting -----------------------------------------------------------

    def _check(self, records: Sequence[ProjectRecord]):
        repos = {r.repository for r in records}
        if len(repos) > 1:
            raise SchemaError("records mix repositories")
        if repos and repos != {self.schema.repository}:
            raise SchemaError(f"records are from {repos.pop().value}, schema is "
                              f"{self.schema.repository.value}")

    def fit(self, records: Sequence[ProjectRecord]) -> "Encoder":
        records = list(records)
        self._check(records)
        for attr, kind in self.schema.attributes.items():
            if attr in self.schema.inputs_only:
                continue
            values = [r.get(attr) for r in records]
            if kind == "categorical":
                cats = sorted({v for v in values if v is not MISSING})
                self.vocabularies[attr] = tuple(cats) + (MISSING_CATEGORY,)
            elif kind == "multi-categorical":
                cats = sorted(set().union(*[v for v in values if v is not MISSING]))
                if any(v is MISSING for v in values):
                    cats.append(MISSING_CATEGORY)
                self.observed[attr] = tuple(cats)
        if "weighted_rating" in self.schema.composites and self.global_mean_rating is None:
            lo, hi = self.policy.rating_scale
            ratings = [r.get("rating") for r in records]
            ratings = [float(v) for v in ratings if v is not MISSING and lo <= v <= hi]
            self.global_mean_rating = float(np.mean(ratings)) if ratings else (lo + hi) / 2
        self.fitted = True
        if self.policy.missing_indicators and records:
            raw = self._numeric_values(records)
            self.indicators = tuple(name for name in raw if np.isnan(raw[name]).any())
        return self

    # -- transform ---------------------------------------------------------

    def _numeric_values(self, records) -> dict[str, np.ndarray]:
        """Numeric feature name -> column (NaN for Missing), in feature order."""
        as_of = self.policy.as_of
        out: dict[str, np.ndarray] = {}
        for attr, kind in self.schema.attributes.items():
            if attr in self.schema.inputs_only:
                continue
            if kind == "numeric":
                out[attr] = np.array([_num(r.get(attr)) for r in records], dtype=float)
            elif kind == "date":
                col = []
                for r in records:
                    d = r.get(attr)
                    try:
                        col.append(np.nan if d is MISSING else float(days_since(d, as_of)))
                    except DomainError:
                        col.append(np.nan)
                out[_date_feature_name(attr)] = np.array(col, dtype=float)
        for comp in self.schema.composites:
            out[comp] = np.array([self._composite(comp, r) for r in records], dtype=float)
        for name in self.policy.log1p:
            if name in out:
                col = out[name]
                with np.errstate(invalid="ignore"):
                    out[name] = np.where(col > -1, np.log1p(np.where(col > -1, col, 0.0)), np.nan)
        return out

    def _composite(self, comp: str, rec: ProjectRecord) -> float:
        inputs = [rec.get(a) for a in COMPOSITE_INPUTS[comp]]
        as_of = self.policy.as_of
        try:
            if comp == "vitality":
                versions, first, latest = inputs
                if MISSING in (versions, first, latest):
                    return np.nan
                # a release on the as_of day counts as one day old
                t0 = max(days_since(first, as_of), 1)
                tn = max(days_since(latest, as_of), 1)
                return vitality_score(versions, t0, tn)
            if comp == "popularity":
                if any(v is MISSING for v in inputs):
                    return np.nan
                return popularity_score(*inputs)
            rating, votes = inputs
            if votes is MISSING or (rating is MISSING and votes != 0):
                return np.nan
            return weighted_rating(0.0 if rating is MISSING else rating, votes,
                                   self.global_mean_rating, self.policy.min_votes,
                                   tuple(self.policy.rating_scale))
        except DomainError as exc:
            log.debug("project %s: %s treated as missing (%s)", rec.project_id, comp, exc)
            return np.nan

    @property
    def descriptors(self) -> tuple:
        if not self.fitted:
            raise PreconditionError("encoder is not fitted")
        feats = []
        indicators = set(self.indicators)

        def numeric(name, source, encoding):
            if name in self.policy.log1p:
                encoding += "+log1p"
            feats.append(FeatureDescriptor(name, "numeric", source, encoding))
            if name in indicators:
                feats.append(FeatureDescriptor(f"{name}__missing", "binary", source,
                                               "missing_indicator", BINARY))

        for attr, kind in self.schema.attributes.items():
            if attr in self.schema.inputs_only:
                continue
            if kind == "numeric":
                numeric(attr, attr, "passthrough")
            elif kind == "date":
                numeric(_date_feature_name(attr), attr, "days_since")
            elif kind == "categorical":
                feats.append(FeatureDescriptor(attr, "categorical", attr, "category_index",
                                               self.vocabularies[attr]))
            else:
                for cat in self.observed[attr]:
                    feats.append(FeatureDescriptor(f"{attr}={cat}", "binary", attr,
                                                   "multi_hot", BINARY))
        for comp in self.schema.composites:
            numeric(comp, comp, f"composite:{comp}")
        return tuple(feats)

    def required_attributes(self, feature_names: Iterable[str] | None = None) -> set[str]:
        """Raw attributes that feed the given features (all features if None)."""
        wanted = None if feature_names is None else set(feature_names)
        needed = set()
        for f in self.descriptors:
            if wanted is not None and f.name not in wanted and f.source not in wanted:
                continue
            if f.source in COMPOSITE_INPUTS:
                needed.update(COMPOSITE_INPUTS[f.source])
            else:
                needed.add(f.source)
        return needed

    def transform(self, records: Sequence[ProjectRecord], require_labels: bool = True) -> EncodedDataset:
        records = list(records)
        self._check(records)
        if require_labels and any(r.label is None for r in records):
            raise PreconditionError("every record must be labeled before encoding")
        feats = self.descriptors
        numeric = self._numeric_values(records)
        X = np.empty((len(records), len(feats)))
        for j, f in enumerate(feats):
            if f.kind == "numeric":
                X[:, j] = numeric[f.name]
            elif f.encoding == "missing_indicator":
                X[:, j] = np.isnan(numeric[f.name[: -len("__missing")]])
            elif f.encoding == "category_index":
                index = {c: i for i, c in enumerate(f.categories)}
                miss = index[MISSING_CATEGORY]
                X[:, j] = [index.get(r.get(f.source), miss) if r.get(f.source) is not MISSING
                           else miss for r in records]
            else:
                cat = f.name.split("=", 1)[1]
                col = []
                for r in records:
                    v = r.get(f.source)
                    col.append(float(v is MISSING) if cat == MISSING_CATEGORY
                               else float(v is not MISSING and cat in v))
                X[:, j] = col
        y = None
        if records and all(r.label is not None for r in records):
            y = np.array([r.label is Label.SUCCESSFUL for r in records], dtype=np.int8)
        elif require_labels:
            y = np.zeros(0, dtype=np.int8)
        return EncodedDataset(feats, X, y, self.schema.repository,
                              tuple(r.project_id for r in records))

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "policy": self.policy.to_dict(),
            "vocabularies": {k: list(v) for k, v in self.vocabularies.items()},
            "observed": {k: list(v) for k, v in self.observed.items()},
            "global_mean_rating": self.global_mean_rating,
            "indicators": list(self.indicators),
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Encoder":
        enc = cls(Schema.from_dict(doc["schema"]), EncodingPolicy.from_dict(doc["policy"]))
        enc.vocabularies = {k: tuple(v) for k, v in doc["vocabularies"].items()}
        enc.observed = {k: tuple(v) for k, v in doc["observed"].items()}
        enc.global_mean_rating = doc["global_mean_rating"]
        enc.indicators = tuple(doc["indicators"])
        enc.fitted = True
        return enc


def _num(v) -> float:
    return np.nan if v is MISSING else float(v)


def encode(records: Sequence[ProjectRecord], schema: Schema, policy: EncodingPolicy) -> EncodedDataset:
    """Fit an encoder on ``records`` and encode them.

    An empty record list yields an empty dataset with no features.
    """
    records = list(records)
    if not records:
        return EncodedDataset((), np.zeros((0, 0)), np.zeros(0, dtype=np.int8), schema.repository, ())
    if any(r.label is None for r in records):
        raise PreconditionError("every record must be labeled before encoding")
    return Encoder(schema, policy).fit(records).transform(records)


def fit_imputation(dataset: EncodedDataset, rows=None) -> dict[str, float]:
    """Per numeric feature mean over non-missing values of the given rows."""
    X = dataset.X if rows is None else dataset.X[np.asarray(rows, dtype=np.intp)]
    means = {}
    for j, f in enumerate(dataset.features):
        if not f.is_numeric:
            continue
        col = X[:, j]
        col = col[~np.isnan(col)]
        means[f.name] = float(col.mean()) if col.size else 0.0
    return means


def apply_imputation(X: np.ndarray, features: Sequence[FeatureDescriptor],
                     means: Mapping[str, float]) -> np.ndarray:
    X = np.array(X, dtype=np.float64, copy=True)
    for j, f in enumerate(features):
        if f.is_numeric:
            col = X[:, j]
            col[np.isnan(col)] = means.get(f.name, 0.0)
    return X
