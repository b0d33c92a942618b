"""Versioned JSON documents for trained models."""

from __future__ import annotations

import json
from typing import Mapping

from ..errors import PersistenceError
from ..features import FeatureDescriptor
from .base import MajorityModel, Model
from .naive_bayes import NaiveBayesModel
from .svm import LinearSvmModel
from .tree import DecisionTreeModel

FORMAT = "ossquality.model"
SCHEMA_VERSION = 1
FAMILIES = {cls.family: cls for cls in (NaiveBayesModel, DecisionTreeModel, LinearSvmModel, MajorityModel)}


def save_model(model: Model, extra: Mapping | None = None) -> dict:
    """Model document; ``extra`` carries pipeline metadata (encoder, config)."""
    doc = {
        "format": FORMAT,
        "schema_version": SCHEMA_VERSION,
        "family": model.family,
        "features": [f.to_dict() for f in model.features],
        "imputation": dict(model.imputation),
        "params": model.params(),
    }
    if extra:
        doc["extra"] = dict(extra)
    return doc


def dumps_model(model: Model, extra: Mapping | None = None) -> str:
    return json.dumps(save_model(model, extra), sort_keys=True, indent=1) + "\n"


def load_model(document: Mapping | str) -> Model:
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise PersistenceError(f"model document is not valid JSON: {exc}") from exc
    if not isinstance(document, Mapping):
        raise PersistenceError("model document must be a JSON object")
    if document.get("format") != FORMAT:
        raise PersistenceError("not a model document")
    if document.get("schema_version") != SCHEMA_VERSION:
        raise PersistenceError(
            f"unsupported schema_version {document.get('schema_version')!r}, expected {SCHEMA_VERSION}")
    family = document.get("family")
    if family not in FAMILIES:
        raise PersistenceError(f"unknown model family {family!r}")
    try:
        features = tuple(FeatureDescriptor.from_dict(d) for d in document["features"])
        model = FAMILIES[family].from_params(features, document["imputation"], document["params"])
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise PersistenceError(f"incomplete {family} model document: {exc!r}") from exc
    return model
