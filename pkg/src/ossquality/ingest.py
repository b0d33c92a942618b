"""Parsing of repository metadata dumps and ports inventories, plus labeling.

Project dumps are header-bearing delimited tables.  Two header columns are
reserved for identity (``project_id`` and ``name``) and one optional column
(``label``) carries a pre-computed success label; every other column must be
an attribute declared in the repository schema.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, TextIO

from .errors import DuplicateKeyError, InputError, InputReadError, SchemaError

log = logging.getLogger(__name__)

ID_COLUMN = "project_id"
NAME_COLUMN = "name"
LABEL_COLUMN = "label"
RESERVED_COLUMNS = (ID_COLUMN, NAME_COLUMN, LABEL_COLUMN)
MULTI_SEPARATOR = "|"

KINDS = ("numeric", "categorical", "multi-categorical", "date")
COMPOSITES = ("vitality", "popularity", "weighted_rating")


class _Missing:
    """Singleton marking an absent or unparseable cell."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Missing, ())


MISSING = _Missing()


class Repository(str, Enum):
    FRESHMEAT = "FreshMeat"
    SOURCEFORGE = "SourceForge"


class Label(str, Enum):
    SUCCESSFUL = "Successful"
    UNSUCCESSFUL = "Unsuccessful"


class PortsSource(str, Enum):
    FREEBSD = "FreeBSDPorts"
    GENTOO = "GentooPortage"


def normalize_name(raw: str) -> str:
    """Lowercase and keep alphanumeric characters only."""
    return "".join(ch for ch in raw.lower() if ch.isalnum())


@dataclass(frozen=True)
class Schema:
    """Declarative description of one portal's attributes.

    ``attributes`` maps attribute name to kind, in column order.
    ``inputs_only`` lists attributes consumed by composite features but not
    encoded on their own.
    """

    repository: Repository
    attributes: Mapping[str, str]
    inputs_only: tuple[str, ...] = ()
    composites: tuple[str, ...] = ()

    def __post_init__(self):
        for name, kind in self.attributes.items():
            if kind not in KINDS:
                raise SchemaError(f"attribute {name!r} has unknown kind {kind!r}")
            if name in RESERVED_COLUMNS:
                raise SchemaError(f"attribute name {name!r} is reserved")
        for name in self.inputs_only:
            if name not in self.attributes:
                raise SchemaError(f"inputs_only names undeclared attribute {name!r}")
        for comp in self.composites:
            if comp not in COMPOSITES:
                raise SchemaError(f"unknown composite feature {comp!r}")
        if self.composites and self.repository is not Repository.FRESHMEAT:
            raise SchemaError("composite features are only defined for FreshMeat")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Schema":
        try:
            return cls(
                repository=Repository(doc["repository"]),
                attributes=dict(doc["attributes"]),
                inputs_only=tuple(doc.get("inputs_only", ())),
                composites=tuple(doc.get("composites", ())),
            )
        except (KeyError, ValueError, TypeError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"malformed schema descriptor: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "repository": self.repository.value,
            "attributes": dict(self.attributes),
            "inputs_only": list(self.inputs_only),
            "composites": list(self.composites),
        }


def load_schema(source: str | Path) -> Schema:
    """Load a schema by builtin name (``freshmeat``/``sourceforge``) or path."""
    key = str(source).lower()
    if key in ("freshmeat", "sourceforge"):
        text = resources.files("ossquality.schemas").joinpath(f"{key}.json").read_text("utf-8")
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise InputReadError(f"cannot read schema {source}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema {source} is not valid JSON: {exc}") from exc
    return Schema.from_dict(doc)


@dataclass(frozen=True)
class ProjectRecord:
    project_id: str
    repository: Repository
    name: str
    raw_fields: dict = field(default_factory=dict)
    label: Label | None = None

    def get(self, attribute):
        return self.raw_fields.get(attribute, MISSING)


@dataclass(frozen=True)
class PortsInventory:
    source: PortsSource
    names: frozenset = frozenset()

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self.names


def _read_all(stream: TextIO) -> str:
    try:
        return stream.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputReadError(f"cannot read input stream: {exc}") from exc


_INT_RE = re.compile(r"[+-]?\d+")


def _parse_cell(kind: str, cell: str):
    cell = cell.strip()
    if not cell:
        return MISSING
    if kind == "numeric":
        if _INT_RE.fullmatch(cell):
            return int(cell)
        try:
            value = float(cell)
        except ValueError:
            return MISSING
        return value if math.isfinite(value) else MISSING
    if kind == "categorical":
        return cell
    if kind == "multi-categorical":
        items = frozenset(part.strip() for part in cell.split(MULTI_SEPARATOR) if part.strip())
        return items if items else MISSING
    try:
        return date.fromisoformat(cell[:10])
    except ValueError:
        return MISSING


def _parse_label(cell: str):
    cell = cell.strip()
    if not cell:
        return None
    for label in Label:
        if cell.lower() == label.value.lower():
            return label
    raise InputError(f"unknown label value {cell!r}")


def parse_projects(stream: TextIO, schema: Schema, delimiter: str = ",") -> list[ProjectRecord]:
    """Parse a project dump into one :class:`ProjectRecord` per data row.

    Unparseable cells become ``MISSING``; only header columns appear in
    ``raw_fields``.  Raises :class:`SchemaError` for unknown columns and
    :class:`DuplicateKeyError` when a ``project_id`` repeats.
    """
    text = _read_all(stream)
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = next(reader, None)
    if header is None:
        return []
    header = [h.strip() for h in header]
    for column in header:
        if column not in schema.attributes and column not in RESERVED_COLUMNS:
            raise SchemaError(f"unknown column {column!r} for {schema.repository.value} schema")
    for required in (ID_COLUMN, NAME_COLUMN):
        if required not in header:
            raise SchemaError(f"missing required column {required!r}")
    if len(set(header)) != len(header):
        raise SchemaError("header repeats a column")

    records = []
    seen: dict[str, int] = {}
    duplicates = set()
    unparseable = 0
    for lineno, row in enumerate(reader, start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise InputError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        cells = dict(zip(header, row))
        pid = cells[ID_COLUMN].strip()
        if not pid:
            raise InputError(f"line {lineno}: empty project_id")
        if pid in seen:
            duplicates.add(pid)
        seen[pid] = lineno
        name = normalize_name(cells[NAME_COLUMN])
        if not name:
            raise InputError(f"line {lineno}: project name normalizes to empty string")
        raw = {}
        for column in header:
            if column in RESERVED_COLUMNS:
                continue
            value = _parse_cell(schema.attributes[column], cells[column])
            if value is MISSING and cells[column].strip():
                unparseable += 1
            raw[column] = value
        label = _parse_label(cells[LABEL_COLUMN]) if LABEL_COLUMN in cells else None
        records.append(ProjectRecord(pid, schema.repository, name, raw, label))
    if duplicates:
        raise DuplicateKeyError(duplicates)
    if unparseable:
        log.warning("%d unparseable cells treated as missing", unparseable)
    return records


def read_projects(path: str | Path, schema: Schema, delimiter: str = ",") -> list[ProjectRecord]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return parse_projects(fh, schema, delimiter)
    except FileNotFoundError as exc:
        raise InputReadError(f"no such file: {path}") from exc


def _format_cell(value) -> str:
    if value is MISSING:
        return ""
    if isinstance(value, frozenset):
        return MULTI_SEPARATOR.join(sorted(value))
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_projects(records: Iterable[ProjectRecord], schema: Schema, stream: TextIO,
                   delimiter: str = ",") -> None:
    """Serialize records in the format :func:`parse_projects` reads."""
    records = list(records)
    present = set()
    for rec in records:
        present.update(rec.raw_fields)
    columns = [a for a in schema.attributes if a in present]
    header = [ID_COLUMN, NAME_COLUMN] + columns
    with_label = any(rec.label is not None for rec in records)
    if with_label:
        header.append(LABEL_COLUMN)
    writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    writer.writerow(header)
    for rec in records:
        row = [rec.project_id, rec.name] + [_format_cell(rec.get(c)) for c in columns]
        if with_label:
            row.append(rec.label.value if rec.label else "")
        writer.writerow(row)


def dedupe_names(records: Iterable[ProjectRecord]) -> tuple[list[ProjectRecord], list[dict]]:
    """Keep the first record per normalized name.

    Returns the kept records and one warning entry per dropped record.
    """
    kept, warnings = [], []
    first: dict[str, str] = {}
    for rec in records:
        if rec.name in first:
            warnings.append({"name": rec.name, "kept": first[rec.name], "dropped": rec.project_id})
            log.warning("duplicate project name %r: keeping %s, dropping %s",
                        rec.name, first[rec.name], rec.project_id)
            continue
        first[rec.name] = rec.project_id
        kept.append(rec)
    return kept, warnings


def parse_ports(stream: TextIO, source: PortsSource) -> PortsInventory:
    """Parse a newline-delimited package list.

    Blank lines and ``#`` comments are skipped.  A ``category/port`` entry
    keeps only its last path component before normalization.
    """
    text = _read_all(stream)
    names = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name = normalize_name(line.rsplit("/", 1)[-1])
        if name:
            names.add(name)
    return PortsInventory(PortsSource(source), frozenset(names))


def read_ports(path: str | Path, source: PortsSource) -> PortsInventory:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_ports(fh, source)
    except FileNotFoundError as exc:
        raise InputReadError(f"no such file: {path}") from exc


def label_projects(records: Iterable[ProjectRecord], freebsd: PortsInventory,
                   gentoo: PortsInventory) -> list[ProjectRecord]:
    """Label a record Successful iff its name is in both inventories."""
    out = []
    in_bsd = in_gentoo = 0
    for rec in records:
        a, b = rec.name in freebsd.names, rec.name in gentoo.names
        in_bsd += a
        in_gentoo += b
        label = Label.SUCCESSFUL if a and b else Label.UNSUCCESSFUL
        out.append(ProjectRecord(rec.project_id, rec.repository, rec.name, rec.raw_fields, label))
    n_success = sum(r.label is Label.SUCCESSFUL for r in out)
    log.info("labeled %d records: %d in FreeBSD ports, %d in Gentoo portage, %d in both",
             len(out), in_bsd, in_gentoo, n_success)
    return out
