"""Seeded synthetic FreshMeat-style corpora with known generative structure.

Success is a noisy threshold on the standardized log popularity composite
plus the standardized log download count; every other attribute is drawn
independently of it.  Successful projects are listed in both ports
inventories and a share of the others appears in just one of them.
"""

from __future__ import annotations

import json
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .ingest import (MISSING, PortsInventory, PortsSource, ProjectRecord, Repository, Schema,
                     load_schema, write_projects)

LICENSES = ("BSD", "Freeware", "GPL", "LGPL", "MIT", "Shareware")
AS_OF = date(2008, 6, 1)


def synthetic_schema() -> Schema:
    """The FreshMeat schema plus a SourceForge-style download counter."""
    base = load_schema("freshmeat")
    attributes = dict(base.attributes)
    attributes["downloads"] = "numeric"
    return Schema(Repository.FRESHMEAT, attributes, base.inputs_only, base.composites)


def generate_corpus(n: int = 5000, seed: int = 0, noise: float = 0.1, threshold: float = 0.5,
                    missing_rate: float = 0.03):
    """Return ``(schema, records, freebsd, gentoo, truth)``.

    ``truth`` is the generated success indicator per record (before the
    inventories are written), useful as ground truth in tests.
    """
    rng = np.random.default_rng(seed)
    hits = np.exp(5.0 + rng.standard_normal(n))
    url_share = rng.uniform(0.3, 0.7, n)
    url_hits = np.round(hits * url_share).astype(int)
    page_hits = np.round(hits * (1 - url_share)).astype(int)
    subscriptions = rng.poisson(3, n)
    downloads = np.round(np.exp(7.0 + 0.5 * rng.standard_normal(n))).astype(int)
    popularity = np.sqrt((url_hits + page_hits) * (subscriptions + 1.0))
    log_pop, log_dl = np.log1p(popularity), np.log1p(downloads)
    latent = ((log_pop - log_pop.mean()) / log_pop.std()
              + (log_dl - log_dl.mean()) / log_dl.std())
    success = latent + noise * rng.standard_normal(n) > threshold

    versions = 1 + rng.poisson(5, n)
    age = rng.integers(200, 3000, n)
    first_offset = rng.integers(0, 60, n)
    votes = rng.poisson(15, n)
    ratings = np.round(rng.uniform(1.0, 10.0, n), 2)
    developers = 1 + rng.poisson(2, n)
    licenses = rng.choice(LICENSES, n)

    schema = synthetic_schema()
    records = []
    for i in range(n):
        reg = AS_OF - timedelta(days=int(age[i]))
        first = reg + timedelta(days=int(first_offset[i]))
        since_latest = min(30 + int(rng.exponential(180)), (AS_OF - first).days)
        latest = AS_OF - timedelta(days=since_latest)
        raw = {
            "license": str(licenses[i]),
            "versions": int(versions[i]),
            "first_release": first,
            "latest_release": latest,
            "url_hits": int(url_hits[i]),
            "page_hits": int(page_hits[i]),
            "subscriptions": int(subscriptions[i]),
            "rating": float(ratings[i]),
            "votes": int(votes[i]),
            "developers": int(developers[i]),
            "registration_date": reg,
            "downloads": int(downloads[i]),
        }
        for attr in ("license", "rating", "developers", "registration_date"):
            if rng.random() < missing_rate:
                raw[attr] = MISSING
        records.append(ProjectRecord(f"fm{i:06d}", Repository.FRESHMEAT, f"project{i:06d}", raw))

    bsd, gentoo = set(), set()
    side = rng.random(n)
    for i, rec in enumerate(records):
        if success[i]:
            bsd.add(rec.name)
            gentoo.add(rec.name)
        elif side[i] < 0.15:
            bsd.add(rec.name)
        elif side[i] < 0.25:
            gentoo.add(rec.name)
    return (schema, records,
            PortsInventory(PortsSource.FREEBSD, frozenset(bsd)),
            PortsInventory(PortsSource.GENTOO, frozenset(gentoo)),
            success)


def write_corpus(out_dir: str | Path, n: int = 5000, seed: int = 0) -> dict[str, Path]:
    """Write ``schema.json``, ``projects.csv``, ``freebsd.txt``, ``gentoo.txt``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema, records, bsd, gentoo, _ = generate_corpus(n, seed)
    paths = {k: out / v for k, v in (("schema", "schema.json"), ("input", "projects.csv"),
                                      ("freebsd", "freebsd.txt"), ("gentoo", "gentoo.txt"))}
    paths["schema"].write_text(json.dumps(schema.to_dict(), indent=2) + "\n", encoding="utf-8")
    with open(paths["input"], "w", encoding="utf-8", newline="") as fh:
        write_projects(records, schema, fh)
    for key, inv in (("freebsd", bsd), ("gentoo", gentoo)):
        paths[key].write_text("# synthetic inventory\n" + "".join(f"{n}\n" for n in sorted(inv.names)),
                              encoding="utf-8")
    return paths
