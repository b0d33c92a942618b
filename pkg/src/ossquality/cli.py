"""Command-line entry point: ``ossquality {rank,train,eval,score,synth}``.

Settings come from built-in defaults, then an optional JSON ``--config``
file (same keys as the long flags, dashes or underscores), then flags.
Exit codes: 0 success, 2 input/validation error, 3 training/evaluation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import re
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path

from . import __version__
from .classifiers import dumps_model, load_model
from .errors import CompatibilityError, ConfigError, OssQualityError, PersistenceError
from .evaluation import (ModelSpec, cross_validate, render_evaluation_table, row_title,
                         top_k_subset)
from .features import Encoder, EncodingPolicy
from .ingest import (PortsSource, dedupe_names, label_projects, load_schema, read_ports,
                     read_projects)
from .selection import dumps_report, rank_features, ranking_report, render_ranking_table

log = logging.getLogger("ossquality")

FAMILIES = ("nb", "tree", "svm")


@dataclass
class RunConfig:
    repo: str = "freshmeat"
    schema: str | None = None
    input: str | None = None
    freebsd: str | None = None
    gentoo: str | None = None
    as_of: str | None = None
    bins: int = 10
    folds: int = 10
    seed: int = 42
    model: str = "nb"
    features: str = "all"
    k: int = 5
    out: str = "out"
    delimiter: str = ","
    log1p: list = field(default_factory=list)
    rank_mode: str = "full"
    smoothing: float = 1.0
    prior_power: float = 1.0
    max_depth: int | None = None
    min_leaf: int = 2
    lam: float = 1e-3
    epochs: int = 20
    class_weight: str | None = None
    figures: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    def as_of_date(self) -> date:
        if not self.as_of:
            raise ConfigError("--as-of is required")
        try:
            return date.fromisoformat(self.as_of)
        except ValueError as exc:
            raise ConfigError(f"--as-of must be YYYY-MM-DD, got {self.as_of!r}") from exc

    def validate(self, need_ports: bool = True):
        if self.repo not in ("freshmeat", "sourceforge"):
            raise ConfigError(f"--repo must be freshmeat or sourceforge, got {self.repo!r}")
        paths = [("input", self.input)]
        if need_ports:
            paths += [("freebsd", self.freebsd), ("gentoo", self.gentoo)]
        if self.schema:
            paths.append(("schema", self.schema))
        for key, path in paths:
            if not path:
                raise ConfigError(f"--{key} is required")
            if not Path(path).is_file():
                raise ConfigError(f"--{key} path does not exist: {path}")
        if self.folds < 2:
            raise ConfigError(f"--folds must be at least 2, got {self.folds}")
        if self.bins < 2:
            raise ConfigError(f"--bins must be at least 2, got {self.bins}")
        if self.model not in FAMILIES + ("all",):
            raise ConfigError(f"--model must be one of nb, tree, svm, all; got {self.model!r}")
        self.feature_conditions()
        self.as_of_date()

    def feature_conditions(self) -> list[int | None]:
        """Feature-subset sizes to evaluate; ``None`` means all features."""
        mode = self.features.lower()
        if mode == "all":
            return [None]
        if mode == "both":
            return [None, self.k]
        if mode == "topk":
            return [self.k]
        m = re.fullmatch(r"top(\d+)", mode)
        if m:
            return [int(m.group(1))]
        raise ConfigError(f"--features must be all, topk, top<N> or both; got {self.features!r}")

    def model_spec(self, family: str) -> ModelSpec:
        if family == "nb":
            return ModelSpec("nb", {"smoothing": self.smoothing, "prior_power": self.prior_power})
        if family == "tree":
            return ModelSpec("tree", {"max_depth": self.max_depth, "min_leaf": self.min_leaf})
        return ModelSpec("svm", {"lam": self.lam, "epochs": self.epochs, "seed": self.seed,
                                 "class_weight": self.class_weight})

    def policy(self) -> EncodingPolicy:
        return EncodingPolicy(as_of=self.as_of_date(), log1p=tuple(self.log1p))


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_inputs(cfg: RunConfig):
    schema = load_schema(cfg.schema or cfg.repo)
    records = read_projects(cfg.input, schema, cfg.delimiter)
    records, dupes = dedupe_names(records)
    bsd = read_ports(cfg.freebsd, PortsSource.FREEBSD)
    gentoo = read_ports(cfg.gentoo, PortsSource.GENTOO)
    records = label_projects(records, bsd, gentoo)
    encoder = Encoder(schema, cfg.policy()).fit(records)
    dataset = encoder.transform(records)
    info = {"records": len(records), "duplicate_names_dropped": len(dupes),
            "successful": int(dataset.y.sum()) if len(dataset) else 0,
            "freebsd_names": len(bsd), "gentoo_names": len(gentoo)}
    log.info("loaded %(records)d records, %(successful)d successful", info)
    return encoder, dataset, info


def _rank(cfg, dataset):
    return rank_features(dataset, cfg.bins, cfg.rank_mode, cfg.folds, cfg.seed)


def cmd_rank(cfg: RunConfig) -> int:
    cfg.validate()
    _, dataset, info = _load_inputs(cfg)
    scores = _rank(cfg, dataset)
    out = Path(cfg.out)
    report = ranking_report(scores, mode=cfg.rank_mode, bins=cfg.bins, config=cfg.to_dict())
    report["data"] = info
    _write_atomic(out / "ranking.json", dumps_report(report))
    title = f"{dataset.repository.value} features ({cfg.rank_mode} data)"
    _write_atomic(out / "ranking.txt", render_ranking_table(scores, title))
    if cfg.figures:
        from .plotting import plot_ranking

        plot_ranking(scores, out / "ranking.png", title)
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    cfg.validate()
    _, dataset, info = _load_inputs(cfg)
    families = FAMILIES if cfg.model == "all" else (cfg.model,)
    conditions = cfg.feature_conditions()
    subsets = {}
    if any(c is not None for c in conditions):
        scores = _rank(cfg, dataset)
        for c in conditions:
            if c is not None:
                subsets[c] = top_k_subset(scores, c)
    reports = []
    for family in families:
        for c in conditions:
            reports.append(cross_validate(dataset, cfg.model_spec(family), cfg.folds, cfg.seed,
                                          subsets.get(c)))
    out = Path(cfg.out)
    doc = {"config": cfg.to_dict(), "data": info,
           "selected_subsets": {f"top{c}": s for c, s in subsets.items()},
           "reports": [r.to_dict() for r in reports]}
    _write_atomic(out / "report.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _write_atomic(out / "report.txt", render_evaluation_table(reports))
    if cfg.figures:
        from .plotting import plot_evaluation

        rows = [(row_title(r), r.mean.precision, r.mean.recall, r.mean.f_measure) for r in reports]
        plot_evaluation(rows, out / "report.png", f"{cfg.folds}-fold cross-validation")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    cfg.validate()
    if cfg.model == "all":
        raise ConfigError("train needs a single --model")
    encoder, dataset, info = _load_inputs(cfg)
    conditions = cfg.feature_conditions()
    if len(conditions) != 1:
        raise ConfigError("train needs --features all or a single top-k condition")
    subset = None
    if conditions[0] is not None:
        subset = top_k_subset(_rank(cfg, dataset), conditions[0])
        dataset = dataset.select(subset)
    model = cfg.model_spec(cfg.model).train(dataset)
    extra = {"encoder": encoder.to_dict(), "feature_subset": subset, "config": cfg.to_dict(),
             "data": info}
    _write_atomic(Path(cfg.out) / "model.json", dumps_model(model, extra))
    return 0


def cmd_score(model_path: str, projects_path: str, out_dir: str, delimiter: str = ",",
              figures: bool = True) -> int:
    for key, path in (("model", model_path), ("input", projects_path)):
        if not path or not Path(path).is_file():
            raise ConfigError(f"--{key} path does not exist: {path}")
    try:
        doc = json.loads(Path(model_path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PersistenceError(f"model file {model_path} is not valid JSON: {exc}") from exc
    model = load_model(doc)
    if "encoder" not in doc.get("extra", {}):
        raise PersistenceError("model document carries no encoder; retrain with `ossquality train`")
    encoder = Encoder.from_dict(doc["extra"]["encoder"])
    records = read_projects(projects_path, encoder.schema, delimiter)
    columns = set(records[0].raw_fields) if records else set()
    missing = encoder.required_attributes(model.feature_names) - columns
    if records and missing:
        raise CompatibilityError(missing)
    dataset = encoder.transform(records, require_labels=False)
    if records:
        dataset = dataset.select(model.feature_names)
        absent = set(model.feature_names) - set(dataset.feature_names)
        if absent:
            raise CompatibilityError(absent)
        preds = model.predict_many(dataset.X)
    else:
        preds = []
    rows = sorted(zip(dataset.project_ids, preds), key=lambda r: (-r[1].successfulness, r[0]))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["project_id", "label", "successfulness"])
    for pid, p in rows:
        writer.writerow([pid, p.label.value, repr(p.successfulness)])
    out = Path(out_dir)
    _write_atomic(out / "scores.csv", buf.getvalue())
    if figures and rows:
        from .plotting import plot_scores

        plot_scores([p.successfulness for _, p in rows], out / "scores.png", model.family)
    return 0


def cmd_synth(out_dir: str, n: int, seed: int) -> int:
    from .synthetic import write_corpus

    write_corpus(out_dir, n, seed)
    return 0


def _add_run_options(p: argparse.ArgumentParser):
    a = p.add_argument
    a("--config", help="JSON file with the same keys as the long flags")
    a("--repo", choices=("freshmeat", "sourceforge"))
    a("--schema", help="schema descriptor overriding the builtin one for --repo")
    a("--input", help="project dump (delimited text)")
    a("--freebsd", help="FreeBSD ports name list")
    a("--gentoo", help="Gentoo portage name list")
    a("--as-of", dest="as_of", help="reference date YYYY-MM-DD for day counts")
    a("--bins", type=int)
    a("--folds", type=int)
    a("--seed", type=int)
    a("--model", help="nb, tree, svm (or all for eval)")
    a("--features", help="all, topk (with --k), top<N>, or both")
    a("--k", type=int)
    a("--out", help="output directory")
    a("--delimiter")
    a("--log1p", type=lambda s: [x for x in s.split(",") if x], help="comma-separated feature names")
    a("--rank-mode", dest="rank_mode", choices=("full", "fold_mean"))
    a("--smoothing", type=float)
    a("--prior-power", dest="prior_power", type=float)
    a("--max-depth", dest="max_depth", type=int)
    a("--min-leaf", dest="min_leaf", type=int)
    a("--lambda", dest="lam", type=float)
    a("--epochs", type=int)
    a("--class-weight", dest="class_weight", choices=("balanced",))
    a("--no-figures", dest="figures", action="store_false", default=None)


def build_config(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if ns.config:
        try:
            raw = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"--config path does not exist: {ns.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--config is not valid JSON: {exc}") from exc
        known = set(RunConfig.__dataclass_fields__)
        for key, value in raw.items():
            key = key.replace("-", "_")
            key = "lam" if key == "lambda" else key
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = value
    for key in RunConfig.__dataclass_fields__:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(**values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ossquality", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("rank", "rank features by IG and chi-square"),
                        ("train", "train and persist one model"),
                        ("eval", "cross-validate classifiers")):
        _add_run_options(sub.add_parser(name, help=help_))
    sp = sub.add_parser("score", help="score unseen projects with a trained model")
    sp.add_argument("--model", required=True, help="model.json written by train")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", default="out")
    sp.add_argument("--delimiter", default=",")
    sp.add_argument("--no-figures", dest="figures", action="store_false")
    sy = sub.add_parser("synth", help="write a seeded synthetic corpus")
    sy.add_argument("--out", default="synthetic")
    sy.add_argument("--n", type=int, default=5000)
    sy.add_argument("--seed", type=int, default=0)
    return parser


def _fail(exc: BaseException, code: int) -> int:
    msg = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    print(json.dumps(msg, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.command == "score":
            return cmd_score(ns.model, ns.input, ns.out, ns.delimiter, ns.figures)
        if ns.command == "synth":
            return cmd_synth(ns.out, ns.n, ns.seed)
        cfg = build_config(ns)
        return {"rank": cmd_rank, "train": cmd_train, "eval": cmd_eval}[ns.command](cfg)
    except OssQualityError as exc:
        return _fail(exc, exc.exit_code)
    except OSError as exc:
        return _fail(exc, 2)
    except Exception as exc:  # noqa: BLE001
        log.debug("unexpected failure", exc_info=True)
        return _fail(exc, 3)
