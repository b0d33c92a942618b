import csv
import json
import subprocess
import sys

import pytest

from ossquality.cli import main
from ossquality.synthetic import write_corpus

AS_OF = "2008-06-01"


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return write_corpus(tmp_path_factory.mktemp("corpus"), n=600, seed=3)


def run_args(corpus, out, *extra):
    return ["--schema", str(corpus["schema"]), "--input", str(corpus["input"]),
            "--freebsd", str(corpus["freebsd"]), "--gentoo", str(corpus["gentoo"]),
            "--as-of", AS_OF, "--log1p", "popularity,downloads", "--out", str(out), *extra]


def last_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return json.loads(err[0])


def test_rank_writes_reports(corpus, tmp_path):
    assert main(["rank", *run_args(corpus, tmp_path)]) == 0
    report = json.loads((tmp_path / "ranking.json").read_text())
    assert report["attributes"][0]["name"] in ("popularity", "downloads")
    assert {a["name"] for a in report["attributes"][:2]} == {"popularity", "downloads"}
    assert report["config"]["seed"] == 42 and report["config"]["as_of"] == AS_OF
    text = (tmp_path / "ranking.txt").read_text()
    assert text.splitlines()[1].startswith("Feature")
    assert (tmp_path / "ranking.png").stat().st_size > 0


def test_rank_is_byte_identical(corpus, tmp_path):
    outputs = []
    for _ in range(2):
        assert main(["rank", *run_args(corpus, tmp_path), "--no-figures"]) == 0
        outputs.append((tmp_path / "ranking.json").read_bytes())
    assert outputs[0] == outputs[1]


def test_missing_ports_file(corpus, tmp_path, capsys):
    args = run_args(corpus, tmp_path)
    args[args.index("--gentoo") + 1] = str(tmp_path / "nope.txt")
    assert main(["rank", *args]) == 2
    err = last_error(capsys)
    assert "nope.txt" in err["message"] and err["exit_code"] == 2


def test_eval_rejects_single_fold(corpus, tmp_path, capsys):
    assert main(["eval", *run_args(corpus, tmp_path, "--folds", "1")]) == 2
    assert "folds" in last_error(capsys)["message"]


def test_eval_nb_and_top5_subset(corpus, tmp_path):
    assert main(["eval", *run_args(corpus, tmp_path, "--model", "nb", "--features", "both")]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    subset = doc["selected_subsets"]["top5"]
    assert len(subset) == 5 and {"popularity", "downloads"} <= set(subset)
    all_feats, top5 = doc["reports"]
    assert top5["config"]["feature_subset"] == subset
    # labels follow a near-noiseless rule, so NB should recover most of them
    assert all_feats["mean"]["f_measure"] >= 0.8
    table = (tmp_path / "report.txt").read_text()
    assert "NB All Features" in table and "NB Top-5 Features" in table
    assert (tmp_path / "report.png").exists()


def test_eval_reports_are_byte_identical(corpus, tmp_path):
    outputs = []
    for _ in range(2):
        assert main(["eval", *run_args(corpus, tmp_path, "--model", "svm", "--folds", "3",
                                       "--epochs", "3", "--no-figures")]) == 0
        outputs.append((tmp_path / "report.json").read_bytes())
    assert outputs[0] == outputs[1]


def test_config_file_with_flag_override(corpus, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"schema": str(corpus["schema"]), "input": str(corpus["input"]),
                               "freebsd": str(corpus["freebsd"]), "gentoo": str(corpus["gentoo"]),
                               "as-of": AS_OF, "bins": 4, "model": "tree", "folds": 3}))
    assert main(["eval", "--config", str(cfg), "--out", str(tmp_path), "--folds", "4", "--no-figures"]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["bins"] == 4 and doc["config"]["folds"] == 4
    assert len(doc["reports"][0]["folds"]) == 4


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"colour": 1}')
    assert main(["rank", "--config", str(cfg)]) == 2
    assert "colour" in last_error(capsys)["message"]


def _scores(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def tree_model(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    assert main(["train", *run_args(corpus, out, "--model", "tree", "--features", "top5")]) == 0
    return out / "model.json"


def test_train_then_score_training_data(corpus, tree_model, tmp_path):
    assert main(["score", "--model", str(tree_model), "--input", str(corpus["input"]),
                 "--out", str(tmp_path)]) == 0
    rows = _scores(tmp_path / "scores.csv")
    assert len(rows) == 600
    values = [float(r["successfulness"]) for r in rows]
    assert values == sorted(values, reverse=True)
    for r, s in zip(rows, values):
        assert 0.0 <= s <= 1.0
        assert (r["label"] == "Successful") == (s >= 0.5)
    assert (tmp_path / "scores.png").exists()
    doc = json.loads(tree_model.read_text())
    assert len(doc["extra"]["feature_subset"]) == 5


def test_score_unknown_categories(corpus, tmp_path):
    out = tmp_path / "m"
    assert main(["train", *run_args(corpus, out, "--model", "nb")]) == 0
    lines = corpus["input"].read_text().splitlines()
    header = lines[0].split(",")
    col = header.index("license")
    fresh = [lines[0]]
    for line in lines[1:6]:
        cells = line.split(",")
        cells[col] = "WTFPL"
        fresh.append(",".join(cells))
    probe = tmp_path / "new.csv"
    probe.write_text("\n".join(fresh) + "\n")
    assert main(["score", "--model", str(out / "model.json"), "--input", str(probe),
                 "--out", str(tmp_path / "s"), "--no-figures"]) == 0
    assert len(_scores(tmp_path / "s" / "scores.csv")) == 5


def test_score_compatibility_error(corpus, tree_model, tmp_path, capsys):
    subset = json.loads(tree_model.read_text())["extra"]["feature_subset"]
    assert "downloads" in subset
    lines = corpus["input"].read_text().splitlines()
    col = lines[0].split(",").index("downloads")
    stripped = [",".join(c for j, c in enumerate(line.split(",")) if j != col) for line in lines]
    probe = tmp_path / "nodl.csv"
    probe.write_text("\n".join(stripped) + "\n")
    assert main(["score", "--model", str(tree_model), "--input", str(probe), "--out", str(tmp_path)]) == 2
    err = last_error(capsys)
    assert err["error"] == "CompatibilityError" and "downloads" in err["message"]


def test_score_ten_thousand_rows_deterministic(tree_model, tmp_path):
    big = write_corpus(tmp_path / "big", n=10_000, seed=11)
    for sub in ("a", "b"):
        assert main(["score", "--model", str(tree_model), "--input", str(big["input"]),
                     "--out", str(tmp_path / sub), "--no-figures"]) == 0
    a = (tmp_path / "a" / "scores.csv").read_bytes()
    assert a == (tmp_path / "b" / "scores.csv").read_bytes()
    assert a.count(b"\n") == 10_001


def test_corrupt_model_file(corpus, tmp_path, capsys):
    bad = tmp_path / "model.json"
    bad.write_text('{"format": "ossquality.model", "schema_version": 1')
    assert main(["score", "--model", str(bad), "--input", str(corpus["input"]), "--out", str(tmp_path)]) == 2
    assert last_error(capsys)["error"] == "PersistenceError"


def test_training_error_exit_code(tmp_path, capsys):
    paths = write_corpus(tmp_path / "c", n=40, seed=1)
    (tmp_path / "empty.txt").write_text("")
    assert main(["eval", "--schema", str(paths["schema"]), "--input", str(paths["input"]),
                 "--freebsd", str(paths["freebsd"]), "--gentoo", str(tmp_path / "empty.txt"),
                 "--as-of", AS_OF, "--folds", "2", "--out", str(tmp_path), "--no-figures"]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ossquality", "synth", "--out", str(tmp_path),
                           "--n", "30", "--seed", "2"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert sorted(p.name for p in tmp_path.iterdir()) == ["freebsd.txt", "gentoo.txt", "projects.csv",
                                                          "schema.json"]
