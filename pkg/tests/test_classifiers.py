import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TENNIS_COLUMNS, TENNIS_ROWS, categorical_dataset
from ossquality.classifiers import (DecisionTreeModel, LinearSvmModel, dumps_model, load_model,
                                    predict_nb, predict_svm, predict_tree, save_model, train_majority,
                                    train_nb, train_svm, train_tree)
from ossquality.classifiers.naive_bayes import VARIANCE_FLOOR
from ossquality.errors import PersistenceError, TrainingError
from ossquality.features import EncodedDataset, FeatureDescriptor
from ossquality.ingest import Label
from ossquality.selection import entropy

S, U = Label.SUCCESSFUL, Label.UNSUCCESSFUL


def numeric_dataset(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = names or [f"x{j}" for j in range(X.shape[1])]
    feats = tuple(FeatureDescriptor(n, "numeric", n, "passthrough") for n in names)
    return EncodedDataset(feats, X, np.asarray(y, dtype=np.int8))


def brute_force_posterior(rows, labels, probe, ks, alpha):
    """P(Successful | probe) from raw joint counts with add-alpha smoothing."""
    alpha = Fraction(alpha)
    joint = {}
    for c in (0, 1):
        members = [r for r, y in zip(rows, labels) if y == c]
        p = Fraction(len(members), len(rows))
        for j, v in enumerate(probe):
            hits = sum(1 for r in members if r[j] == v)
            p *= (hits + alpha) / (len(members) + alpha * ks[j])
        joint[c] = p
    return float(joint[1] / (joint[0] + joint[1]))


# -- naive Bayes --------------------------------------------------------------


def test_nb_prior():
    ds = categorical_dataset([("a",)] * 8, ["f"], [1] * 6 + [0] * 2)
    assert train_nb(ds).priors[1] == pytest.approx(0.75, abs=1e-15)


EIGHT = [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y"), ("c", "x"), ("a", "x"), ("b", "y"), ("c", "y")]
EIGHT_Y = [1, 1, 0, 0, 1, 0, 1, 0]


@pytest.mark.parametrize("alpha", [1.0, 0.5, 3.0])
def test_nb_matches_joint_count_oracle(alpha):
    ds = categorical_dataset(EIGHT, ["f", "g"], EIGHT_Y)
    model = train_nb(ds, smoothing=alpha)
    ks = [len(f.categories) for f in ds.features]
    for i, row in enumerate(EIGHT):
        got = model.posteriors(ds.X[i:i + 1])[0]
        assert got == pytest.approx(brute_force_posterior(EIGHT, EIGHT_Y, row, ks, alpha), abs=1e-12)
    pred = predict_nb(model, ds.X[0])
    assert pred.successfulness == pred.confidence


def test_nb_large_smoothing_is_uniform():
    ds = categorical_dataset(EIGHT, ["f", "g"], EIGHT_Y)
    model = train_nb(ds, smoothing=1e12)
    for j, f in enumerate(ds.features):
        np.testing.assert_allclose(model.tables[j], 1.0 / len(f.categories), atol=1e-9)


def test_nb_symmetric_featureless_posterior_half():
    ds = EncodedDataset((), np.zeros((4, 0)), np.array([0, 1, 0, 1], dtype=np.int8))
    assert predict_nb(train_nb(ds), []).successfulness == 0.5


def test_nb_tables_normalized_and_variance_floor():
    feats = (FeatureDescriptor("c", "categorical", "c", "category_index", ("p", "q", "r")),
             FeatureDescriptor("n", "numeric", "n", "passthrough"))
    X = np.array([[0, 1.0], [1, 1.0], [2, 1.0], [0, 1.0]])
    model = train_nb(EncodedDataset(feats, X, np.array([1, 0, 1, 0], dtype=np.int8)))
    np.testing.assert_allclose(model.tables[0].sum(axis=1), 1.0, atol=1e-9)
    assert (model.variances[1] >= VARIANCE_FLOOR).all()


def test_nb_unknown_category_uses_missing_likelihood():
    feats = (FeatureDescriptor("c", "categorical", "c", "category_index", ("p", "q", "<missing>")),)
    X = np.array([[0], [1], [0], [2]], dtype=float)
    model = train_nb(EncodedDataset(feats, X, np.array([1, 0, 1, 0], dtype=np.int8)))
    assert model.posteriors([[7.0]])[0] == model.posteriors([[2.0]])[0]
    assert model.posteriors([[np.nan]])[0] == model.posteriors([[2.0]])[0]


def test_nb_single_class_error():
    with pytest.raises(TrainingError):
        train_nb(categorical_dataset([("a",), ("b",)], ["f"], [1, 1]))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(
    st.lists(st.tuples(*[st.sampled_from("abc")] * 3), min_size=n, max_size=n),
    st.lists(st.sampled_from([0, 1]), min_size=n, max_size=n).filter(lambda y: 0 < sum(y) < len(y)),
    st.integers(1, 3), st.sampled_from([0.5, 1.0, 2.0]))))
def test_nb_oracle_property(case):
    rows, labels, width, alpha = case
    rows = [r[:width] for r in rows]
    ds = categorical_dataset(rows, [f"f{j}" for j in range(width)], labels)
    model = train_nb(ds, smoothing=alpha)
    ks = [len(f.categories) for f in ds.features]
    post = model.posteriors(ds.X)
    for i, row in enumerate(rows):
        assert post[i] == pytest.approx(brute_force_posterior(rows, labels, row, ks, alpha), abs=1e-12)


# -- decision tree --------------------------------------------------------------


def test_tree_depth_one_on_separable_feature():
    ds = categorical_dataset([("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")] * 3, ["sep", "noise"],
                             [1, 1, 0, 0] * 3)
    model = train_tree(ds)
    assert model.depth() == 1 and model.root.feature == 0


def test_tree_tennis_root_and_gains(tennis):
    model = train_tree(tennis)
    root = model.root
    assert TENNIS_COLUMNS[root.feature] == "outlook"
    assert root.gain == pytest.approx(0.2467, abs=1e-4)
    children = {tennis.features[0].categories[k]: c for k, c in root.children.items()}
    assert children["overcast"].is_leaf and children["overcast"].counts == (0, 4)
    assert TENNIS_COLUMNS[children["sunny"].feature] == "humidity"
    assert TENNIS_COLUMNS[children["rain"].feature] == "wind"
    # both subsets are split perfectly: gain equals their class entropy [2, 3]
    assert children["sunny"].gain == pytest.approx(entropy([2, 3]), abs=1e-4)
    assert children["rain"].gain == pytest.approx(entropy([3, 2]), abs=1e-4)


def _encode_tennis(tennis, row):
    return [tennis.features[j].categories.index(v) for j, v in enumerate(row)]


def test_tree_hand_traced_probes(tennis):
    model = train_tree(tennis)
    # sunny + high humidity: leaf of 3 "no" rows
    p = predict_tree(model, _encode_tennis(tennis, ("sunny", "cool", "high", "strong")))
    assert p.label is U and p.successfulness == pytest.approx(1 / 5)
    # rain + weak wind: leaf of 3 "yes" rows
    p = predict_tree(model, _encode_tennis(tennis, ("rain", "hot", "normal", "weak")))
    assert p.label is S and p.successfulness == pytest.approx(4 / 5)
    p = predict_tree(model, _encode_tennis(tennis, ("overcast", "hot", "high", "strong")))
    assert p.successfulness == pytest.approx(5 / 6)


def test_tree_single_row():
    model = train_tree(categorical_dataset([("a",)], ["f"], [1]))
    assert model.root.is_leaf
    assert predict_tree(model, [0]).label is S


def test_tree_laplace_leaf_frequency():
    ds = categorical_dataset([("a",)] * 9 + [("b",)] * 9, ["f"], [1] * 9 + [0] * 9)
    p = predict_tree(train_tree(ds), [0])
    assert p.successfulness == pytest.approx(10 / 11, abs=1e-12)


def test_tree_unseen_category_takes_largest_child():
    ds = categorical_dataset([("a",)] * 6 + [("b",)] * 3, ["f"], [1] * 6 + [0] * 3)
    model = train_tree(ds)
    p = predict_tree(model, [9])
    assert p.label is S and p.successfulness == pytest.approx(7 / 8)
    assert predict_tree(model, [np.nan]).successfulness == pytest.approx(7 / 8)


def test_tree_numeric_threshold_midpoint():
    ds = numeric_dataset([[1.0], [2.0], [3.0], [10.0], [11.0], [12.0]], [0, 0, 0, 1, 1, 1])
    model = train_tree(ds)
    assert model.root.threshold == 6.5
    assert predict_tree(model, [6.5]).label is U
    assert predict_tree(model, [6.6]).label is S


def test_tree_single_class_is_one_leaf():
    model = train_tree(categorical_dataset([("a",), ("b",), ("a",)], ["f"], [0, 0, 0]))
    assert model.root.is_leaf and model.root.counts == (3, 0)


def test_tree_leaf_counts_sum_to_training_rows(tennis):
    model = train_tree(tennis, min_leaf=1)
    assert sum(leaf.total for leaf in model.leaves()) == len(tennis)


def _path_features(node, seen=()):
    if node.is_leaf:
        yield seen
        return
    for child in node.children.values():
        yield from _path_features(child, seen + ((node.feature, node.threshold),))


consistent = st.lists(st.tuples(st.sampled_from("ab"), st.sampled_from("xyz"), st.integers(0, 4)),
                      min_size=2, max_size=30)


@settings(max_examples=80, deadline=None)
@given(consistent, st.randoms())
def test_tree_fits_consistent_data(rows, rnd):
    distinct = sorted(set(rows))
    label_of = {r: rnd.randint(0, 1) for r in distinct}
    y = [label_of[r] for r in rows]
    cat = categorical_dataset([r[:2] for r in rows], ["c1", "c2"], y)
    feats = cat.features + (FeatureDescriptor("n", "numeric", "n", "passthrough"),)
    X = np.column_stack([cat.X, [r[2] for r in rows]])
    ds = EncodedDataset(feats, X, np.array(y, dtype=np.int8))
    model = train_tree(ds, max_depth=None, min_leaf=1, stop_on_zero_gain=False)
    assert (model.predict_labels(ds.X) == ds.y).all()
    for path in _path_features(model.root):
        categorical = [j for j, thr in path if thr is None]
        assert len(categorical) == len(set(categorical))


# -- linear SVM --------------------------------------------------------------


def test_svm_two_points():
    ds = numeric_dataset([[-1.0], [1.0]], [0, 1])
    model = train_svm(ds, seed=0)
    assert model.weights[0] > 0
    assert model.predict_labels(ds.X).tolist() == [0, 1]


def blobs(seed=5, n=100):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal([2, 2], 0.6, (n, 2)), rng.normal([-2, -2], 0.6, (n, 2))])
    y = np.r_[np.ones(n), np.zeros(n)].astype(np.int8)
    return X, y


def separable_by_scan(X, y, steps=3600):
    """Brute-force check: some direction strictly separates the projections."""
    for k in range(steps):
        theta = 2 * math.pi * k / steps
        proj = X @ np.array([math.cos(theta), math.sin(theta)])
        if proj[y == 1].min() > proj[y == 0].max():
            return True
    return False


def test_svm_blobs_separable():
    X, y = blobs()
    assert separable_by_scan(X, y)
    model = train_svm(numeric_dataset(X, y))
    assert (model.predict_labels(X) == y).all()


def test_svm_objective_non_increasing():
    X, y = blobs()
    trace = train_svm(numeric_dataset(X, y), epochs=30).objective_trace
    assert len(trace) == 30
    assert all(b <= a + 1e-3 for a, b in zip(trace, trace[1:]))


def _manual_svm(weights, bias, mean=None, std=None):
    d = len(weights)
    feats = tuple(FeatureDescriptor(f"x{j}", "numeric", f"x{j}", "passthrough") for j in range(d))
    return LinearSvmModel(feats, {}, weights=weights, bias=bias, lam=1e-3,
                          mean=np.zeros(d) if mean is None else mean,
                          std=np.ones(d) if std is None else std, epochs=1, seed=0)


def test_svm_distance_geometry():
    model = _manual_svm([1.0, 0.0], 0.0)
    p = predict_svm(model, [2.0, 0.0])
    assert p.confidence == 2.0 and p.label is S
    p = predict_svm(model, [0.0, 5.0])
    assert p.confidence == 0.0 and p.successfulness == 0.5


def test_svm_zero_weight_degenerate():
    p = predict_svm(_manual_svm([0.0, 0.0], 0.0), [3.0, 1.0])
    assert p.confidence == 0.0 and p.label is U


def test_svm_distance_matches_dot_product():
    rng = np.random.default_rng(17)
    for _ in range(20):
        w, b = rng.normal(size=3), float(rng.normal())
        mean, std = rng.normal(size=3), rng.uniform(0.5, 2, size=3)
        model = _manual_svm(w, b, mean, std)
        X = rng.normal(size=(10, 3)) * 3
        conf, _ = model.scores(X)
        norm = math.sqrt(sum(v * v for v in w))
        for x, c in zip(X, conf):
            z = sum(wi * (xi - mi) / si for wi, xi, mi, si in zip(w, x, mean, std)) + b
            assert c == pytest.approx(z / norm, abs=1e-12)


@given(st.floats(0.01, 100))
def test_svm_label_invariant_under_scaling(k):
    rng = np.random.default_rng(3)
    w, b = rng.normal(size=2), 0.3
    X = rng.normal(size=(50, 2))
    a = _manual_svm(w, b).predict_labels(X)
    assert (a == _manual_svm(w * k, b * k).predict_labels(X)).all()


def test_svm_one_hot_categorical_and_balanced_weights(tennis):
    model = train_svm(tennis, class_weight="balanced")
    assert len(model.weights) == sum(len(f.categories) for f in tennis.features)
    assert model.predict_labels(tennis.X).shape == (14,)


def test_svm_single_class_error():
    with pytest.raises(TrainingError):
        train_svm(numeric_dataset([[1.0], [2.0]], [1, 1]))


def test_svm_deterministic_given_seed():
    X, y = blobs(seed=9)
    a = train_svm(numeric_dataset(X, y), seed=4)
    b = train_svm(numeric_dataset(X, y), seed=4)
    assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias


# -- shared contract and persistence ---------------------------------------------


def mixed_dataset(seed, n=60):
    rng = np.random.default_rng(seed)
    feats = (FeatureDescriptor("c", "categorical", "c", "category_index", ("p", "q", "<missing>")),
             FeatureDescriptor("b", "binary", "b", "multi_hot", ("0", "1")),
             FeatureDescriptor("n", "numeric", "n", "passthrough"))
    X = np.column_stack([rng.integers(0, 3, n), rng.integers(0, 2, n), rng.normal(size=n)])
    X[rng.random(n) < 0.1, 2] = np.nan
    y = ((X[:, 0] == 0) ^ (rng.random(n) < 0.2)).astype(np.int8)
    y[:2] = [0, 1]
    return EncodedDataset(feats, X, y)


TRAINERS = {"nb": train_nb, "tree": train_tree, "svm": train_svm, "majority": train_majority}


@pytest.mark.parametrize("family", sorted(TRAINERS))
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_label_agrees_with_successfulness(family, seed):
    ds = mixed_dataset(seed)
    for p in TRAINERS[family](ds).predict_many(ds.X):
        assert 0.0 <= p.successfulness <= 1.0
        assert (p.successfulness >= 0.5) == (p.label is S)


@pytest.mark.parametrize("family", sorted(TRAINERS))
def test_round_trip_predicts_identically(family):
    ds = mixed_dataset(1)
    model = TRAINERS[family](ds)
    again = load_model(dumps_model(model))
    probes = np.random.default_rng(2).normal(size=(100, 3)) + [1, 0.5, 0]
    probes[:, 0] = np.round(np.abs(probes[:, 0])) % 3
    probes[:, 1] = probes[:, 1] > 0.5
    a, b = model.scores(probes), again.scores(probes)
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()
    assert type(again) is type(model)


def test_saved_tree_reproduces_leaf_counts(tennis):
    model = train_tree(tennis, min_leaf=1)
    again = load_model(json.loads(json.dumps(save_model(model))))
    assert isinstance(again, DecisionTreeModel)
    assert [leaf.counts for leaf in again.leaves()] == [leaf.counts for leaf in model.leaves()]
    assert again.root.to_dict() == model.root.to_dict()


def test_corrupted_documents_rejected(tennis):
    text = dumps_model(train_nb(tennis))
    with pytest.raises(PersistenceError):
        load_model(text[: len(text) // 2])
    doc = json.loads(text)
    doc["schema_version"] = 99
    with pytest.raises(PersistenceError):
        load_model(doc)
    doc = json.loads(text)
    del doc["params"]["priors"]
    with pytest.raises(PersistenceError):
        load_model(doc)
    doc = json.loads(text)
    doc["family"] = "forest"
    with pytest.raises(PersistenceError):
        load_model(doc)
    with pytest.raises(PersistenceError):
        load_model("[1, 2]")


def test_predict_is_pure(tennis):
    model = train_tree(tennis)
    before = dumps_model(model)
    first = model.predict_many(tennis.X)
    assert model.predict_many(tennis.X) == first
    assert dumps_model(model) == before


def test_tennis_fixture_class_balance():
    assert len(TENNIS_ROWS) == 14 and sum(r[4] == "yes" for r in TENNIS_ROWS) == 9
