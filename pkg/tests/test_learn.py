import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebsn_influence.features import FeatureRow, UserDataset
from ebsn_influence.learn import (DECISION_TREE, LINEAR_SVM, Metrics, SVMParams, TreeParams,
                                  confusion_metrics, cross_validate, equal_frequency_bins, evaluate,
                                  mutual_info_select, mutual_information, scenario_columns,
                                  stratified_kfold, train)


def dataset(X, y, user="u"):
    X = np.asarray(X, dtype=float)
    if X.shape[1] < 4:
        X = np.hstack([X, np.zeros((len(X), 4 - X.shape[1]))])
    rows = tuple(FeatureRow(f"e{i:04d}", *map(float, x), bool(t)) for i, (x, t) in enumerate(zip(X, y)))
    return UserDataset(user, rows)


# ---------------------------------------------------------------- folds

@pytest.mark.parametrize("n_pos,n_neg,k", [(5, 5, 5), (10, 10, 10)])
def test_stratified_one_per_class_per_fold(n_pos, n_neg, k):
    labels = [True] * n_pos + [False] * n_neg
    plan = stratified_kfold(labels, k, seed=4)
    for fold in plan.folds:
        assert sorted(labels[i] for i in fold) == [False, True]


@settings(max_examples=80)
@given(st.lists(st.booleans(), min_size=4, max_size=60), st.integers(2, 10), st.integers(0, 99))
def test_fold_plan_properties(labels, k, seed):
    if k > len(labels):
        with pytest.raises(ValueError):
            stratified_kfold(labels, k, seed)
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        plan = stratified_kfold(labels, k, seed)
        again = stratified_kfold(labels, k, seed)
    assert plan == again
    flat = sorted(i for f in plan.folds for i in f)
    assert flat == list(range(len(labels)))
    sizes = [len(f) for f in plan.folds]
    assert max(sizes) - min(sizes) <= 1
    n_pos = sum(labels)
    for f in plan.folds:
        expected = n_pos * len(f) / len(labels)
        assert abs(sum(labels[i] for i in f) - expected) <= 1 + 1e-9


def test_k_below_two_rejected():
    with pytest.raises(ValueError):
        stratified_kfold([True, False], 1)


def test_k_above_minority_warns():
    with pytest.warns(UserWarning):
        stratified_kfold([True] * 2 + [False] * 8, 5)


# ---------------------------------------------------------------- models

def _xor(repeat=10):
    base = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    X = np.repeat(base, repeat, axis=0)
    y = np.repeat([False, True, True, False], repeat)
    return X, y


def _best_stump_accuracy(X, y):
    """Enumerate every depth-1 split with either leaf labelling."""
    best = max(y.mean(), 1 - y.mean())
    for f in range(X.shape[1]):
        for thr in np.unique(X[:, f]):
            left = X[:, f] <= thr
            for lab_l, lab_r in itertools.product((False, True), repeat=2):
                pred = np.where(left, lab_l, lab_r)
                best = max(best, float((pred == y).mean()))
    return best


def test_xor_depth_one_capped_at_three_quarters():
    X, y = _xor()
    # balanced XOR: every stump leaves each side half right
    assert _best_stump_accuracy(X, y) == 0.5 <= 0.75
    stump = train(DECISION_TREE, X, y, TreeParams(max_depth=1, min_leaf=1))
    assert evaluate(stump, X, y).accuracy <= 0.75


def test_xor_depth_two_is_perfect():
    X, y = _xor()
    tree = train(DECISION_TREE, X, y)
    assert tree.depth() >= 2
    assert evaluate(tree, X, y).accuracy == 1.0


def test_tree_respects_max_depth_and_min_leaf():
    rng = np.random.default_rng(0)
    X = rng.random((300, 4))
    y = rng.random(300) < 0.5
    tree = train(DECISION_TREE, X, y, TreeParams(max_depth=3, min_leaf=7))
    assert tree.depth() <= 3

    def leaves(node, Xn):
        if node.is_leaf:
            return [len(Xn)]
        m = Xn[:, node.feature] <= node.threshold
        return leaves(node.left, Xn[m]) + leaves(node.right, Xn[~m])
    assert min(leaves(tree.root, X)) >= 7


@pytest.mark.parametrize("seed", range(5))
def test_svm_separates_separable_data(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((120, 2))
    margin = X[:, 0] + X[:, 1] - 1.0
    keep = np.abs(margin) > 0.15
    X, y = X[keep], margin[keep] > 0
    model = train(LINEAR_SVM, X, y)
    assert evaluate(model, X, y).accuracy == 1.0


def test_single_class_gives_constant_classifier():
    X = np.random.default_rng(1).random((10, 4))
    for kind in (DECISION_TREE, LINEAR_SVM):
        model = train(kind, X, np.ones(10, dtype=bool))
        assert model.is_constant and model.predict(X).all()


def test_empty_training_set_rejected():
    with pytest.raises(ValueError):
        train(LINEAR_SVM, np.zeros((0, 4)), np.zeros(0, dtype=bool))


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        train("dnn", np.zeros((2, 4)), np.array([True, False]))


def test_training_is_deterministic():
    rng = np.random.default_rng(2)
    X, y = rng.random((80, 4)), rng.random(80) < 0.5
    a, b = train(LINEAR_SVM, X, y, seed=3), train(LINEAR_SVM, X, y, seed=3)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
    t1, t2 = train(DECISION_TREE, X, y), train(DECISION_TREE, X, y)
    assert np.array_equal(t1.predict(X), t2.predict(X))


@pytest.mark.parametrize("transform", [np.cbrt, np.exp, lambda v: 3 * v - 7, lambda v: v ** 3 + v])
def test_tree_invariant_under_increasing_transform(transform):
    rng = np.random.default_rng(5)
    X, y = rng.random((200, 4)), rng.random(200) < 0.5
    y |= X[:, 2] > 0.8
    X_test = rng.random((100, 4))
    base = train(DECISION_TREE, X, y).predict(X_test)
    col = 2
    Xt, Xt_test = X.copy(), X_test.copy()
    Xt[:, col] = transform(X[:, col])
    Xt_test[:, col] = transform(X_test[:, col])
    assert np.array_equal(train(DECISION_TREE, Xt, y).predict(Xt_test), base)


def test_svm_hyperparameters_change_model():
    rng = np.random.default_rng(8)
    X, y = rng.random((60, 4)), rng.random(60) < 0.5
    a = train(LINEAR_SVM, X, y, SVMParams(lam=1e-3, epochs=200))
    b = train(LINEAR_SVM, X, y, SVMParams(lam=1.0, epochs=200))
    assert np.linalg.norm(b.weights) < np.linalg.norm(a.weights)


# ---------------------------------------------------------------- metrics

def test_metrics_from_counts():
    m = Metrics.from_counts(tp=3, fp=1, tn=4, fn=2)
    assert (m.accuracy, m.precision, m.recall) == (0.7, 0.75, 0.6)


def test_perfect_predictions():
    y = np.array([True, False] * 5)
    m = confusion_metrics(y, y)
    assert m.accuracy == m.precision == m.recall == 1.0


def test_no_positive_rows_flags_recall():
    m = confusion_metrics([False] * 4, [False, True, False, False])
    assert m.recall == 0.0 and m.recall_undefined
    assert not m.precision_undefined


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_metric_identities(tp, fp, tn, fn):
    if tp + fp + tn + fn == 0:
        return
    m = Metrics.from_counts(tp, fp, tn, fn)
    assert m.accuracy * (tp + fp + tn + fn) == pytest.approx(tp + tn)
    if tp + fp:
        assert m.precision * (tp + fp) == pytest.approx(tp)
    if tp + fn:
        assert m.recall * (tp + fn) == pytest.approx(tp)


def test_mean_is_unweighted():
    m = Metrics.mean([Metrics.from_counts(1, 0, 0, 0), Metrics.from_counts(0, 0, 0, 3)])
    assert m.accuracy == 0.5 and m.tp == 1 and m.fn == 3


# ---------------------------------------------------------------- cross-validation

def _threshold_dataset(seed=0, n=100):
    # participation values are fractions, so draw them from a grid of twentieths
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 21, size=(n, 4)) / 20
    return dataset(X, X[:, 0] > 0.5)


def test_cv_tree_on_exact_rule():
    assert cross_validate(DECISION_TREE, _threshold_dataset()).accuracy == 1.0


def test_cv_svm_on_exact_rule():
    assert cross_validate(LINEAR_SVM, _threshold_dataset()).accuracy >= 0.95


@pytest.mark.parametrize("seed", range(5))
def test_cv_on_random_labels_is_chance(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((100, 4))
    y = rng.permutation([True] * 50 + [False] * 50)
    for kind in (DECISION_TREE, LINEAR_SVM):
        assert abs(cross_validate(kind, dataset(X, y)).accuracy - 0.5) <= 0.15


def test_cv_invariant_to_row_order():
    ds = _threshold_dataset(3)
    ds = UserDataset("u", tuple(r if i % 3 else FeatureRow(r.event_id, r.p_ego, r.p_sc, r.p_pc, r.p_hc,
                                                           not r.label)
                                for i, r in enumerate(ds.rows)))
    shuffled = UserDataset("u", tuple(ds.rows[i] for i in np.random.default_rng(1).permutation(len(ds.rows))))
    for kind in (DECISION_TREE, LINEAR_SVM):
        assert cross_validate(kind, ds, seed=2) == cross_validate(kind, shuffled, seed=2)


# ---------------------------------------------------------------- mutual information

def test_equal_frequency_bins_balanced():
    counts = np.bincount(equal_frequency_bins(np.arange(100.0), 10))
    assert counts.tolist() == [10] * 10


def test_mutual_information_known_values():
    a = np.array([0, 0, 1, 1] * 25)
    assert mutual_information(a, a) == pytest.approx(np.log(2))
    assert mutual_information(a, np.array([0, 1, 0, 1] * 25)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_mi_selects_planted_feature(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((200, 4))
    y = X[:, 1] > np.median(X[:, 1])
    sel = mutual_info_select(dataset(X, y))
    assert sel.feature == "SC" and not sel.low_confidence


def test_mi_identical_columns_tie_to_ego():
    rng = np.random.default_rng(0)
    col = rng.random(100)
    X = np.column_stack([col] * 4)
    assert mutual_info_select(dataset(X, col > 0.5)).feature == "ego"


def test_mi_constant_dataset_degenerate():
    sel = mutual_info_select(dataset(np.full((40, 4), 0.3), [True, False] * 20))
    assert sel.feature == "ego" and sel.degenerate


@pytest.mark.parametrize("seed", range(5))
def test_mi_independent_labels_near_zero(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((1000, 4))
    y = rng.random(1000) < 0.5
    sel = mutual_info_select(dataset(X, y))
    assert all(0.0 <= s < 0.02 for s in sel.scores.values())


def test_mi_low_confidence_flag():
    rng = np.random.default_rng(11)
    X = rng.random((4000, 4))
    sel = mutual_info_select(dataset(X, rng.random(4000) < 0.5))
    assert sel.low_confidence


def test_scenario_columns():
    sel = mutual_info_select(_threshold_dataset())
    assert scenario_columns("all_features") == (0, 1, 2, 3)
    assert scenario_columns("only_pc") == (2,)
    assert scenario_columns("feature_selection", sel) == (0,)
    with pytest.raises(ValueError):
        scenario_columns("feature_selection")
