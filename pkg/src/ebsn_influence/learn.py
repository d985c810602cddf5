"""Attendance classifiers, stratified cross-validation and mutual-information selection."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .features import GROUPS, UserDataset

DECISION_TREE = "decision-tree"
LINEAR_SVM = "linear-svm"
KINDS = (DECISION_TREE, LINEAR_SVM)

FEATURE_NAMES = ("ego", "SC", "PC", "HC")
SCENARIOS = ("all_features", "only_ego", "only_sc", "only_pc", "only_hc", "feature_selection")


# ---------------------------------------------------------------- folds

@dataclass(frozen=True)
class FoldPlan:
    k: int
    folds: Tuple[Tuple[int, ...], ...]

    def splits(self):
        n = sum(len(f) for f in self.folds)
        for test in self.folds:
            mask = np.ones(n, dtype=bool)
            mask[list(test)] = False
            yield np.flatnonzero(mask), np.array(test, dtype=int)


def stratified_kfold(labels: Sequence[bool], k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class with `seed` and deal its rows round-robin into `k` folds.

    The second class continues the deal where the first stopped, so fold sizes
    differ by at most one.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    labels = np.asarray(labels, dtype=bool)
    n = len(labels)
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows ({n})")
    minority = min(labels.sum(), n - labels.sum())
    if k > minority:
        warnings.warn(f"k={k} exceeds minority class size {minority}; some folds lack that class",
                      stacklevel=2)
    rng = np.random.default_rng(seed)
    folds: List[List[int]] = [[] for _ in range(k)]
    pos = 0
    for cls in (True, False):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        for i in idx:
            folds[pos % k].append(int(i))
            pos += 1
    return FoldPlan(k, tuple(tuple(sorted(f)) for f in folds))


# ---------------------------------------------------------------- models

@dataclass
class _Node:
    label: bool
    feature: int = -1
    threshold: float = 0.0
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None

    @property
    def is_leaf(self):
        return self.left is None


def _gini(n_pos, n):
    if n == 0:
        return 0.0
    p = n_pos / n
    return 2.0 * p * (1.0 - p)


def _best_split(X, y, min_leaf):
    n = len(y)
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        cum_pos = np.cumsum(ys)
        total_pos = cum_pos[-1]
        for i in range(min_leaf - 1, n - min_leaf):
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            score = (nl * _gini(cum_pos[i], nl) + (n - nl) * _gini(total_pos - cum_pos[i], n - nl)) / n
            if best is None or score < best[0] - 1e-12:
                # threshold is the largest left value: exact under increasing transforms
                best = (score, f, float(xs[i]))
    return best


def _majority(y):
    return bool(2 * y.sum() >= len(y))


def _grow(X, y, depth, max_depth, min_leaf):
    node = _Node(_majority(y))
    if depth >= max_depth or y.all() or not y.any() or len(y) < 2 * min_leaf:
        return node
    split = _best_split(X, y, min_leaf)
    if split is None:
        return node
    _, f, thr = split
    mask = X[:, f] <= thr
    node.feature, node.threshold = f, thr
    node.left = _grow(X[mask], y[mask], depth + 1, max_depth, min_leaf)
    node.right = _grow(X[~mask], y[~mask], depth + 1, max_depth, min_leaf)
    return node


@dataclass
class TrainedClassifier:
    kind: str
    root: Optional[_Node] = None
    weights: Optional[np.ndarray] = None
    bias: float = 0.0
    constant: Optional[bool] = None

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def depth(self) -> int:
        def d(node):
            return 0 if node.is_leaf else 1 + max(d(node.left), d(node.right))
        return d(self.root) if self.root is not None else 0

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.weights + self.bias

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.constant is not None:
            return np.full(len(X), self.constant, dtype=bool)
        if self.kind == LINEAR_SVM:
            return self.decision_function(X) > 0
        out = np.empty(len(X), dtype=bool)
        for i, x in enumerate(X):
            node = self.root
            while not node.is_leaf:
                node = node.left if x[node.feature] <= node.threshold else node.right
            out[i] = node.label
        return out


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 6
    min_leaf: int = 5


@dataclass(frozen=True)
class SVMParams:
    lam: float = 1e-3
    epochs: int = 200


def _train_svm(X, y, params: SVMParams):
    # full-batch projected subgradient (Pegasos step 1/(lam*t)) on bias-augmented
    # features; returns the mean iterate over the second half of the epochs
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    s = np.where(y, 1.0, -1.0)
    radius = 1.0 / math.sqrt(params.lam)
    w = np.zeros(d + 1)
    avg = np.zeros(d + 1)
    burn_in = params.epochs // 2
    sX = s[:, None] * Xa
    for t in range(1, params.epochs + 1):
        violated = (sX @ w < 1.0).astype(float)
        grad = params.lam * w - (violated @ sX) / n
        w = w - grad / (params.lam * t)
        norm = math.sqrt(float(w @ w))
        if norm > radius:
            w *= radius / norm
        if t > burn_in:
            avg += w
    avg /= params.epochs - burn_in
    return avg[:d], float(avg[d])


def train(kind: str, X, y, params=None, seed: int = 0) -> TrainedClassifier:
    """Fit a decision tree or a linear SVM on feature matrix `X`, labels `y`."""
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    if len(y) == 0:
        raise ValueError("cannot train on an empty dataset")
    if y.all() or not y.any():
        return TrainedClassifier(kind, constant=bool(y[0]))
    if kind == DECISION_TREE:
        params = params or TreeParams()
        return TrainedClassifier(kind, root=_grow(X, y, 0, params.max_depth, params.min_leaf))
    params = params or SVMParams()
    w, b = _train_svm(X, y, params)
    return TrainedClassifier(kind, weights=w, bias=b)


# ---------------------------------------------------------------- metrics

@dataclass(frozen=True)
class Metrics:
    """Accuracy, precision and recall with confusion counts.

    Ratios with a zero denominator are reported as 0 and flagged. For averaged
    fold metrics the ratios are unweighted fold means and the counts are sums.
    """

    accuracy: float
    precision: float
    recall: float
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    precision_undefined: bool = False
    recall_undefined: bool = False

    @classmethod
    def from_counts(cls, tp, fp, tn, fn) -> "Metrics":
        total = tp + fp + tn + fn
        return cls(
            accuracy=(tp + tn) / total if total else 0.0,
            precision=tp / (tp + fp) if tp + fp else 0.0,
            recall=tp / (tp + fn) if tp + fn else 0.0,
            tp=tp, fp=fp, tn=tn, fn=fn,
            precision_undefined=tp + fp == 0,
            recall_undefined=tp + fn == 0,
        )

    @classmethod
    def mean(cls, items: Sequence["Metrics"]) -> "Metrics":
        if not items:
            raise ValueError("no metrics to average")
        return cls(
            accuracy=float(np.mean([m.accuracy for m in items])),
            precision=float(np.mean([m.precision for m in items])),
            recall=float(np.mean([m.recall for m in items])),
            tp=sum(m.tp for m in items), fp=sum(m.fp for m in items),
            tn=sum(m.tn for m in items), fn=sum(m.fn for m in items),
            precision_undefined=any(m.precision_undefined for m in items),
            recall_undefined=any(m.recall_undefined for m in items),
        )


def confusion_metrics(y_true, y_pred) -> Metrics:
    y_true = np.asarray(y_true, dtype=bool)
    y_pred = np.asarray(y_pred, dtype=bool)
    if len(y_true) == 0:
        raise ValueError("cannot evaluate on zero rows")
    return Metrics.from_counts(
        int(np.sum(y_true & y_pred)), int(np.sum(~y_true & y_pred)),
        int(np.sum(~y_true & ~y_pred)), int(np.sum(y_true & ~y_pred)),
    )


def evaluate(model: TrainedClassifier, X, y) -> Metrics:
    return confusion_metrics(y, model.predict(X))


# ---------------------------------------------------------------- cross-validation

def _canonical(dataset: UserDataset):
    rows = sorted(dataset.rows, key=lambda r: (r.event_id, r.label))
    X = np.array([r.features for r in rows], dtype=float).reshape(len(rows), 4)
    y = np.array([r.label for r in rows], dtype=bool)
    return X, y


def cross_validate(kind: str, dataset: UserDataset, k: int = 10, seed: int = 0,
                   columns: Sequence[int] = (0, 1, 2, 3), params=None) -> Metrics:
    """Stratified k-fold estimate; rows are put in canonical order first."""
    X, y = _canonical(dataset)
    X = X[:, list(columns)]
    plan = stratified_kfold(y, k, seed)
    per_fold = []
    for train_idx, test_idx in plan.splits():
        model = train(kind, X[train_idx], y[train_idx], params, seed)
        per_fold.append(evaluate(model, X[test_idx], y[test_idx]))
    return Metrics.mean(per_fold)


# ---------------------------------------------------------------- mutual information

def equal_frequency_bins(x, bins: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    edges = np.unique(np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1]))
    return np.searchsorted(edges, x, side="left")


def mutual_information(a, b) -> float:
    """Plug-in MI (nats) between two discrete label arrays."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = len(a)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    joint /= n
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(max(0.0, np.sum(joint[nz] * np.log(joint[nz] / (pa @ pb)[nz]))))


@dataclass(frozen=True)
class FeatureSelection:
    feature: str
    scores: Dict[str, float] = field(default_factory=dict)
    degenerate: bool = False
    low_confidence: bool = False

    @property
    def column(self) -> int:
        return FEATURE_NAMES.index(self.feature)


def mutual_info_select(dataset: UserDataset, bins: int = 10,
                       low_confidence_nats: float = 0.01) -> FeatureSelection:
    """Pick the group feature sharing the most information with the label."""
    X, y = dataset.X(), dataset.y
    if len(y) < 2 * bins:
        warnings.warn(f"{len(y)} rows for {bins} bins; MI estimate is coarse", stacklevel=2)
    scores = {}
    for j, name in enumerate(FEATURE_NAMES):
        scores[name] = mutual_information(equal_frequency_bins(X[:, j], bins), y) if len(y) else 0.0
    best = FEATURE_NAMES[0]
    for name in FEATURE_NAMES[1:]:
        if scores[name] > scores[best] + 1e-12:
            best = name
    degenerate = len(y) == 0 or all(np.ptp(X[:, j]) == 0 for j in range(4)) or y.all() or not y.any()
    if degenerate:
        best = FEATURE_NAMES[0]
    return FeatureSelection(best, scores, degenerate, scores[best] < low_confidence_nats)


def scenario_columns(scenario: str, selection: Optional[FeatureSelection] = None) -> Tuple[int, ...]:
    if scenario == "all_features":
        return (0, 1, 2, 3)
    if scenario == "feature_selection":
        if selection is None:
            raise ValueError("feature_selection scenario needs a FeatureSelection")
        return (selection.column,)
    group = scenario.removeprefix("only_")
    return (GROUPS.index(group),)
