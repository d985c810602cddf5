"""Behavioral phenotypes from group-influence vectors.

Users live in the (i_sc, i_pc, i_hc) octant. The direction of a user's vector
picks a *finger*, its length an *influence class*; the pair of the two is the
user's behavioral class, which then serves as a training pool for predicting
attendance of users never seen during training.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .features import InfluenceVector, UserDataset
from .learn import LINEAR_SVM, Metrics, evaluate, train

INFLUENCE_CLASS_NAMES = ("low", "medium", "high")


@dataclass(frozen=True)
class SphericalPoint:
    r: float
    theta: float
    phi: float

    def to_cartesian(self) -> Tuple[float, float, float]:
        st = math.sin(self.theta)
        return (self.r * st * math.cos(self.phi), self.r * st * math.sin(self.phi),
                self.r * math.cos(self.theta))


def to_spherical(x: float, y: float, z: float) -> SphericalPoint:
    """Spherical coordinates of (x, y, z) = (i_sc, i_pc, i_hc); the origin maps to (0, 0, 0)."""
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        return SphericalPoint(0.0, 0.0, 0.0)
    # atan2 keeps full precision near the poles, where acos(z / r) does not
    theta = math.atan2(math.hypot(x, y), z)
    phi = math.atan2(y, x) % (2 * math.pi)
    return SphericalPoint(r, theta, phi)


def spherical_of(v: InfluenceVector) -> SphericalPoint:
    return to_spherical(v.i_sc, v.i_pc, v.i_hc)


# ---------------------------------------------------------------- k-means

@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_history: Tuple[float, ...]
    n_iter: int


def _sq_dist(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(X, k, rng):
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            raise ValueError("k-means++ ran out of distinct points")
        idx = int(rng.choice(n, p=d2 / total))
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers, dtype=float)


def _lloyd(X, C, max_iter, tol):
    history = []
    labels = None
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dist(X, C)
        labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(len(X)), labels].sum()))
        new_C = C.copy()
        for j in range(len(C)):
            members = labels == j
            if members.any():
                new_C[j] = X[members].mean(axis=0)
            else:
                # empty cluster: take the point worst served by its current centroid
                worst = int(d2[np.arange(len(X)), labels].argmax())
                new_C[j] = X[worst]
                labels[worst] = j
                d2[worst] = 0.0
        shift = float(np.sqrt(((new_C - C) ** 2).sum(axis=1)).max())
        C = new_C
        if shift < tol:
            break
    d2 = _sq_dist(X, C)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(len(X)), labels].sum())
    history.append(inertia)
    return labels, C, inertia, tuple(history), n_iter


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6,
           n_init: int = 10) -> KMeansResult:
    """Lloyd's algorithm from k-means++ starts; best of `n_init` seeded restarts."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if k < 1:
        raise ValueError("k must be >= 1")
    n_distinct = len(np.unique(X, axis=0))
    if k > n_distinct:
        raise ValueError(f"k={k} exceeds the number of distinct points ({n_distinct})")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        C = _kmeans_pp(X, k, rng)
        labels, C, inertia, history, n_iter = _lloyd(X, C, max_iter, tol)
        if best is None or inertia < best.inertia - 1e-12:
            best = KMeansResult(labels, C, inertia, history, n_iter)
    return best


def _relabel(labels: np.ndarray, order: Sequence[int]) -> np.ndarray:
    mapping = np.empty(len(order), dtype=int)
    for new, old in enumerate(order):
        mapping[old] = new
    return mapping[labels]


# ---------------------------------------------------------------- fingers and classes

def community_matrix(vectors: Sequence[InfluenceVector]) -> np.ndarray:
    return np.array([[v.i_sc, v.i_pc, v.i_hc] for v in vectors], dtype=float).reshape(-1, 3)


def default_radial_cutoff(vectors: Sequence[InfluenceVector]) -> float:
    r = np.linalg.norm(community_matrix(vectors), axis=1)
    return float(np.percentile(r, 5)) if len(r) else 0.0


def assign_fingers(vectors: Sequence[InfluenceVector], k: int = 5,
                   radial_cutoff: Optional[float] = None, seed: int = 0) -> List[Optional[int]]:
    """Cluster vector directions on the unit sphere.

    Users whose radius is at or below `radial_cutoff` (default: 5th percentile
    of r) get ``None``. Finger 0 is the most populated.
    """
    P = community_matrix(vectors)
    r = np.linalg.norm(P, axis=1)
    if radial_cutoff is None:
        radial_cutoff = default_radial_cutoff(vectors)
    keep = r > radial_cutoff
    if keep.sum() < k:
        raise ValueError(f"only {int(keep.sum())} users above the radial cutoff, need {k}")
    U = P[keep] / r[keep, None]
    res = kmeans(U, k, seed=seed)
    sizes = np.bincount(res.labels, minlength=k)
    order = sorted(range(k), key=lambda j: (-sizes[j], tuple(res.centroids[j])))
    labels = _relabel(res.labels, order)
    out: List[Optional[int]] = [None] * len(vectors)
    for i, lab in zip(np.flatnonzero(keep), labels):
        out[int(i)] = int(lab)
    return out


def assign_influence_classes(vectors: Sequence[InfluenceVector], seed: int = 0,
                             use_vectors: bool = False) -> List[str]:
    """Low/medium/high by 1-d k-means (k=3) on r over every user.

    With ``use_vectors=True`` the raw 3-vectors are clustered instead and the
    clusters ordered by the mean radius of their members.
    """
    P = community_matrix(vectors)
    r = np.linalg.norm(P, axis=1)
    if len(np.unique(r)) < 3:
        raise ValueError("need at least three distinct radii for three influence classes")
    res = kmeans(P if use_vectors else r[:, None], 3, seed=seed)
    mean_r = [r[res.labels == j].mean() for j in range(3)]
    order = sorted(range(3), key=lambda j: mean_r[j])
    labels = _relabel(res.labels, order)
    return [INFLUENCE_CLASS_NAMES[j] for j in labels]


@dataclass(frozen=True)
class PhenotypeAssignment:
    user_id: str
    finger: Optional[int]
    influence_class: str

    @property
    def behavioral_class(self) -> Optional[Tuple[int, str]]:
        return None if self.finger is None else (self.finger, self.influence_class)


def behavioral_classes(users: Sequence[str], fingers: Sequence[Optional[int]],
                       influence_classes: Sequence[str]) -> List[PhenotypeAssignment]:
    if not len(users) == len(fingers) == len(influence_classes):
        raise ValueError("fingers and influence classes must cover the same users")
    return [PhenotypeAssignment(u, f, c) for u, f, c in zip(users, fingers, influence_classes)]


def group_by(assignments: Sequence[PhenotypeAssignment], key: str) -> Dict[object, List[str]]:
    """Users per finger, influence class or behavioral class (``None`` keys dropped)."""
    out: Dict[object, List[str]] = {}
    for a in assignments:
        value = getattr(a, key)
        if value is not None:
            out.setdefault(value, []).append(a.user_id)
    return {k: sorted(v) for k, v in out.items()}


def write_assignments(path, assignments: Sequence[PhenotypeAssignment],
                      spherical: Mapping[str, SphericalPoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "r", "theta", "phi", "finger", "influence_class", "behavioral_class"])
        for a in sorted(assignments, key=lambda a: a.user_id):
            s = spherical[a.user_id]
            bc = "" if a.behavioral_class is None else f"{a.finger}:{a.influence_class}"
            w.writerow([a.user_id, repr(s.r), repr(s.theta), repr(s.phi),
                        "" if a.finger is None else a.finger, a.influence_class, bc])


# ---------------------------------------------------------------- class-conditioned prediction

def _pool(users, datasets):
    X = [datasets[u].X() for u in users]
    y = [datasets[u].y for u in users]
    return np.vstack(X), np.concatenate(y)


def class_conditioned_cv(class_members: Sequence[str], datasets: Mapping[str, UserDataset],
                         k: int = 10, seed: int = 0, kind: str = LINEAR_SVM,
                         params=None) -> Metrics:
    """k-fold over users: train on the pooled rows of the other users, test on the held-out ones."""
    users = sorted(set(class_members))
    if len(users) < 2:
        raise ValueError(f"class-conditioned CV needs at least 2 users, got {len(users)}")
    if len(users) < k:
        warnings.warn(f"only {len(users)} users in class; reducing k from {k}", stacklevel=2)
        k = len(users)
    rng = np.random.default_rng(seed)
    shuffled = [users[i] for i in rng.permutation(len(users))]
    folds = [shuffled[j::k] for j in range(k)]
    per_fold = []
    for j, test_users in enumerate(folds):
        train_users = sorted(u for i, f in enumerate(folds) if i != j for u in f)
        X_tr, y_tr = _pool(train_users, datasets)
        X_te, y_te = _pool(sorted(test_users), datasets)
        model = train(kind, X_tr, y_tr, params, seed)
        per_fold.append(evaluate(model, X_te, y_te))
    return Metrics.mean(per_fold)


def baseline_single_class_cv(all_users: Sequence[str], datasets: Mapping[str, UserDataset],
                             k: int = 10, seed: int = 0, kind: str = LINEAR_SVM,
                             params=None) -> Metrics:
    if not len(all_users):
        raise ValueError("baseline needs a non-empty user set")
    return class_conditioned_cv(all_users, datasets, k, seed, kind, params)


def per_class_cv(groups: Mapping[object, Sequence[str]], datasets: Mapping[str, UserDataset],
                 k: int = 10, seed: int = 0, kind: str = LINEAR_SVM, params=None,
                 ) -> Dict[object, Metrics]:
    """class_conditioned_cv on every group with at least two users."""
    out = {}
    for key in sorted(groups, key=str):
        if len(groups[key]) >= 2:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out[key] = class_conditioned_cv(groups[key], datasets, k, seed, kind, params)
    return out
