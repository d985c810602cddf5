"""Social, physical and homophily graphs over the users of a filtered log."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from .geo import GeoPoint, centroid_of_interests, gaussian_kernel, haversine_matrix
from .ingest import EventLog

AUTO = "auto"


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph; each unordered pair stored once as (a, b) with a < b."""

    nodes: Tuple[str, ...]
    edges: Dict[Tuple[str, str], float]

    def __post_init__(self):
        node_set = set(self.nodes)
        for (a, b), w in self.edges.items():
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if not a < b:
                raise ValueError(f"edge ({a!r}, {b!r}) not in canonical order")
            if a not in node_set or b not in node_set:
                raise ValueError(f"edge ({a!r}, {b!r}) references unknown node")
            if not w > 0:
                raise ValueError(f"non-positive weight on ({a!r}, {b!r})")

    @classmethod
    def from_edges(cls, nodes: Iterable[str], edges: Iterable[Tuple[str, str, float]]) -> "WeightedGraph":
        out = {}
        for a, b, w in edges:
            if a == b or w <= 0:
                continue
            key = (a, b) if a < b else (b, a)
            out[key] = float(w)
        return cls(tuple(sorted(set(nodes))), out)

    def neighbors(self, u: str) -> FrozenSet[str]:
        if u not in self._adjacency:
            raise KeyError(f"unknown node {u!r}")
        return self._adjacency[u]

    @property
    def _adjacency(self):
        adj = self.__dict__.get("_adj")
        if adj is None:
            sets = {n: set() for n in self.nodes}
            for a, b in self.edges:
                sets[a].add(b)
                sets[b].add(a)
            adj = {n: frozenset(s) for n, s in sets.items()}
            object.__setattr__(self, "_adj", adj)
        return adj

    def total_weight(self) -> float:
        return float(sum(self.edges.values()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node_a", "node_b", "weight"])
            for (a, b) in sorted(self.edges):
                w.writerow([a, b, repr(self.edges[(a, b)])])

    @classmethod
    def from_csv(cls, path, nodes: Optional[Iterable[str]] = None) -> "WeightedGraph":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        edges = [(r["node_a"], r["node_b"], float(r["weight"])) for r in rows]
        all_nodes = set(nodes or ()) | {r["node_a"] for r in rows} | {r["node_b"] for r in rows}
        return cls.from_edges(all_nodes, edges)


@dataclass(frozen=True)
class EgoNetwork:
    ego: str
    alters: FrozenSet[str]


def build_social_graph(log: EventLog) -> WeightedGraph:
    return WeightedGraph.from_edges(log.users, ((a, b, 1.0) for a, b in log.subscriptions))


def user_centroids(log: EventLog, mad_threshold: float = 3.0) -> Dict[str, GeoPoint]:
    out = {}
    for u in sorted(log.users):
        attended = sorted(log.attended(u))
        if not attended:
            raise ValueError(f"user {u!r} attended no events; centroid undefined")
        pts = [GeoPoint(*log.events[e]) for e in attended]
        out[u] = centroid_of_interests(pts, mad_threshold).point
    return out


def build_physical_graph(log: EventLog, sigma_km: Union[float, str] = AUTO,
                         epsilon: float = 1e-4, centroids: Optional[Dict[str, GeoPoint]] = None,
                         ) -> WeightedGraph:
    """Gaussian-kernel similarity between user centroids.

    With ``sigma_km="auto"`` the bandwidth is the median pairwise centroid
    distance. Weights below `epsilon` are dropped.
    """
    if centroids is None:
        centroids = user_centroids(log)
    nodes = sorted(log.users)
    if len(nodes) < 2:
        return WeightedGraph(tuple(nodes), {})
    lat = np.array([centroids[u].latitude for u in nodes])
    lon = np.array([centroids[u].longitude for u in nodes])
    dist = haversine_matrix(lat, lon)
    iu, ju = np.triu_indices(len(nodes), k=1)
    pair_d = dist[iu, ju]
    sigma = physical_sigma(pair_d) if sigma_km == AUTO else float(sigma_km)
    w = gaussian_kernel(pair_d, sigma)
    w = np.atleast_1d(w)
    keep = (w >= epsilon) & (w > 0)
    edges = {(nodes[i], nodes[j]): float(x) for i, j, x in zip(iu[keep], ju[keep], w[keep])}
    return WeightedGraph(tuple(nodes), edges)


def physical_sigma(pair_distances) -> float:
    sigma = float(np.median(pair_distances))
    if sigma <= 0:
        # every centroid coincides; any bandwidth yields unit weights
        sigma = 1.0
    return sigma


def build_homophily_graph(log: EventLog) -> WeightedGraph:
    """Jaccard overlap of attended-event sets; disjoint pairs get no edge."""
    nodes = sorted(log.users)
    events = sorted(log.events)
    if not nodes or not events:
        return WeightedGraph(tuple(nodes), {})
    uidx = {u: i for i, u in enumerate(nodes)}
    eidx = {e: i for i, e in enumerate(events)}
    rows = [uidx[u] for u, _ in log.attendance]
    cols = [eidx[e] for _, e in log.attendance]
    inc = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(nodes), len(events)))
    inter = sparse.triu(inc @ inc.T, k=1).tocoo()
    sizes = np.asarray(inc.sum(axis=1)).ravel()
    edges = {}
    for i, j, n in zip(inter.row, inter.col, inter.data):
        edges[(nodes[i], nodes[j])] = float(n / (sizes[i] + sizes[j] - n))
    return WeightedGraph(tuple(nodes), edges)


def ego_network(sg: WeightedGraph, u: str) -> EgoNetwork:
    return EgoNetwork(u, sg.neighbors(u))
