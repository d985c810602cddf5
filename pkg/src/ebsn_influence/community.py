"""Weighted modularity and Louvain partitioning."""

from __future__ import annotations

import csv
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Tuple

from .graphs import WeightedGraph


@dataclass(frozen=True)
class CommunityPartition:
    assignment: Dict[str, int]
    modularity: float
    level_modularity: Tuple[float, ...] = field(default=(), compare=False)

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values()))

    def members(self) -> Dict[int, frozenset]:
        groups = defaultdict(set)
        for u, c in self.assignment.items():
            groups[c].add(u)
        return {c: frozenset(s) for c, s in groups.items()}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "community_id"])
            for u in sorted(self.assignment):
                w.writerow([u, self.assignment[u]])

    @classmethod
    def from_csv(cls, path, graph: WeightedGraph = None) -> "CommunityPartition":
        with open(path, newline="", encoding="utf-8") as fh:
            assignment = {r["user_id"]: int(r["community_id"]) for r in csv.DictReader(fh)}
        q = modularity(graph, assignment) if graph is not None else float("nan")
        return cls(assignment, q)


def modularity(g: WeightedGraph, assignment: Mapping[str, int]) -> float:
    """Newman-Girvan modularity at resolution 1; 0 for an edgeless graph."""
    missing = [u for u in g.nodes if u not in assignment]
    if missing:
        raise ValueError(f"assignment misses {len(missing)} node(s), e.g. {missing[0]!r}")
    m = g.total_weight()
    if m == 0:
        return 0.0
    internal = defaultdict(float)
    degree = defaultdict(float)
    for (a, b), w in g.edges.items():
        degree[assignment[a]] += w
        degree[assignment[b]] += w
        if assignment[a] == assignment[b]:
            internal[assignment[a]] += w
    return sum(internal[c] / m - (degree[c] / (2 * m)) ** 2 for c in degree)


class _Level:
    """Index-based graph for one Louvain level; self-loops hold intra weight."""

    def __init__(self, n, adj, loops):
        self.n = n
        self.adj = adj          # list of {neighbor: weight}, no self entries
        self.loops = loops      # list of self-loop weights (each counted once)
        self.degree = [2 * loops[i] + sum(adj[i].values()) for i in range(n)]

    def aggregate(self, comm: List[int], n_comm: int) -> "_Level":
        adj = [defaultdict(float) for _ in range(n_comm)]
        loops = [0.0] * n_comm
        for i in range(self.n):
            ci = comm[i]
            loops[ci] += self.loops[i]
            for j, w in self.adj[i].items():
                cj = comm[j]
                if ci == cj:
                    if i < j:
                        loops[ci] += w
                else:
                    adj[ci][cj] += w
        return _Level(n_comm, [dict(a) for a in adj], loops)


def _local_moving(level: _Level, m2: float, order: List[int], tolerance: float) -> Tuple[List[int], bool]:
    comm = list(range(level.n))
    tot = list(level.degree)
    moved_any = False
    improved = True
    while improved:
        improved = False
        for i in order:
            ci = comm[i]
            ki = level.degree[i]
            links = defaultdict(float)
            for j, w in level.adj[i].items():
                links[comm[j]] += w
            tot[ci] -= ki
            # gains are m * dQ, up to a constant shared by every candidate
            stay = links.get(ci, 0.0) - tot[ci] * ki / m2
            best_c, best_gain = ci, stay
            for c in sorted(links):
                if c == ci:
                    continue
                gain = links[c] - tot[c] * ki / m2
                if gain > best_gain + 1e-15:
                    best_c, best_gain = c, gain
            if best_c != ci and (best_gain - stay) * 2 / m2 > tolerance:
                comm[i] = best_c
                tot[best_c] += ki
                improved = moved_any = True
            else:
                tot[ci] += ki
    return comm, moved_any


def _renumber(labels: List[int]) -> Tuple[List[int], int]:
    mapping = {}
    out = []
    for c in labels:
        if c not in mapping:
            mapping[c] = len(mapping)
        out.append(mapping[c])
    return out, len(mapping)


def louvain(g: WeightedGraph, seed: int = 0, tolerance: float = 1e-7) -> CommunityPartition:
    """Partition `g` by multi-level local moving and aggregation.

    Deterministic for a fixed (graph, seed): the node scan order at every level
    is a seeded shuffle and ties go to the lowest community id.
    """
    nodes = list(g.nodes)
    index = {u: i for i, u in enumerate(nodes)}
    adj = [dict() for _ in nodes]
    for (a, b), w in g.edges.items():
        adj[index[a]][index[b]] = w
        adj[index[b]][index[a]] = w
    level = _Level(len(nodes), adj, [0.0] * len(nodes))
    m2 = 2 * g.total_weight()
    membership = list(range(len(nodes)))

    if m2 == 0:
        return CommunityPartition({u: i for i, u in enumerate(nodes)}, 0.0, (0.0,))

    rng = random.Random(seed)
    history = [modularity(g, dict(zip(nodes, membership)))]
    while True:
        order = list(range(level.n))
        rng.shuffle(order)
        comm, moved = _local_moving(level, m2, order, tolerance)
        if not moved:
            break
        comm, n_comm = _renumber(comm)
        membership = [comm[c] for c in membership]
        history.append(modularity(g, dict(zip(nodes, membership))))
        if n_comm == level.n:
            break
        level = level.aggregate(comm, n_comm)

    membership, _ = _renumber(membership)
    assignment = dict(zip(nodes, membership))
    return CommunityPartition(assignment, modularity(g, assignment), tuple(history))
