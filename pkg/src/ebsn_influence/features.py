"""Group-participation features, per-user datasets and group-influence vectors."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import AbstractSet, Dict, FrozenSet, List, Sequence

import numpy as np

from .community import CommunityPartition
from .geo import GeoPoint, haversine_to
from .graphs import WeightedGraph
from .ingest import EventLog

GROUPS = ("ego", "sc", "pc", "hc")
FEATURE_COLUMNS = tuple(f"p_{g}" for g in GROUPS)


@dataclass(frozen=True)
class UserGroups:
    ego: FrozenSet[str]
    sc: FrozenSet[str]
    pc: FrozenSet[str]
    hc: FrozenSet[str]

    def as_tuple(self):
        return (self.ego, self.sc, self.pc, self.hc)


class GroupContext:
    """The four groups of every user, each excluding the user itself."""

    def __init__(self, groups: Dict[str, UserGroups]):
        for u, g in groups.items():
            if any(u in s for s in g.as_tuple()):
                raise ValueError(f"user {u!r} appears in one of its own groups")
        self.groups = groups

    def __getitem__(self, u: str) -> UserGroups:
        return self.groups[u]

    @classmethod
    def from_partitions(cls, sg: WeightedGraph, sc: CommunityPartition,
                        pc: CommunityPartition, hc: CommunityPartition) -> "GroupContext":
        sc_m, pc_m, hc_m = sc.members(), pc.members(), hc.members()
        groups = {}
        for u in sg.nodes:
            me = frozenset((u,))
            groups[u] = UserGroups(
                ego=sg.neighbors(u),
                sc=sc_m[sc.assignment[u]] - me,
                pc=pc_m[pc.assignment[u]] - me,
                hc=hc_m[hc.assignment[u]] - me,
            )
        return cls(groups)


@dataclass(frozen=True)
class FeatureRow:
    event_id: str
    p_ego: float
    p_sc: float
    p_pc: float
    p_hc: float
    label: bool

    @property
    def features(self):
        return (self.p_ego, self.p_sc, self.p_pc, self.p_hc)


@dataclass(frozen=True)
class UserDataset:
    user_id: str
    rows: tuple
    shortfall: bool = False

    def X(self, columns: Sequence[int] = (0, 1, 2, 3)) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, len(columns)))
        return np.array([r.features for r in self.rows], dtype=float)[:, list(columns)]

    @property
    def y(self) -> np.ndarray:
        return np.array([r.label for r in self.rows], dtype=bool)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["event_id", *FEATURE_COLUMNS, "label"])
            for r in self.rows:
                w.writerow([r.event_id, *(repr(x) for x in r.features), int(r.label)])

    @classmethod
    def from_csv(cls, path, user_id: str) -> "UserDataset":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = tuple(
                FeatureRow(r["event_id"], *(float(r[c]) for c in FEATURE_COLUMNS), r["label"] == "1")
                for r in csv.DictReader(fh)
            )
        n_pos = sum(r.label for r in rows)
        return cls(user_id, rows, shortfall=n_pos != len(rows) - n_pos)


@dataclass(frozen=True)
class InfluenceVector:
    user_id: str
    i_ego: float
    i_sc: float
    i_pc: float
    i_hc: float

    def community_part(self) -> np.ndarray:
        return np.array([self.i_sc, self.i_pc, self.i_hc])


def group_participation(group: AbstractSet[str], participants: AbstractSet[str]) -> float:
    """Share of `group` members found among the event's `participants`."""
    if not group:
        return 0.0
    return len(group & participants) / len(group)


def _row(u_groups: UserGroups, log: EventLog, event: str, label: bool) -> FeatureRow:
    who = log.participants(event)
    return FeatureRow(event, *(group_participation(g, who) for g in u_groups.as_tuple()), label)


def build_user_dataset(u: str, ctx: GroupContext, log: EventLog, centroid: GeoPoint) -> UserDataset:
    """Attended events as positives plus as many nearest non-attended events as negatives."""
    attended = sorted(log.attended(u))
    if not attended:
        raise ValueError(f"user {u!r} attended no events")
    groups = ctx[u]
    rows: List[FeatureRow] = [_row(groups, log, e, True) for e in attended]

    ids, position, lat, lon = log.event_arrays()
    candidate = np.ones(len(ids), dtype=bool)
    candidate[[position[e] for e in attended]] = False
    idx = np.flatnonzero(candidate)
    if len(idx):
        dist = haversine_to(centroid, lat[idx], lon[idx])
        # ids are sorted, so a stable sort breaks distance ties by id
        nearest = idx[np.argsort(dist, kind="stable")[: len(attended)]]
        rows.extend(_row(groups, log, ids[i], False) for i in nearest)
    shortfall = len(idx) < len(attended)
    return UserDataset(u, tuple(rows), shortfall)


def influence_vector(u: str, ctx: GroupContext, log: EventLog) -> InfluenceVector:
    attended = sorted(log.attended(u))
    if not attended:
        raise ValueError(f"user {u!r} attended no events")
    groups = ctx[u]
    p = np.array([[group_participation(g, log.participants(e)) for g in groups.as_tuple()]
                  for e in attended])
    return InfluenceVector(u, *(float(x) for x in p.mean(axis=0)))
