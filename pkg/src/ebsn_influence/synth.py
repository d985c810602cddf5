"""Synthetic event logs with planted communities and influence phenotypes.

Users occupy the cells of a K x K grid. The row is a user's social community,
the column its physical (geographic) community and the wrapped diagonal
(row + column) mod K its interest community. Two different groups share at most
one cell, so with one user per cell a user's co-attendance with one group never
leaks into another group's participation feature.

Each group hosts shared events. A user joins the shared events of its three
groups at rates proportional to its planted ray; private single-attendee events
at home then dilute the user's participation down to its planted level and keep
its centroid of interests inside its geographic cluster.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .features import GroupContext, UserGroups
from .graphs import WeightedGraph
from .ingest import EventLog, FilterPolicy, write_event_log

# continental U.S.; cluster centers are laid out on a grid inside it
_BOX = (30.0, 46.0, -120.0, -75.0)
_KM_PER_DEG = 111.195

DEFAULT_RAYS = (
    (1.0, 0.15, 0.15),
    (0.15, 1.0, 0.15),
    (0.15, 0.15, 1.0),
    (1.0, 1.0, 0.15),
    (0.15, 1.0, 1.0),
)

# the private events have a single attendee and small groups host few people,
# so synthetic logs need permissive filtering
SYNTH_FILTER_POLICY = FilterPolicy(min_events_per_user=1, min_participants_per_event=1,
                                   require_subscription=False)


class InfeasibleConfig(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 500
    n_events: int = 2760
    n_communities: int = 23
    phenotype_rays: Tuple[Tuple[float, float, float], ...] = DEFAULT_RAYS
    influence_levels: Tuple[float, ...] = (0.04, 0.09, 0.15)
    geo_cluster_spread_km: float = 15.0
    attendance_noise: float = 0.05
    seed: int = 0
    p_subscribe_in: float = 0.5
    p_subscribe_out: float = 0.002
    anchor_home: bool = True

    def __post_init__(self):
        rays = tuple(tuple(float(c) for c in r) for r in self.phenotype_rays)
        norm = []
        for r in rays:
            if len(r) != 3 or min(r) < 0 or math.hypot(*r) == 0:
                raise InfeasibleConfig(f"ray {r} must be a non-zero first-octant 3-vector")
            n = math.hypot(*r)
            norm.append(tuple(c / n for c in r))
        object.__setattr__(self, "phenotype_rays", tuple(norm))
        object.__setattr__(self, "influence_levels", tuple(float(x) for x in self.influence_levels))
        if not 0.0 <= self.attendance_noise <= 1.0:
            raise InfeasibleConfig("attendance_noise must be a probability")
        if not (0.0 <= self.p_subscribe_in <= 1.0 and 0.0 <= self.p_subscribe_out <= 1.0):
            raise InfeasibleConfig("subscription probabilities must lie in [0, 1]")
        if self.n_users < 1 or self.n_communities < 1 or self.n_events < 0:
            raise InfeasibleConfig("n_users and n_communities must be positive")
        if not self.phenotype_rays or not self.influence_levels:
            raise InfeasibleConfig("need at least one ray and one influence level")
        for level in self.influence_levels:
            if level <= 0:
                raise InfeasibleConfig(f"influence level {level} must be positive")
            for r in self.phenotype_rays:
                if max(r) * level > 1.0:
                    raise InfeasibleConfig(
                        f"ray {r} times level {level} exceeds 1 in some component")


@dataclass(frozen=True)
class PlantedUser:
    community_id: int      # physical community (grid column)
    social: int            # grid row
    interest: int          # wrapped diagonal
    ray_index: int
    influence_level: float


@dataclass
class GroundTruth:
    users: Dict[str, PlantedUser]
    n_clamped: int = 0
    n_short: int = 0

    def groups(self, kind: str) -> Dict[int, frozenset]:
        out: Dict[int, set] = {}
        for u, p in self.users.items():
            out.setdefault(getattr(p, kind), set()).add(u)
        return {k: frozenset(v) for k, v in out.items()}

    def context(self, sg: WeightedGraph) -> GroupContext:
        """Planted groups, with the ego network read off the social graph."""
        social, physical, interest = self.groups("social"), self.groups("community_id"), self.groups("interest")
        ctx = {}
        for u, p in self.users.items():
            me = frozenset((u,))
            ctx[u] = UserGroups(sg.neighbors(u), social[p.social] - me,
                                physical[p.community_id] - me, interest[p.interest] - me)
        return GroupContext(ctx)

    def to_csv(self, directory) -> None:
        d = Path(directory)
        with open(d / "ground_truth.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "community_id", "ray_index", "influence_level"])
            for u in sorted(self.users):
                p = self.users[u]
                w.writerow([u, p.community_id, p.ray_index, repr(p.influence_level)])
        with open(d / "planted_groups.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "social_community", "physical_community", "interest_community"])
            for u in sorted(self.users):
                p = self.users[u]
                w.writerow([u, p.social, p.community_id, p.interest])

    @classmethod
    def from_csv(cls, directory) -> "GroundTruth":
        d = Path(directory)
        with open(d / "ground_truth.csv", newline="", encoding="utf-8") as fh:
            base = {r["user_id"]: r for r in csv.DictReader(fh)}
        with open(d / "planted_groups.csv", newline="", encoding="utf-8") as fh:
            groups = {r["user_id"]: r for r in csv.DictReader(fh)}
        users = {
            u: PlantedUser(int(r["community_id"]), int(groups[u]["social_community"]),
                           int(groups[u]["interest_community"]), int(r["ray_index"]),
                           float(r["influence_level"]))
            for u, r in base.items()
        }
        return cls(users)


def _cluster_centers(k: int) -> np.ndarray:
    cols = math.ceil(math.sqrt(k))
    rows = math.ceil(k / cols)
    lat_min, lat_max, lon_min, lon_max = _BOX
    out = []
    for i in range(k):
        r, c = divmod(i, cols)
        lat = lat_min + (lat_max - lat_min) * (r + 0.5) / rows
        lon = lon_min + (lon_max - lon_min) * (c + 0.5) / cols
        out.append((lat, lon))
    return np.array(out)


def _jitter(rng, center, spread_km):
    lat, lon = center
    dlat = rng.normal(0.0, spread_km) / _KM_PER_DEG
    dlon = rng.normal(0.0, spread_km) / (_KM_PER_DEG * math.cos(math.radians(lat)))
    return (float(np.clip(lat + dlat, -90, 90)), float(np.clip(lon + dlon, -180, 180)))


def generate(config: SynthConfig) -> Tuple[EventLog, GroundTruth]:
    rng = np.random.default_rng(config.seed)
    k = config.n_communities
    n = config.n_users
    width = len(str(n - 1))
    users = [f"u{i:0{width}d}" for i in range(n)]

    # grid placement: one user per cell while cells last
    if n > k * k:
        warnings.warn(f"{n} users on a {k}x{k} grid: cells are shared, so co-attendance "
                      "leaks between a user's groups", stacklevel=2)
    cells = rng.permutation(k * k)
    placement = [divmod(int(cells[i % (k * k)]), k) for i in range(n)]
    ray_of = rng.integers(len(config.phenotype_rays), size=n)
    level_of = rng.integers(len(config.influence_levels), size=n)
    planted = {}
    for i, u in enumerate(users):
        a, b = placement[i]
        planted[u] = PlantedUser(b, a, (a + b) % k, int(ray_of[i]),
                                 config.influence_levels[level_of[i]])
    truth = GroundTruth(planted)
    # group kind order matches the (sc, pc, hc) axes of a ray
    kinds = ("social", "community_id", "interest")
    members = {kind: {g: sorted(m) for g, m in truth.groups(kind).items()} for kind in kinds}

    centers = _cluster_centers(k)
    home = {u: _jitter(rng, centers[planted[u].community_id], config.geo_cluster_spread_km)
            for u in users}

    # attendance rates: rate(u, g) = kappa * ray / mean_rate(g), mean_rate(g) = sqrt(kappa * mean ray)
    ray = {u: config.phenotype_rays[planted[u].ray_index] for u in users}
    mean_ray = {(t, g): float(np.mean([ray[v][t] for v in m]))
                for t, kind in enumerate(kinds) for g, m in members[kind].items()}
    kappa = min(mean_ray[(t, getattr(planted[u], kinds[t]))] / ray[u][t] ** 2
                for u in users for t in range(3) if ray[u][t] > 0)
    kappa = min(kappa, 1.0)

    per_group = max(1, config.n_events // (3 * k))
    events: Dict[str, Tuple[float, float]] = {}
    attendance = set()
    tag = "SPH"
    for t, kind in enumerate(kinds):
        for g in sorted(members[kind]):
            group = members[kind][g]
            mean_rate = math.sqrt(kappa * mean_ray[(t, g)])
            rates = np.array([kappa * ray[v][t] / mean_rate if mean_rate > 0 else 0.0 for v in group])
            for j in range(per_group):
                eid = f"e{tag[t]}{g:03d}_{j:03d}"
                joined = rng.random(len(group)) < rates
                flips = rng.random(len(group)) < config.attendance_noise
                joined ^= flips
                who = [v for v, x in zip(group, joined) if x]
                if kind == "community_id":
                    loc = _jitter(rng, centers[g], config.geo_cluster_spread_km)
                else:
                    host = who[rng.integers(len(who))] if who else group[rng.integers(len(group))]
                    loc = _jitter(rng, home[host], config.geo_cluster_spread_km)
                events[eid] = loc
                attendance.update((v, eid) for v in who)

    attended: Dict[str, List[str]] = {u: [] for u in users}
    participants: Dict[str, set] = {e: set() for e in events}
    for u, e in attendance:
        attended[u].append(e)
        participants[e].add(u)

    group_sets = {kind: {g: set(m) for g, m in members[kind].items()} for kind in kinds}
    n_clamped = n_short = 0
    for u in users:
        p = planted[u]
        contrib = np.zeros(3)
        for t, kind in enumerate(kinds):
            g = group_sets[kind][getattr(p, kind)] - {u}
            if g:
                contrib[t] = sum(len(participants[e] & g) for e in attended[u]) / len(g)
        n_shared = len(attended[u])
        strength = float(np.linalg.norm(contrib))
        private = max(0, round(strength / p.influence_level) - n_shared) if strength > 0 else 1
        if strength > 0 and strength / p.influence_level < n_shared - 0.5:
            # the shared events alone already fall below the planted level
            n_short += 1
        if config.anchor_home:
            n_home = sum(1 for e in attended[u] if e[1] == "P" and int(e[2:5]) == p.community_id)
            floor = n_shared - 2 * n_home + 1
            if private < floor:
                private = floor
                n_clamped += 1
        private = max(private, 0 if n_shared else 1)
        for j in range(private):
            eid = f"p{u[1:]}_{j:04d}"
            events[eid] = _jitter(rng, home[u], config.geo_cluster_spread_km / 2)
            attendance.add((u, eid))
    if n_clamped:
        warnings.warn(f"{n_clamped} user(s) could not reach their level while staying anchored "
                      "at home; their measured influence is lower than planted", stacklevel=2)
    if n_short:
        warnings.warn(f"{n_short} user(s) fall short of their level: their groups attend too "
                      "sparsely to reach it", stacklevel=2)
    truth.n_clamped = n_clamped
    truth.n_short = n_short

    subscriptions = set()
    row = {u: planted[u].social for u in users}
    for i, a in enumerate(users):
        draws = rng.random(n - i - 1)
        sides = rng.random(n - i - 1)
        for j, b in enumerate(users[i + 1:]):
            prob = config.p_subscribe_in if row[a] == row[b] else config.p_subscribe_out
            if draws[j] < prob:
                if sides[j] < 0.4:
                    subscriptions.add((a, b))
                elif sides[j] < 0.8:
                    subscriptions.add((b, a))
                else:
                    subscriptions.update(((a, b), (b, a)))

    log = EventLog.build(users, events, attendance, subscriptions)
    return log, truth


def write_synth(config: SynthConfig, directory) -> Tuple[EventLog, GroundTruth]:
    log, truth = generate(config)
    write_event_log(log, directory)
    truth.to_csv(directory)
    return log, truth
