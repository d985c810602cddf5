"""Loading, validating and filtering raw event-based social network logs."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

import numpy as np

EVENTS_HEADER = ["event_id", "latitude", "longitude"]
ATTENDANCE_HEADER = ["user_id", "event_id"]
SUBSCRIPTIONS_HEADER = ["follower_id", "followee_id"]

# continental U.S. (lat_min, lat_max, lon_min, lon_max)
US_BOUNDING_BOX = (24.5, 49.5, -125.0, -66.9)


class LogParseError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class IntegrityError(ValueError):
    pass


@dataclass(frozen=True)
class EventLog:
    users: FrozenSet[str]
    events: Dict[str, Tuple[float, float]]
    attendance: FrozenSet[Tuple[str, str]]
    subscriptions: FrozenSet[Tuple[str, str]]
    _attended: Dict[str, FrozenSet[str]] = field(default=None, repr=False, compare=False)
    _participants: Dict[str, FrozenSet[str]] = field(default=None, repr=False, compare=False)
    _event_order: Optional[Tuple[Tuple[str, ...], Dict[str, int], np.ndarray, np.ndarray]] = field(
        default=None, repr=False, compare=False)

    def __post_init__(self):
        for eid, (lat, lon) in self.events.items():
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                raise IntegrityError(f"event {eid!r} has invalid coordinates ({lat}, {lon})")
        for u, e in self.attendance:
            if u not in self.users:
                raise IntegrityError(f"attendance references unknown user {u!r}")
            if e not in self.events:
                raise IntegrityError(f"attendance references unknown event {e!r}")
        for a, b in self.subscriptions:
            if a == b:
                raise IntegrityError(f"self-subscription for user {a!r}")
            if a not in self.users or b not in self.users:
                raise IntegrityError(f"subscription ({a!r}, {b!r}) references an unknown user")
        attended = defaultdict(set)
        participants = defaultdict(set)
        for u, e in self.attendance:
            attended[u].add(e)
            participants[e].add(u)
        object.__setattr__(self, "_attended",
                           {u: frozenset(attended.get(u, ())) for u in self.users})
        object.__setattr__(self, "_participants",
                           {e: frozenset(participants.get(e, ())) for e in self.events})

    @classmethod
    def build(cls, users: Iterable[str], events, attendance, subscriptions) -> "EventLog":
        return cls(frozenset(users), dict(events), frozenset(attendance), frozenset(subscriptions))

    def event_arrays(self):
        """(sorted event ids, id -> position, latitudes, longitudes), built once."""
        if self._event_order is None:
            ids = tuple(sorted(self.events))
            lat = np.array([self.events[e][0] for e in ids], dtype=float)
            lon = np.array([self.events[e][1] for e in ids], dtype=float)
            object.__setattr__(self, "_event_order", (ids, {e: i for i, e in enumerate(ids)}, lat, lon))
        return self._event_order

    def attended(self, user: str) -> FrozenSet[str]:
        """Events attended by `user` (A_u)."""
        return self._attended[user]

    def participants(self, event: str) -> FrozenSet[str]:
        return self._participants[event]

    def is_sublog_of(self, other: "EventLog") -> bool:
        return (self.users <= other.users
                and set(self.events) <= set(other.events)
                and self.attendance <= other.attendance
                and self.subscriptions <= other.subscriptions)


@dataclass(frozen=True)
class FilterPolicy:
    min_events_per_user: int = 20
    min_participants_per_event: int = 20
    require_subscription: bool = True
    bounding_box: Optional[Tuple[float, float, float, float]] = None

    def __post_init__(self):
        if self.min_events_per_user < 1 or self.min_participants_per_event < 1:
            raise ValueError("filter thresholds must be >= 1")


def _read_rows(path: Path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            return
        if [c.strip() for c in first] != header:
            raise LogParseError(path, 1, f"expected header {','.join(header)}")
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise LogParseError(path, reader.line_num,
                                    f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row]


def load_event_log(events_path, attendance_path, subscriptions_path) -> EventLog:
    """Read the three CSV files into a validated EventLog.

    Users are the union of ids seen in attendance and subscriptions.
    """
    events = {}
    for line, (eid, lat, lon) in _read_rows(Path(events_path), EVENTS_HEADER):
        if not eid:
            raise LogParseError(events_path, line, "empty event_id")
        try:
            events[eid] = (float(lat), float(lon))
        except ValueError:
            raise LogParseError(events_path, line, f"non-numeric coordinates {lat!r}, {lon!r}") from None

    users = set()
    attendance = set()
    for line, (uid, eid) in _read_rows(Path(attendance_path), ATTENDANCE_HEADER):
        if not uid or not eid:
            raise LogParseError(attendance_path, line, "empty id")
        if eid not in events:
            raise IntegrityError(f"{attendance_path}:{line}: unknown event {eid!r}")
        users.add(uid)
        attendance.add((uid, eid))

    subscriptions = set()
    for line, (a, b) in _read_rows(Path(subscriptions_path), SUBSCRIPTIONS_HEADER):
        if not a or not b:
            raise LogParseError(subscriptions_path, line, "empty id")
        if a == b:
            raise IntegrityError(f"{subscriptions_path}:{line}: self-subscription {a!r}")
        users.update((a, b))
        subscriptions.add((a, b))

    return EventLog.build(users, events, attendance, subscriptions)


def load_event_log_dir(directory) -> EventLog:
    d = Path(directory)
    return load_event_log(d / "events.csv", d / "attendance.csv", d / "subscriptions.csv")


def write_event_log(log: EventLog, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "events.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for eid in sorted(log.events):
            lat, lon = log.events[eid]
            w.writerow([eid, repr(lat), repr(lon)])
    with open(d / "attendance.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ATTENDANCE_HEADER)
        w.writerows(sorted(log.attendance))
    with open(d / "subscriptions.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUBSCRIPTIONS_HEADER)
        w.writerows(sorted(log.subscriptions))


def _in_box(lat, lon, box):
    lat_min, lat_max, lon_min, lon_max = box
    return lat_min <= lat <= lat_max and lon_min <= lon <= lon_max


def apply_filters(log: EventLog, policy: FilterPolicy) -> EventLog:
    """Drop small events, inactive users and out-of-box events until nothing changes."""
    users = set(log.users)
    events = {e for e, (lat, lon) in log.events.items()
              if policy.bounding_box is None or _in_box(lat, lon, policy.bounding_box)}
    attendance = {(u, e) for u, e in log.attendance if e in events}
    subscriptions = set(log.subscriptions)

    while True:
        n_users, n_events = len(users), len(events)

        participants = defaultdict(int)
        for _, e in attendance:
            participants[e] += 1
        events = {e for e in events if participants[e] >= policy.min_participants_per_event}
        attendance = {(u, e) for u, e in attendance if e in events}

        counts = defaultdict(int)
        for u, _ in attendance:
            counts[u] += 1
        users = {u for u in users if counts[u] >= policy.min_events_per_user}
        subscriptions = {(a, b) for a, b in subscriptions if a in users and b in users}
        if policy.require_subscription:
            # "filter out users without any subscription": outgoing subscription
            subscribed = {a for a, _ in subscriptions}
            users = {u for u in users if u in subscribed}
            subscriptions = {(a, b) for a, b in subscriptions if a in users and b in users}
        attendance = {(u, e) for u, e in attendance if u in users}

        if len(users) == n_users and len(events) == n_events:
            break

    return EventLog.build(users, {e: log.events[e] for e in events}, attendance, subscriptions)
