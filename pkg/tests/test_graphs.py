import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from ebsn_influence.geo import EARTH_RADIUS_KM, GeoPoint
from ebsn_influence.graphs import (WeightedGraph, build_homophily_graph, build_physical_graph,
                                   build_social_graph, ego_network, physical_sigma, user_centroids)
from ebsn_influence.ingest import EventLog

KM_PER_DEG_EQUATOR = EARTH_RADIUS_KM * math.pi / 180


def _log(attendance, subscriptions=(), coords=None):
    events = {e for _, e in attendance}
    coords = coords or {}
    users = {u for u, _ in attendance} | {u for p in subscriptions for u in p}
    return EventLog.build(users, {e: coords.get(e, (10.0, 10.0)) for e in events},
                          set(attendance), set(subscriptions))


def test_social_graph_symmetrizes_without_doubling():
    log = _log([("a", "e"), ("b", "e"), ("c", "e")], [("a", "b"), ("b", "a"), ("c", "a")])
    g = build_social_graph(log)
    assert g.edges == {("a", "b"): 1.0, ("a", "c"): 1.0}


def test_social_graph_no_subscriptions_is_edgeless():
    g = build_social_graph(_log([("a", "e"), ("b", "e")]))
    assert g.nodes == ("a", "b") and not g.edges


def test_ego_network():
    log = _log([("a", "e"), ("b", "e"), ("c", "e"), ("d", "e")], [("a", "b"), ("c", "a")])
    sg = build_social_graph(log)
    assert ego_network(sg, "a").alters == {"b", "c"}
    assert ego_network(sg, "d").alters == frozenset()
    with pytest.raises(KeyError):
        ego_network(sg, "zz")


def test_physical_graph_identical_centroids_weight_one():
    log = _log([("a", "e1"), ("b", "e1"), ("c", "e2")], coords={"e1": (0.0, 0.0), "e2": (0.0, 1.0)})
    g = build_physical_graph(log, sigma_km=50.0, epsilon=0.0)
    assert g.edges[("a", "b")] == 1.0


def test_physical_graph_sigma_apart():
    sigma = KM_PER_DEG_EQUATOR * 0.5
    log = _log([("a", "e1"), ("b", "e2")], coords={"e1": (0.0, 0.0), "e2": (0.0, 0.5)})
    g = build_physical_graph(log, sigma_km=sigma)
    assert g.edges[("a", "b")] == pytest.approx(math.exp(-0.5), rel=1e-9)


def test_auto_sigma_is_median_distance():
    assert physical_sigma([1.0, 2.0, 100.0]) == 2.0
    # three collinear centroids at 0, 1 and 3 km: distances {1, 2, 3}
    deg = 1.0 / KM_PER_DEG_EQUATOR
    log = _log([("a", "e1"), ("b", "e2"), ("c", "e3")],
               coords={"e1": (0.0, 0.0), "e2": (0.0, deg), "e3": (0.0, 3 * deg)})
    g = build_physical_graph(log, epsilon=0.0)
    # a-c are 3 km apart; with sigma = 2 km their weight is exp(-9/8)
    assert g.edges[("a", "c")] == pytest.approx(math.exp(-9 / 8), rel=1e-6)


def test_auto_sigma_all_coincident():
    assert physical_sigma([0.0, 0.0]) == 1.0


def test_physical_graph_epsilon_cutoff():
    log = _log([("a", "e1"), ("b", "e2")], coords={"e1": (0.0, 0.0), "e2": (0.0, 10.0)})
    assert not build_physical_graph(log, sigma_km=10.0, epsilon=1e-4).edges


@pytest.mark.parametrize("a_events,b_events,expected", [
    ({"e1", "e2"}, {"e1", "e2"}, 1.0),
    ({"e1"}, {"e2"}, None),
    ({"e1", "e2"}, {"e2", "e3"}, 1 / 3),
])
def test_homophily_jaccard(a_events, b_events, expected):
    log = _log([("a", e) for e in a_events] + [("b", e) for e in b_events])
    g = build_homophily_graph(log)
    assert g.edges.get(("a", "b")) == (None if expected is None else pytest.approx(expected))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.sets(st.sampled_from([f"e{i}" for i in range(8)]), min_size=1), min_size=2, max_size=6))
def test_homophily_matches_set_jaccard(sets):
    users = [f"u{i}" for i in range(len(sets))]
    log = _log([(u, e) for u, s in zip(users, sets) for e in s])
    g = build_homophily_graph(log)
    for (i, a), (j, b) in itertools.combinations(enumerate(sets), 2):
        jac = len(a & b) / len(a | b)
        key = (users[i], users[j])
        if jac == 0:
            assert key not in g.edges
        else:
            assert g.edges[key] == pytest.approx(jac, abs=1e-12)


def test_user_centroids_cover_every_user():
    log = _log([("a", "e1"), ("a", "e2"), ("b", "e2")], coords={"e1": (0.0, 0.0), "e2": (2.0, 2.0)})
    c = user_centroids(log)
    assert c["b"] == GeoPoint(2.0, 2.0)
    assert c["a"].latitude == pytest.approx(1.0)


def test_weighted_graph_validation():
    with pytest.raises(ValueError):
        WeightedGraph(("a", "b"), {("b", "a"): 1.0})
    with pytest.raises(ValueError):
        WeightedGraph(("a",), {("a", "b"): 1.0})
    with pytest.raises(ValueError):
        WeightedGraph(("a", "b"), {("a", "b"): 0.0})
    # from_edges canonicalizes order and drops self-loops
    g = WeightedGraph.from_edges(["b", "a"], [("b", "a", 2.0), ("a", "a", 1.0)])
    assert g.edges == {("a", "b"): 2.0}


def test_graph_csv_round_trip(tmp_path):
    g = WeightedGraph.from_edges(["a", "b", "c", "lonely"], [("a", "b", 0.1 + 0.2), ("b", "c", 1.0)])
    g.to_csv(tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "node_a,node_b,weight"
    assert WeightedGraph.from_csv(tmp_path / "g.csv", g.nodes) == g
