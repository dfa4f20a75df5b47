"""Snapshot construction and metric correctness, including brute-force
oracles (path enumeration, distance matrices, triple counting) run against
both kernel backends."""

import itertools
from datetime import date

import numpy as np
import pytest

from netwell.errors import DataError
from netwell.graph import (
    Scope,
    SimpleGraph,
    WeeklySnapshot,
    build_edge_set,
    build_snapshot,
    betweenness,
    closeness,
    compute_metrics,
    degree_and_triangles,
)
from netwell.graph.metrics import available_backends
from netwell.ingest import make_weeks
from netwell.records import CommEvent, CommKind

BACKENDS = list(available_backends().items())
WEEKS = make_weeks(date(2016, 8, 1), date(2016, 8, 29))


def snapshot_of(nodes, edges):
    return WeeklySnapshot(WEEKS[0], Scope.WHOLE, SimpleGraph(nodes, edges))


def text(ts, a, b):
    return CommEvent(ts, a, b, CommKind.TEXT, 0, True)


def call(ts, a, b, dur=10):
    return CommEvent(ts, a, b, CommKind.CALL, dur, True)


T0 = WEEKS[0].start_ts


class TestEdgeSet:
    def test_two_texts_filtered(self):
        es = build_edge_set([text(T0, "A", "B"), text(T0 + 1, "A", "B")])
        assert ("A", "B") not in es.edges
        assert es.contact_count[("A", "B")] == 2

    def test_direction_agnostic_boundary(self):
        es = build_edge_set([text(T0, "A", "B"), text(T0 + 1, "A", "B"), call(T0 + 2, "B", "A")])
        assert ("A", "B") in es.edges
        assert es.contact_count[("A", "B")] == 3

    def test_empty(self):
        es = build_edge_set([])
        assert not es.edges and not es.contact_count


class TestBuildSnapshot:
    def events(self):
        # (A,B) and (A,X) pass the global filter; (B,C) stays below it
        ev = []
        for i in range(3):
            ev.append(text(T0 + i, "A", "B"))
            ev.append(text(T0 + 10 + i, "A", "X"))
        ev.append(text(T0 + 20, "B", "C"))
        # week 1: only (A,X) is active
        ev.append(text(WEEKS[1].start_ts + 5, "A", "X"))
        return ev

    def test_scope_drops_outsider_edges(self):
        ev = self.events()
        es = build_edge_set(ev)
        roster = {"A", "B", "C"}
        whole = build_snapshot(es, ev, WEEKS[0], Scope.WHOLE, roster)
        part = build_snapshot(es, ev, WEEKS[0], Scope.PARTICIPANT, roster)
        assert whole.graph.has_edge("A", "X")
        assert "X" not in part.graph.nodes
        assert part.graph.has_edge("A", "B")

    def test_retained_pair_without_weekly_events_absent(self):
        ev = self.events()
        es = build_edge_set(ev)
        snap = build_snapshot(es, ev, WEEKS[1], Scope.WHOLE, {"A", "B", "C"})
        assert snap.graph.has_edge("A", "X")
        assert not ("B" in snap.graph.nodes and snap.graph.has_edge("A", "B"))

    def test_below_threshold_pair_absent_despite_weekly_events(self):
        ev = [text(T0 + i, "A", "B") for i in range(5)]
        es = build_edge_set(ev + [text(T0, "C", "D")], min_frequency=6)
        snap = build_snapshot(es, ev, WEEKS[0], Scope.WHOLE, {"A", "B"})
        assert not snap.graph.has_edge("A", "B") if "A" in snap.graph.nodes and "B" in snap.graph.nodes else True
        assert snap.graph.m == 0

    def test_active_roster_members_appear_as_isolates(self):
        ev = self.events()
        es = build_edge_set(ev)
        snap = build_snapshot(es, ev, WEEKS[0], Scope.WHOLE, {"A", "B", "C"})
        # C only texted B once: active but edgeless
        assert "C" in snap.graph.nodes
        assert snap.graph.degree("C") == 0

    def test_week_outside_study_range(self):
        ev = self.events()
        es = build_edge_set(ev)
        stray = make_weeks(date(2019, 1, 1), date(2019, 1, 8))[0]
        with pytest.raises(DataError, match="outside the study range"):
            build_snapshot(es, ev, stray, Scope.WHOLE, {"A"}, study_weeks=WEEKS)

    def test_participant_scope_is_roster_subgraph_of_whole(self):
        rng = np.random.default_rng(5)
        people = [f"P{i}" for i in range(10)] + [f"O{i}" for i in range(5)]
        roster = {p for p in people if p.startswith("P")}
        ev = []
        for k in range(400):
            a, b = rng.choice(len(people), 2, replace=False)
            ev.append(text(T0 + int(rng.integers(0, 14 * 86400)), people[a], people[b]))
        es = build_edge_set(ev)
        for week in WEEKS[:2]:
            whole = build_snapshot(es, ev, week, Scope.WHOLE, roster)
            part = build_snapshot(es, ev, week, Scope.PARTICIPANT, roster)
            for a, b in part.graph.edge_pairs():
                assert whole.graph.has_edge(a, b)
                assert a in roster and b in roster


# ---------------------------------------------------------------------------
# Metric examples

@pytest.mark.parametrize("name,kernels", BACKENDS)
class TestMetricExamples:
    def test_triangle_graph(self, name, kernels):
        snap = snapshot_of("ABC", [("A", "B"), ("B", "C"), ("A", "C")])
        res = degree_and_triangles(snap, kernels)
        for node in "ABC":
            assert res[node] == (2, 1, 1.0)

    def test_path_clustering(self, name, kernels):
        snap = snapshot_of("ABC", [("A", "B"), ("B", "C")])
        assert degree_and_triangles(snap, kernels)["B"] == (2, 0, 0.0)

    def test_k4_minus_edge(self, name, kernels):
        edges = [("1", "2"), ("1", "3"), ("1", "4"), ("2", "3"), ("2", "4")]
        res = degree_and_triangles(snapshot_of("1234", edges), kernels)
        deg, tri, clust = res["1"]
        assert (deg, tri) == (3, 2)
        assert clust == pytest.approx(2 / 3)

    def test_path_betweenness(self, name, kernels):
        snap = snapshot_of("ABC", [("A", "B"), ("B", "C")])
        b = betweenness(snap, kernels)
        assert b["B"] == pytest.approx(1.0)
        assert b["A"] == b["C"] == 0.0

    def test_star_betweenness(self, name, kernels):
        edges = [("C", leaf) for leaf in "1234"]
        b = betweenness(snapshot_of("C1234", edges), kernels)
        assert b["C"] == pytest.approx(1.0)

    def test_complete_graph_betweenness(self, name, kernels):
        edges = [(a, b) for a, b in itertools.combinations("1234", 2)]
        b = betweenness(snapshot_of("1234", edges), kernels)
        assert all(v == 0.0 for v in b.values())

    def test_star_closeness(self, name, kernels):
        edges = [("C", leaf) for leaf in "1234"]
        c = closeness(snapshot_of("C1234", edges), kernels)
        assert c["C"] == pytest.approx(1.0)
        assert c["1"] == pytest.approx(4 / 7)

    def test_disconnected_edges_closeness(self, name, kernels):
        c = closeness(snapshot_of("ABCD", [("A", "B"), ("C", "D")]), kernels)
        for node in "ABCD":
            assert c[node] == pytest.approx(1 / 3)

    def test_isolated_node_zero(self, name, kernels):
        snap = snapshot_of("ABC", [("A", "B")])
        m = compute_metrics(snap, kernels)
        i = m.nodes.index("C")
        assert m.degree[i] == 0 and m.closeness[i] == 0.0 and m.betweenness[i] == 0.0


# ---------------------------------------------------------------------------
# Brute-force oracles

def oracle_all_pairs(graph: SimpleGraph):
    """Distance matrix by repeated relaxation (Floyd-Warshall)."""
    n = graph.n
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for a, b in graph.edge_pairs():
        i, j = graph.index_of(a), graph.index_of(b)
        dist[i, j] = dist[j, i] = 1.0
    for k in range(n):
        dist = np.minimum(dist, dist[:, k, None] + dist[None, k, :])
    return dist


def oracle_betweenness(graph: SimpleGraph):
    """Enumerate every simple path per pair, keep the shortest, and count
    pass-throughs. Exponential, fine for n <= 8."""
    n = graph.n
    adj = {v: set(graph.neighbors(v)) for v in graph.nodes}
    score = {v: 0.0 for v in graph.nodes}

    def all_paths(s, t):
        paths = []
        stack = [(s, [s])]
        while stack:
            v, path = stack.pop()
            if v == t:
                paths.append(path)
                continue
            for w in sorted(adj[v]):
                if w not in path:
                    stack.append((w, path + [w]))
        return paths

    for s, t in itertools.combinations(graph.nodes, 2):
        paths = all_paths(s, t)
        if not paths:
            continue
        shortest = min(len(p) for p in paths)
        sp = [p for p in paths if len(p) == shortest]
        for p in sp:
            for v in p[1:-1]:
                score[v] += 1.0 / len(sp)
    if n < 3:
        return {v: 0.0 for v in graph.nodes}
    norm = (n - 1) * (n - 2) / 2.0
    return {v: s / norm for v, s in score.items()}


def oracle_closeness(graph: SimpleGraph):
    dist = oracle_all_pairs(graph)
    n = graph.n
    out = {}
    for i, v in enumerate(graph.nodes):
        finite = np.isfinite(dist[i]) & (np.arange(n) != i)
        r = int(finite.sum())
        total = float(dist[i][finite].sum())
        if r == 0 or total == 0 or n == 1:
            out[v] = 0.0
        else:
            out[v] = (r / (n - 1)) * (r / total)
    return out


def oracle_triangles(graph: SimpleGraph):
    tri = {v: 0 for v in graph.nodes}
    for a, b, c in itertools.combinations(graph.nodes, 3):
        if graph.has_edge(a, b) and graph.has_edge(b, c) and graph.has_edge(a, c):
            tri[a] += 1
            tri[b] += 1
            tri[c] += 1
    return tri


def random_graph(seed, n=None, p=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(1, 9))
    p = p if p is not None else rng.choice([0.2, 0.5, 0.8])
    nodes = [f"n{i}" for i in range(n)]
    edges = [(a, b) for a, b in itertools.combinations(nodes, 2) if rng.random() < p]
    return snapshot_of(nodes, edges)


@pytest.mark.parametrize("name,kernels", BACKENDS)
class TestOracles:
    def test_small_random_graphs_match_oracles(self, name, kernels):
        for seed in range(40):
            snap = random_graph(seed)
            m = compute_metrics(snap, kernels)
            bet = oracle_betweenness(snap.graph)
            clo = oracle_closeness(snap.graph)
            tri = oracle_triangles(snap.graph)
            for i, v in enumerate(m.nodes):
                assert m.betweenness[i] == pytest.approx(bet[v], abs=1e-9), (seed, v)
                assert m.closeness[i] == pytest.approx(clo[v], abs=1e-9), (seed, v)
                assert m.triangles[i] == tri[v], (seed, v)
                deg = snap.graph.degree(v)
                expected_clust = tri[v] / (deg * (deg - 1) / 2) if deg >= 2 else 0.0
                assert m.clustering[i] == pytest.approx(expected_clust, abs=1e-9)

    def test_triangle_sum_property(self, name, kernels):
        for seed in range(20):
            snap = random_graph(100 + seed, n=8)
            m = compute_metrics(snap, kernels)
            distinct = sum(
                1 for a, b, c in itertools.combinations(snap.graph.nodes, 3)
                if snap.graph.has_edge(a, b) and snap.graph.has_edge(b, c)
                and snap.graph.has_edge(a, c)
            )
            assert int(m.triangles.sum()) == 3 * distinct

    def test_permutation_equivariance(self, name, kernels):
        rng = np.random.default_rng(3)
        snap = random_graph(77, n=7, p=0.5)
        perm = rng.permutation(7)
        relabel = {v: f"z{int(perm[i])}" for i, v in enumerate(snap.graph.nodes)}
        edges2 = [(relabel[a], relabel[b]) for a, b in snap.graph.edge_pairs()]
        snap2 = snapshot_of([relabel[v] for v in snap.graph.nodes], edges2)
        m1 = compute_metrics(snap, kernels)
        m2 = compute_metrics(snap2, kernels)
        for i, v in enumerate(m1.nodes):
            j = m2.nodes.index(relabel[v])
            for field in ("degree", "triangles", "clustering", "betweenness", "closeness"):
                assert getattr(m1, field)[i] == pytest.approx(getattr(m2, field)[j], abs=1e-12)

    def test_clustering_bounds_and_degree_monotone(self, name, kernels):
        for seed in range(10):
            snap = random_graph(200 + seed, n=7, p=0.4)
            m = compute_metrics(snap, kernels)
            assert ((m.clustering >= 0) & (m.clustering <= 1)).all()
            pairs = snap.graph.edge_pairs()
            non_edges = [
                (a, b) for a, b in itertools.combinations(snap.graph.nodes, 2)
                if (a, b) not in pairs
            ]
            if not non_edges:
                continue
            a, b = non_edges[0]
            bigger = snapshot_of(snap.graph.nodes, pairs + [(a, b)])
            m2 = compute_metrics(bigger, kernels)
            for v in (a, b):
                assert m2.degree[m2.nodes.index(v)] == m.degree[m.nodes.index(v)] + 1


class TestBackendsAgree:
    @pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
    def test_backends_identical_on_random_graphs(self):
        backends = dict(BACKENDS)
        for seed in range(25):
            snap = random_graph(300 + seed, n=int(np.random.default_rng(seed).integers(2, 30)), p=0.3)
            a = compute_metrics(snap, backends["pure"])
            b = compute_metrics(snap, backends["compiled"])
            assert np.allclose(a.betweenness, b.betweenness, atol=1e-12)
            assert np.allclose(a.closeness, b.closeness, atol=1e-12)
            assert (a.triangles == b.triangles).all()
