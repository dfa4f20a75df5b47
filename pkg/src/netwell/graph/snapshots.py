"""Edge-set construction and weekly snapshot materialization.

The contact-frequency filter is applied once over the whole study range;
weekly snapshots then select among the surviving pairs, requiring at least
one in-week event. Snapshots are undirected, unweighted, and simple.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import DataError
from ..records import CommEvent, WeekIndex

Pair = tuple[str, str]


class Scope(enum.Enum):
    """participant: both endpoints enrolled; whole: outsiders included."""

    PARTICIPANT = "participant"
    WHOLE = "whole"


@dataclass(frozen=True)
class EdgeSet:
    """Study-wide contact counts and the pairs surviving the frequency filter."""

    contact_count: dict[Pair, int]
    edges: frozenset[Pair]
    min_frequency: int


def build_edge_set(events: Iterable[CommEvent], min_frequency: int = 3) -> EdgeSet:
    """Count calls plus texts in both directions per unordered pair and keep
    pairs contacted at least ``min_frequency`` times (boundary inclusive)."""
    counts: dict[Pair, int] = {}
    for e in events:
        p = e.pair()
        counts[p] = counts.get(p, 0) + 1
    edges = frozenset(p for p, c in counts.items() if c >= min_frequency)
    return EdgeSet(counts, edges, min_frequency)


class SimpleGraph:
    """Immutable undirected simple graph over string node ids.

    Nodes are kept sorted; adjacency is CSR (indptr/indices over node
    positions) with sorted neighbor lists, which is what the metric kernels
    consume.
    """

    __slots__ = ("nodes", "_index", "indptr", "indices")

    def __init__(self, nodes: Iterable[str], edges: Iterable[Pair]):
        self.nodes: list[str] = sorted(set(nodes))
        self._index = {v: i for i, v in enumerate(self.nodes)}
        adj: list[set[int]] = [set() for _ in self.nodes]
        for a, b in edges:
            if a == b:
                raise DataError(f"self-loop on node {a!r}")
            ia, ib = self._index[a], self._index[b]
            adj[ia].add(ib)
            adj[ib].add(ia)
        indptr = np.zeros(len(self.nodes) + 1, dtype=np.int32)
        chunks = []
        for i, neigh in enumerate(adj):
            ordered = np.array(sorted(neigh), dtype=np.int32)
            chunks.append(ordered)
            indptr[i + 1] = indptr[i] + len(ordered)
        self.indptr = indptr
        self.indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int32)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.indices) // 2

    def index_of(self, node: str) -> int:
        return self._index[node]

    def has_edge(self, a: str, b: str) -> bool:
        ia, ib = self._index[a], self._index[b]
        row = self.indices[self.indptr[ia]:self.indptr[ia + 1]]
        return bool(np.isin(ib, row).item()) if len(row) else False

    def neighbors(self, node: str) -> list[str]:
        i = self._index[node]
        return [self.nodes[j] for j in self.indices[self.indptr[i]:self.indptr[i + 1]]]

    def edge_pairs(self) -> list[Pair]:
        out = []
        for i in range(self.n):
            for j in self.indices[self.indptr[i]:self.indptr[i + 1]]:
                if i < j:
                    out.append((self.nodes[i], self.nodes[int(j)]))
        return out

    def degree(self, node: str) -> int:
        i = self._index[node]
        return int(self.indptr[i + 1] - self.indptr[i])


@dataclass(frozen=True)
class WeeklySnapshot:
    """One (week, scope) graph."""

    week: WeekIndex
    scope: Scope
    graph: SimpleGraph


def build_snapshot(
    edge_set: EdgeSet,
    events: Sequence[CommEvent],
    week: WeekIndex,
    scope: Scope,
    roster: set[str],
    study_weeks: Sequence[WeekIndex] | None = None,
) -> WeeklySnapshot:
    """Materialize the snapshot for one (week, scope).

    An edge is present iff its pair passed the study-wide frequency filter
    and had at least one event this week; participant scope additionally
    drops edges touching anyone outside the roster. Nodes are the endpoints
    of included edges plus every roster member active (any event) this week.
    """
    if study_weeks is not None and not any(
        w.index == week.index and w.start == week.start for w in study_weeks
    ):
        raise DataError(f"week {week.index} ({week.start}) is outside the study range")

    weekly_pairs: set[Pair] = set()
    active: set[str] = set()
    for e in events:
        if not week.contains_ts(e.timestamp):
            continue
        weekly_pairs.add(e.pair())
        if e.src in roster:
            active.add(e.src)
        if e.dst in roster:
            active.add(e.dst)

    included = weekly_pairs & edge_set.edges
    if scope is Scope.PARTICIPANT:
        included = {p for p in included if p[0] in roster and p[1] in roster}
    nodes = {v for p in included for v in p} | active
    return WeeklySnapshot(week, scope, SimpleGraph(nodes, included))
