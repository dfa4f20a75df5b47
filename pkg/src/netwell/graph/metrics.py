"""Per-node structural metrics over weekly snapshots.

Backend selection happens once at import: the compiled kernels are used
when the extension built, otherwise the pure-Python fallback. Setting the
environment variable NETWELL_PURE_GRAPH=1 forces the fallback (used by the
benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _pure
from .snapshots import WeeklySnapshot

try:
    from . import _speedups
except ImportError:  # extension not built; fall back
    _speedups = None

if _speedups is not None and os.environ.get("NETWELL_PURE_GRAPH", "0") not in ("1", "true"):
    _kernels = _speedups
else:
    _kernels = _pure


def active_backend() -> str:
    """Name of the kernel backend in use: 'compiled' or 'pure'."""
    return _kernels.NAME


def available_backends() -> dict[str, object]:
    out = {"pure": _pure}
    if _speedups is not None:
        out["compiled"] = _speedups
    return out


@dataclass(frozen=True)
class NodeMetrics:
    """The five structural metrics per node, in sorted node order.

    closeness_component is the unscaled within-component closeness r/D,
    emitted alongside the reachable-fraction-scaled value for sensitivity
    checks on fragmented weekly graphs.
    """

    nodes: list[str]
    degree: np.ndarray
    triangles: np.ndarray
    clustering: np.ndarray
    betweenness: np.ndarray
    closeness: np.ndarray
    closeness_component: np.ndarray

    METRIC_NAMES = ("degree", "triangles", "clustering", "betweenness", "closeness")

    def row(self, node: str) -> dict[str, float]:
        i = self.nodes.index(node)
        return {name: float(getattr(self, name)[i]) for name in self.METRIC_NAMES}

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {v: self.row(v) for v in self.nodes}


def _csr(snapshot: WeeklySnapshot):
    g = snapshot.graph
    return g.indptr, g.indices, g.n


def degree_and_triangles(snapshot: WeeklySnapshot, kernels=None) -> dict[str, tuple[int, int, float]]:
    """Per node: (degree, triangle count, local clustering coefficient).

    Clustering is 2*T / (deg*(deg-1)) and defined as 0 below degree 2.
    """
    kernels = kernels or _kernels
    indptr, indices, n = _csr(snapshot)
    deg = np.diff(indptr).astype(np.int64)
    tri = kernels.triangle_counts(indptr, indices, n)
    clust = _clustering(deg, tri)
    nodes = snapshot.graph.nodes
    return {v: (int(deg[i]), int(tri[i]), float(clust[i])) for i, v in enumerate(nodes)}


def _clustering(deg: np.ndarray, tri: np.ndarray) -> np.ndarray:
    possible = deg * (deg - 1) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(possible > 0, tri / possible, 0.0)
    return c


def betweenness(snapshot: WeeklySnapshot, kernels=None) -> dict[str, float]:
    """Exact shortest-path betweenness, each unordered pair counted once,
    normalized by (n-1)(n-2)/2; graphs with n < 3 are all zeros."""
    kernels = kernels or _kernels
    indptr, indices, n = _csr(snapshot)
    values = _betweenness_values(kernels, indptr, indices, n)
    return {v: float(values[i]) for i, v in enumerate(snapshot.graph.nodes)}


def _betweenness_values(kernels, indptr, indices, n: int) -> np.ndarray:
    if n < 3:
        return np.zeros(n, dtype=np.float64)
    if n > 32000 and kernels is not _pure:
        # compiled kernel stores BFS levels as int16
        kernels = _pure
    raw = kernels.betweenness_accumulate(indptr, indices, n)
    # Halve the ordered-pair sums, then scale by the pair count.
    return raw / 2.0 / ((n - 1) * (n - 2) / 2.0)


def closeness(snapshot: WeeklySnapshot, kernels=None) -> dict[str, float]:
    """Reachable-fraction-scaled component closeness in [0, 1].

    For node v reaching r others at total distance D in an n-node graph:
    (r / (n-1)) * (r / D); isolated nodes score 0.
    """
    kernels = kernels or _kernels
    indptr, indices, n = _csr(snapshot)
    scaled, _ = _closeness_values(kernels, indptr, indices, n)
    return {v: float(scaled[i]) for i, v in enumerate(snapshot.graph.nodes)}


def _closeness_values(kernels, indptr, indices, n: int) -> tuple[np.ndarray, np.ndarray]:
    if n <= 1:
        z = np.zeros(n, dtype=np.float64)
        return z, z.copy()
    reach, total = kernels.reach_and_distance(indptr, indices, n)
    reach = reach.astype(np.float64)
    total = total.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        component = np.where(total > 0, reach / total, 0.0)
    scaled = (reach / (n - 1)) * component
    return scaled, component


def compute_metrics(snapshot: WeeklySnapshot, kernels=None) -> NodeMetrics:
    """All five metrics in one pass over the snapshot, node order sorted."""
    kernels = kernels or _kernels
    indptr, indices, n = _csr(snapshot)
    deg = np.diff(indptr).astype(np.int64)
    tri = kernels.triangle_counts(indptr, indices, n)
    bet = _betweenness_values(kernels, indptr, indices, n)
    close_scaled, close_component = _closeness_values(kernels, indptr, indices, n)
    return NodeMetrics(
        nodes=list(snapshot.graph.nodes),
        degree=deg,
        triangles=tri,
        clustering=_clustering(deg, tri),
        betweenness=bet,
        closeness=close_scaled,
        closeness_component=close_component,
    )
