"""Weekly communication-graph snapshots and per-node structural metrics.

The metric kernels live in a compiled extension (netwell.graph._speedups)
with a pure-Python fallback (netwell.graph._pure); the active backend is
chosen once at import, see :func:`netwell.graph.metrics.active_backend`.
"""

from .snapshots import EdgeSet, Scope, SimpleGraph, WeeklySnapshot, build_edge_set, build_snapshot
from .metrics import (
    NodeMetrics,
    active_backend,
    betweenness,
    closeness,
    compute_metrics,
    degree_and_triangles,
)

__all__ = [
    "EdgeSet",
    "Scope",
    "SimpleGraph",
    "WeeklySnapshot",
    "build_edge_set",
    "build_snapshot",
    "NodeMetrics",
    "active_backend",
    "betweenness",
    "closeness",
    "compute_metrics",
    "degree_and_triangles",
]
