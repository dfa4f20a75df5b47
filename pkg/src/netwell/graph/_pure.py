"""Pure-Python graph kernels: the fallback backend.

Signature-compatible with the compiled module (netwell.graph._speedups);
all functions take a CSR adjacency (int32 indptr/indices with sorted
neighbor lists) and return numpy arrays. Fine for small graphs and for
cross-checking the compiled kernels; roughly two orders of magnitude
slower on large ones (see benchmarks/bench_centrality.py).
"""

from __future__ import annotations

from collections import deque

import numpy as np

NAME = "pure"


def betweenness_accumulate(indptr, indices, n: int) -> np.ndarray:
    """Brandes' single-source accumulation summed over every source.

    Returns the raw ordered-pair dependency sums; the caller halves them
    for undirected graphs and applies normalization.
    """
    bc = np.zeros(n, dtype=np.float64)
    indptr = indptr.tolist()
    indices = indices.tolist()
    for s in range(n):
        dist = [-1] * n
        sigma = [0.0] * n
        delta = [0.0] * n
        dist[s] = 0
        sigma[s] = 1.0
        order: list[int] = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            dv = dist[v]
            sv = sigma[v]
            for w in indices[indptr[v]:indptr[v + 1]]:
                if dist[w] < 0:
                    dist[w] = dv + 1
                    queue.append(w)
                if dist[w] == dv + 1:
                    sigma[w] += sv
        # Reverse BFS order: a neighbor one level closer is a predecessor.
        for w in reversed(order):
            dw = dist[w]
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in indices[indptr[w]:indptr[w + 1]]:
                if dist[v] == dw - 1:
                    delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    return bc


def reach_and_distance(indptr, indices, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per node: (number of reachable other nodes, sum of BFS distances)."""
    reach = np.zeros(n, dtype=np.int64)
    total = np.zeros(n, dtype=np.int64)
    indptr = indptr.tolist()
    indices = indices.tolist()
    for s in range(n):
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        r = 0
        d_sum = 0
        while queue:
            v = queue.popleft()
            dv = dist[v]
            for w in indices[indptr[v]:indptr[v + 1]]:
                if dist[w] < 0:
                    dist[w] = dv + 1
                    r += 1
                    d_sum += dv + 1
                    queue.append(w)
        reach[s] = r
        total[s] = d_sum
    return reach, total


def triangle_counts(indptr, indices, n: int) -> np.ndarray:
    """Number of edges among each node's neighbors.

    For every edge (u, v) the sorted neighbor lists are merged; each common
    neighbor w closes a triangle and w is credited once per closing edge.
    """
    tri = np.zeros(n, dtype=np.int64)
    indptr = indptr.tolist()
    indices = indices.tolist()
    for u in range(n):
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if v <= u:
                continue
            i, i_end = indptr[u], indptr[u + 1]
            j, j_end = indptr[v], indptr[v + 1]
            while i < i_end and j < j_end:
                a, b = indices[i], indices[j]
                if a == b:
                    tri[a] += 1
                    i += 1
                    j += 1
                elif a < b:
                    i += 1
                else:
                    j += 1
    return tri
