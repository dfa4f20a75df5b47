# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled graph kernels: the hot backend.

Same contracts as netwell.graph._pure; CSR in, numpy arrays out. The
betweenness accumulation is O(V*(V+E)) with flat work arrays reused
across sources, no per-source allocation.
"""

import numpy as np

NAME = "compiled"


def betweenness_accumulate(int[:] indptr, int[:] indices, Py_ssize_t n):
    """Brandes' accumulation summed over all sources (raw ordered-pair sums).

    During each BFS the shortest-path DAG edges are recorded in discovery
    order; replaying them in reverse finalizes every dependency before it
    is propagated, so the accumulation touches exactly the DAG edges
    instead of re-scanning the full adjacency with distance checks.
    """
    cdef Py_ssize_t m2 = indices.shape[0]
    bc_arr = np.zeros(n, dtype=np.float64)
    # int16 keeps the hottest random-access array (BFS levels) L1-resident;
    # levels are bounded by the diameter, far below the int16 range here.
    dist_arr = np.empty(n, dtype=np.int16)
    sigma_arr = np.empty(n, dtype=np.float64)
    inv_sigma_arr = np.empty(n, dtype=np.float64)
    delta_arr = np.zeros(n, dtype=np.float64)
    order_arr = np.empty(n, dtype=np.int32)
    dag_dst_arr = np.empty(m2, dtype=np.int32)
    grp_start_arr = np.empty(n + 1, dtype=np.int64)

    cdef double[:] bc = bc_arr
    cdef short[:] dist = dist_arr
    cdef double[:] sigma = sigma_arr
    cdef double[:] inv_sigma = inv_sigma_arr
    cdef double[:] delta = delta_arr
    cdef int[:] order = order_arr
    cdef int[:] dag_dst = dag_dst_arr
    cdef long long[:] grp_start = grp_start_arr

    cdef Py_ssize_t s, i, k, g, head, tail, ne
    cdef int v, w
    cdef short dv
    cdef double sv, acc

    if n > 32000:
        raise ValueError("graph too large for int16 BFS levels")

    for i in range(n):
        dist[i] = -1
    for s in range(n):
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = <int> s
        head = 0
        tail = 1
        ne = 0
        while head < tail:
            v = order[head]
            grp_start[head] = ne
            head += 1
            dv = dist[v] + 1
            sv = sigma[v]
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dv
                    sigma[w] = sv
                    order[tail] = w
                    tail += 1
                    dag_dst[ne] = w
                    ne += 1
                elif dist[w] == dv:
                    sigma[w] += sv
                    dag_dst[ne] = w
                    ne += 1
        grp_start[tail] = ne
        for i in range(tail):
            v = order[i]
            inv_sigma[v] = 1.0 / sigma[v]
            delta[v] = 0.0
        # Groups hold the DAG out-edges of each popped node in pop order;
        # replaying groups in reverse finalizes delta[w] before any use.
        for g in range(tail - 1, -1, -1):
            acc = 0.0
            for k in range(grp_start[g], grp_start[g + 1]):
                w = dag_dst[k]
                acc += inv_sigma[w] * (1.0 + delta[w])
            v = order[g]
            delta[v] += sigma[v] * acc
        for i in range(1, tail):
            bc[order[i]] += delta[order[i]]
        # restore only what this source touched
        for i in range(tail):
            dist[order[i]] = -1
    return bc_arr


def reach_and_distance(int[:] indptr, int[:] indices, Py_ssize_t n):
    """Per node: (number of reachable other nodes, sum of BFS distances)."""
    reach_arr = np.zeros(n, dtype=np.int64)
    total_arr = np.zeros(n, dtype=np.int64)
    dist_arr = np.empty(n, dtype=np.int32)
    queue_arr = np.empty(n, dtype=np.int32)

    cdef long long[:] reach = reach_arr
    cdef long long[:] total = total_arr
    cdef int[:] dist = dist_arr
    cdef int[:] queue = queue_arr

    cdef Py_ssize_t s, i, k, head, tail
    cdef int v, w, dv
    cdef long long r, d_sum

    for s in range(n):
        for i in range(n):
            dist[i] = -1
        dist[s] = 0
        queue[0] = <int> s
        head = 0
        tail = 1
        r = 0
        d_sum = 0
        while head < tail:
            v = queue[head]
            head += 1
            dv = dist[v]
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    r += 1
                    d_sum += dv + 1
                    queue[tail] = w
                    tail += 1
        reach[s] = r
        total[s] = d_sum
    return reach_arr, total_arr


def triangle_counts(int[:] indptr, int[:] indices, Py_ssize_t n):
    """Per node: edges among its neighbors, via sorted-merge over each edge."""
    tri_arr = np.zeros(n, dtype=np.int64)
    cdef long long[:] tri = tri_arr

    cdef Py_ssize_t u, k, i, j, i_end, j_end
    cdef int v, a, b

    for u in range(n):
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if v <= <int> u:
                continue
            i = indptr[u]
            i_end = indptr[u + 1]
            j = indptr[v]
            j_end = indptr[v + 1]
            while i < i_end and j < j_end:
                a = indices[i]
                b = indices[j]
                if a == b:
                    tri[a] += 1
                    i += 1
                    j += 1
                elif a < b:
                    i += 1
                else:
                    j += 1
    return tri_arr
