"""Maximum clique over small undirected graphs.

Exact branch-and-bound with greedy-coloring bounds up to EXACT_LIMIT
vertices; beyond that a degeneracy-ordered greedy heuristic keeps runtime
bounded. Vertex bitsets are Python ints, so adjacency intersection is one
AND per step.
"""

from __future__ import annotations

import numpy as np

EXACT_LIMIT = 150


def _to_adjacency_bits(adjacency: np.ndarray) -> list[int]:
    adj = np.asarray(adjacency, dtype=bool)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adjacency must be a square matrix")
    if not np.array_equal(adj, adj.T):
        raise ValueError("adjacency must be symmetric")
    n = adj.shape[0]
    bits = []
    for i in range(n):
        row = 0
        for j in np.flatnonzero(adj[i]):
            if j != i:
                row |= 1 << int(j)
        bits.append(row)
    return bits


def _greedy_color_order(cand: int, adj: list[int]) -> tuple[list[int], list[int]]:
    """Vertices of `cand` with greedy color numbers, colors ascending."""
    order: list[int] = []
    colors: list[int] = []
    color = 0
    rest = cand
    while rest:
        color += 1
        avail = rest
        while avail:
            v = (avail & -avail).bit_length() - 1
            avail &= avail - 1
            avail &= ~adj[v]
            rest &= ~(1 << v)
            order.append(v)
            colors.append(color)
    return order, colors


def _expand(cand: int, current: list[int], best: list[int], adj: list[int]) -> list[int]:
    order, colors = _greedy_color_order(cand, adj)
    for i in range(len(order) - 1, -1, -1):
        if len(current) + colors[i] <= len(best):
            return best
        v = order[i]
        current.append(v)
        nxt = cand & adj[v]
        if nxt:
            best = _expand(nxt, current, best, adj)
        elif len(current) > len(best):
            best = list(current)
        current.pop()
        cand &= ~(1 << v)
    return best


def _degeneracy_greedy(adj: list[int], n: int) -> list[int]:
    """Greedy clique along a smallest-last (degeneracy) vertex order."""
    degrees = [adj[i].bit_count() for i in range(n)]
    removed = [False] * n
    order = []
    for _ in range(n):
        v = min((i for i in range(n) if not removed[i]), key=lambda i: degrees[i])
        order.append(v)
        removed[v] = True
        nbrs = adj[v]
        while nbrs:
            u = (nbrs & -nbrs).bit_length() - 1
            nbrs &= nbrs - 1
            if not removed[u]:
                degrees[u] -= 1
    best: list[int] = []
    # grow a clique starting from each vertex in reverse degeneracy order
    for start in reversed(order):
        clique = [start]
        cand = adj[start]
        while cand:
            v = (cand & -cand).bit_length() - 1
            clique.append(v)
            cand &= adj[v]
        if len(clique) > len(best):
            best = clique
    return best


def max_clique(adjacency: np.ndarray) -> list[int]:
    """Vertex indices of a maximum clique, sorted ascending.

    Exact for graphs up to EXACT_LIMIT vertices; a degeneracy-ordered greedy
    answer (still a clique, possibly sub-maximum) above that.
    """
    adj = _to_adjacency_bits(adjacency)
    n = len(adj)
    if n == 0:
        return []
    if n > EXACT_LIMIT:
        return sorted(_degeneracy_greedy(adj, n))
    all_v = (1 << n) - 1
    best = _expand(all_v, [], [], adj)
    return sorted(best)
