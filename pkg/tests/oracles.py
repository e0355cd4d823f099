"""Brute-force reference computations used only by the tests.

Nothing here imports the package's evaluation, refinement or rewriting code.
"""

from __future__ import annotations

import itertools
from collections import Counter
from fractions import Fraction

import networkx as nx


def to_nx(G) -> nx.Graph:
    H = nx.Graph()
    H.add_nodes_from(range(G.n))
    H.add_edges_from(G.edges)
    return H


def isomorphism_classes(n: int) -> int:
    """Number of simple graphs on n vertices up to isomorphism, by pairwise networkx checks."""
    pairs = list(itertools.combinations(range(n), 2))
    reps: list = []
    for mask in range(1 << len(pairs)):
        H = nx.Graph()
        H.add_nodes_from(range(n))
        H.add_edges_from(p for i, p in enumerate(pairs) if mask >> i & 1)
        if not any(nx.is_isomorphic(H, R) for R in reps):
            reps.append(H)
    return len(reps)


def adjacency(G) -> list:
    A = [[0] * G.n for _ in range(G.n)]
    for u, v in G.edges:
        A[u][v] = A[v][u] = 1
    return A


def walks2(G, v: int) -> int:
    """Number of (x2, x3) with v~x2~x3."""
    A = adjacency(G)
    return sum(A[v][a] * A[a][b] for a in range(G.n) for b in range(G.n))


def triangle_count(G) -> int:
    """Ordered triples (a, b, c) that are pairwise adjacent."""
    A = adjacency(G)
    return sum(A[a][b] * A[b][c] * A[a][c] for a, b, c in itertools.product(range(G.n), repeat=3))


def hom_count(pattern_n: int, pattern_edges, G, root: int, v: int) -> int:
    A = adjacency(G)
    others = [u for u in range(pattern_n) if u != root]
    total = 0
    for images in itertools.product(range(G.n), repeat=len(others)):
        f = dict(zip(others, images))
        f[root] = v
        total += all(A[f[a]][f[b]] for a, b in pattern_edges)
    return total


def cr_colours(G, t: int) -> list:
    """Colour refinement with nested tuples as colours (comparable across graphs)."""
    col = [("init", tuple(G.labels[v])) for v in range(G.n)]
    nbrs = [[u for u in range(G.n) if (min(u, v), max(u, v)) in G.edges] for v in range(G.n)]
    for _ in range(t):
        col = [(col[v], tuple(sorted(map(repr, (col[u] for u in nbrs[v]))))) for v in range(G.n)]
    return [repr(c) for c in col]


def partition_shape(keys) -> tuple:
    first: dict = {}
    return tuple(first.setdefault(k, len(first)) for k in keys)


def treewidth_brute(vertices, edges, keep=()) -> int:
    """Minimum over elimination orders of the bound vertices of max neighbourhood size,
    with ``keep`` vertices never eliminated; a bag always contains the eliminated vertex."""
    vertices = list(vertices)
    bound = [v for v in vertices if v not in keep]
    best = None
    for order in itertools.permutations(bound):
        adj = {v: set() for v in vertices}
        for a, b in edges:
            if a != b:
                adj[a].add(b)
                adj[b].add(a)
        width = len(keep) - 1 if keep else 0
        alive = set(vertices)
        for v in order:
            nb = adj[v] & alive
            width = max(width, len(nb))
            for a in nb:
                adj[a] |= nb - {a}
            alive.discard(v)
        best = width if best is None else min(best, width)
    return best if best is not None else max(len(keep) - 1, 0)


def count_at_least(m: int, x: int) -> int:
    return 1 if x >= m else 0


def lagrange_value(nodes, values, x) -> Fraction:
    """Direct Lagrange evaluation at x."""
    total = Fraction(0)
    for i, xi in enumerate(nodes):
        term = Fraction(values[i])
        for j, xj in enumerate(nodes):
            if j != i:
                term *= Fraction(x - xj, xi - xj)
        total += term
    return total


def multiset(xs) -> Counter:
    return Counter(xs)
