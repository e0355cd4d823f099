"""Vertex-labelled simple graphs, atomic types and graph corpora."""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Label = Fraction | float


class GraphError(ValueError):
    """Malformed graph input. ``field`` names the offending field."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


def _as_label(x) -> Label:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise GraphError(f"label entry {x!r} is not a number", "labels")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if x != x or x in (float("inf"), float("-inf")):
            raise GraphError(f"label entry {x!r} is not finite", "labels")
        return x
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise GraphError(f"label entry {x!r} is not a rational", "labels") from exc
    raise GraphError(f"label entry {x!r} is not a number", "labels")


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1`` with label vectors of length ``ell``."""

    n: int
    edges: frozenset = field(default_factory=frozenset)
    labels: tuple = ()

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise GraphError(f"vertex count must be a non-negative integer, got {self.n!r}", "n")
        norm = set()
        for e in self.edges:
            u, v = tuple(e) if len(e) == 2 else (None, None)
            if u is None:
                raise GraphError(f"edge {e!r} is not a pair", "edges")
            if not (isinstance(u, int) and isinstance(v, int)):
                raise GraphError(f"edge {e!r} has non-integer endpoints", "edges")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}", "edges")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge {e!r} has an endpoint outside 0..{self.n - 1}", "edges")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))
        labels = self.labels
        if not labels:
            labels = tuple(() for _ in range(self.n))
        if len(labels) != self.n:
            raise GraphError(f"expected {self.n} label vectors, got {len(labels)}", "labels")
        labels = tuple(tuple(_as_label(x) for x in row) for row in labels)
        if len({len(row) for row in labels}) > 1:
            raise GraphError("label vectors have different lengths", "labels")
        object.__setattr__(self, "labels", labels)
        adj = [[] for _ in range(self.n)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    @property
    def ell(self) -> int:
        return len(self.labels[0]) if self.n else 0

    def neighbors(self, v: int) -> tuple:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        return a

    def label_matrix(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.labels], dtype=float).reshape(self.n, self.ell)

    def permute(self, perm: Sequence[int]) -> "Graph":
        """The graph with vertex ``v`` renamed to ``perm[v]``."""
        labels = [None] * self.n
        for v in range(self.n):
            labels[perm[v]] = self.labels[v]
        return Graph(self.n, frozenset((perm[u], perm[v]) for u, v in self.edges), tuple(labels))

    def with_labels(self, labels) -> "Graph":
        return Graph(self.n, self.edges, tuple(tuple(r) for r in labels))

    def to_json(self) -> dict:
        d = {"n": self.n, "edges": [list(e) for e in sorted(self.edges)]}
        if self.ell:
            d["labels"] = [[_label_to_json(x) for x in row] for row in self.labels]
        return d

    def __repr__(self):
        return f"Graph(n={self.n}, edges={sorted(self.edges)}, ell={self.ell})"


def _label_to_json(x: Label):
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return x.numerator
        return str(x)
    return x


def disjoint_union(*graphs: Graph) -> Graph:
    edges, labels, off = [], [], 0
    for g in graphs:
        edges += [(u + off, v + off) for u, v in g.edges]
        labels += list(g.labels)
        off += g.n
    return Graph(off, frozenset(edges), tuple(labels))


def path_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, frozenset((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> Graph:
    return Graph(n, frozenset(itertools.combinations(range(n), 2)))


def atomic_type(G: Graph, tup: Sequence[int]) -> tuple:
    """Equality bits, adjacency bits (pairs i<j in lexicographic order), then the label vectors."""
    for v in tup:
        if not (isinstance(v, (int, np.integer)) and 0 <= v < G.n):
            raise GraphError(f"tuple entry {v!r} is not a vertex of the graph", "tuple")
    pairs = list(itertools.combinations(range(len(tup)), 2))
    eq = [1 if tup[i] == tup[j] else 0 for i, j in pairs]
    adj = [1 if G.has_edge(tup[i], tup[j]) else 0 for i, j in pairs]
    labs = [x for v in tup for x in G.labels[v]]
    return tuple(eq + adj + labs)


# ---------------------------------------------------------------- loading

def graph_from_json(obj, where: str = "graph") -> Graph:
    if not isinstance(obj, dict):
        raise GraphError(f"{where}: expected a JSON object", "graph")
    if "n" not in obj:
        raise GraphError(f"{where}: missing field 'n'", "n")
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise GraphError(f"{where}: field 'n' must be a non-negative integer", "n")
    raw_edges = obj.get("edges", [])
    if not isinstance(raw_edges, list):
        raise GraphError(f"{where}: field 'edges' must be a list", "edges")
    edges = []
    for e in raw_edges:
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in e)):
            raise GraphError(f"{where}: edge {e!r} must be a pair of integers", "edges")
        edges.append(tuple(e))
    labels = obj.get("labels")
    if labels is None:
        labels = ()
    elif not (isinstance(labels, list) and all(isinstance(r, list) for r in labels)):
        raise GraphError(f"{where}: field 'labels' must be a list of lists", "labels")
    try:
        return Graph(n, frozenset(edges), tuple(tuple(r) for r in labels))
    except GraphError as exc:
        raise GraphError(f"{where}: {exc}", exc.field) from None


def _loads(text: str):
    # decimals become exact rationals
    return json.loads(text, parse_float=Fraction)


def load_graph(path) -> Graph:
    text = Path(path).read_text()
    try:
        obj = _loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: malformed JSON ({exc})", "file") from None
    return graph_from_json(obj, str(path))


def load_corpus(path) -> list[Graph]:
    graphs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = _loads(line)
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}:{lineno}: malformed JSON ({exc})", "file") from None
        graphs.append(graph_from_json(obj, f"{path}:{lineno}"))
    return graphs


def dump_corpus(graphs: Iterable[Graph]) -> str:
    return "".join(json.dumps(g.to_json(), separators=(",", ":")) + "\n" for g in graphs)


# ---------------------------------------------------------------- corpora

_PERM_CACHE: dict = {}


def _edge_perm_table(n: int) -> np.ndarray:
    """For every permutation, where each edge slot lands after relabelling."""
    if n not in _PERM_CACHE:
        pairs = list(itertools.combinations(range(n), 2))
        index = {p: i for i, p in enumerate(pairs)}
        rows = []
        for perm in itertools.permutations(range(n)):
            rows.append([index[tuple(sorted((perm[u], perm[v])))] for u, v in pairs])
        _PERM_CACHE[n] = np.array(rows, dtype=np.int64).reshape(-1, len(pairs))
    return _PERM_CACHE[n]


def canonical_code(G: Graph) -> int:
    """Smallest edge bitmask over all n! relabellings (unlabelled graphs only)."""
    n = G.n
    if n < 2:
        return 0
    pairs = list(itertools.combinations(range(n), 2))
    bits = np.array([1 if p in G.edges else 0 for p in pairs], dtype=np.int64)
    table = _edge_perm_table(n)
    # bit at slot i moves to slot table[:, i]
    weights = np.left_shift(np.int64(1), table)
    return int((weights * bits).sum(axis=1).min())


def _from_code(n: int, code: int) -> Graph:
    pairs = list(itertools.combinations(range(n), 2))
    return Graph(n, frozenset(p for i, p in enumerate(pairs) if code >> i & 1))


_EXHAUSTIVE: dict = {}


def exhaustive_graphs(n: int) -> list[Graph]:
    """One representative per isomorphism class of unlabelled graphs on exactly n vertices."""
    if n > 7:
        raise GraphError("exhaustive enumeration is limited to n <= 7", "n_max")
    if n in _EXHAUSTIVE:
        return list(_EXHAUSTIVE[n])
    if n <= 1:
        reps = [Graph(n)]
    else:
        # every n-vertex graph is a smaller representative plus one new vertex
        codes = set()
        for base in exhaustive_graphs(n - 1):
            for mask in range(1 << (n - 1)):
                extra = [(u, n - 1) for u in range(n - 1) if mask >> u & 1]
                codes.add(canonical_code(Graph(n, base.edges | frozenset(extra))))
        reps = [_from_code(n, c) for c in sorted(codes)]
    _EXHAUSTIVE[n] = reps
    return list(reps)


def random_graph(n: int, rng: random.Random, p: float = 0.5) -> Graph:
    return Graph(n, frozenset(e for e in itertools.combinations(range(n), 2) if rng.random() < p))


def generate_corpus(n_max: int, mode: str = "exhaustive", count: int = 0, seed: int = 0) -> list[Graph]:
    """Exhaustive: all classes for every n <= n_max. Random: ``count`` G(n, 1/2) graphs per n."""
    if n_max < 0:
        raise GraphError("n_max must be non-negative", "n_max")
    if mode == "exhaustive":
        if n_max > 7:
            raise GraphError("exhaustive mode requires n_max <= 7", "n_max")
        return [g for n in range(n_max + 1) for g in exhaustive_graphs(n)]
    if mode == "random":
        rng = random.Random(seed)
        return [random_graph(n, rng) for n in range(1, n_max + 1) for _ in range(count)]
    raise GraphError(f"unknown corpus mode {mode!r}", "mode")


def same_size(corpus: Sequence[Graph]) -> bool:
    return len({g.n for g in corpus}) <= 1
