"""Colour refinement and folklore k-WL with globally interned colour labels.

Labels are small integers handed out by a process-wide intern table keyed by
canonical byte encodings, so labels from different graphs are comparable
within one process.
"""

from __future__ import annotations

import hashlib
import itertools
import struct
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .graph import Graph, atomic_type


class WLError(ValueError):
    pass


class InternTable:
    def __init__(self):
        self._ids: dict[bytes, int] = {}
        self._codes: list[bytes] = []
        self._lock = threading.Lock()

    def intern(self, code: bytes) -> int:
        i = self._ids.get(code)
        if i is not None:
            return i
        with self._lock:
            i = self._ids.get(code)
            if i is None:
                i = len(self._codes)
                self._codes.append(code)
                self._ids[code] = i
            return i

    def encoding(self, label: int) -> bytes:
        return self._codes[label]

    def __len__(self):
        return len(self._codes)


INTERN = InternTable()


def _encode_value(x) -> bytes:
    if isinstance(x, float):
        return b"f" + struct.pack(">d", x)
    q = Fraction(x)
    return b"q" + f"{q.numerator}/{q.denominator}".encode() + b";"


def encode_vector(tag: bytes, values: Sequence) -> bytes:
    return tag + b"<" + b"".join(_encode_value(v) for v in values) + b">"


def encode_ids(tag: bytes, ids: Sequence[int]) -> bytes:
    return tag + struct.pack(">I", len(ids)) + b"".join(struct.pack(">Q", i) for i in ids)


def encode_multiset(tag: bytes, items: Sequence[tuple]) -> bytes:
    """Length-prefixed sorted list of id tuples."""
    items = sorted(items)
    return tag + struct.pack(">I", len(items)) + b"".join(
        struct.pack(">H", len(t)) + b"".join(struct.pack(">Q", i) for i in t) for t in items
    )


def digest(label: int) -> str:
    return hashlib.sha256(INTERN.encoding(label)).hexdigest()[:16]


def _partition_of(labels: Sequence[int]) -> tuple:
    """Canonical shape of the partition induced by a label sequence."""
    first: dict = {}
    return tuple(first.setdefault(c, len(first)) for c in labels)


@dataclass
class RefinementTrace:
    """Per-round colours of every item (vertex, or k-tuple in lexicographic order)."""

    graph: Graph
    algo: str  # "cr" or "wl"
    k: int
    items: list
    rounds: list = field(default_factory=list)  # rounds[t][item_index] -> label
    stable_round: int | None = None

    def labels(self, t: int) -> list:
        if not (0 <= t < len(self.rounds)):
            raise WLError(f"round {t} is outside the trace (rounds 0..{len(self.rounds) - 1})")
        return self.rounds[t]

    def partition(self, t: int) -> tuple:
        return _partition_of(self.labels(t))

    def class_count(self, t: int) -> int:
        return len(set(self.labels(t)))

    @property
    def t_max(self) -> int:
        return len(self.rounds) - 1


def _cr_initial(G: Graph) -> list:
    if G.ell == 0:
        return [INTERN.intern(b"cr0")] * G.n
    return [INTERN.intern(encode_vector(b"cr0", G.labels[v])) for v in range(G.n)]


def color_refinement(G: Graph, t_max: int | None = None) -> RefinementTrace:
    """Rounds 0..t_max. With ``t_max=None`` refinement stops at the first stable round."""
    trace = RefinementTrace(G, "cr", 1, [(v,) for v in range(G.n)])
    cur = _cr_initial(G)
    trace.rounds.append(cur)
    limit = t_max if t_max is not None else G.n + 1
    t = 0
    while t < limit:
        # (own colour, sorted neighbour colours)
        nxt = [
            INTERN.intern(encode_ids(b"cr", [cur[v]] + sorted(cur[u] for u in G.neighbors(v))))
            for v in range(G.n)
        ]
        t += 1
        trace.rounds.append(nxt)
        if trace.stable_round is None and _partition_of(nxt) == _partition_of(cur):
            trace.stable_round = t
            if t_max is None:
                break
        cur = nxt
    return trace


MEMORY_CAP = 2_000_000


def wl_k(G: Graph, k: int, t_max: int | None = None, memory_cap: int = MEMORY_CAP) -> RefinementTrace:
    """Folklore k-WL on k-tuples (lexicographic order), rounds 0..t_max."""
    if k < 1:
        raise WLError("k must be at least 1")
    n = G.n
    if n ** k > memory_cap:
        raise WLError(f"{n}^{k} tuples exceed the memory cap of {memory_cap}")
    tuples = list(itertools.product(range(n), repeat=k))
    index = {t: i for i, t in enumerate(tuples)}
    tag0 = f"wl{k}.0".encode()
    trace = RefinementTrace(G, "wl", k, tuples)
    cur = [INTERN.intern(encode_vector(tag0, atomic_type(G, t))) for t in tuples]
    trace.rounds.append(cur)
    # the (k+1)-atomic type of v.u and the substituted tuples never change between rounds
    ext_tag = f"wl{k}.atp".encode()
    ext = []
    for t in tuples:
        row = []
        for u in range(n):
            a = INTERN.intern(encode_vector(ext_tag, atomic_type(G, t + (u,))))
            subs = tuple(index[t[:j] + (u,) + t[j + 1:]] for j in range(k))
            row.append((a, subs))
        ext.append(row)
    tag = f"wl{k}".encode()
    limit = t_max if t_max is not None else n ** k + 1
    t = 0
    while t < limit:
        nxt = []
        for i in range(len(tuples)):
            multiset = [(a,) + tuple(cur[s] for s in subs) for a, subs in ext[i]]
            nxt.append(INTERN.intern(encode_ids(tag, [cur[i]]) + encode_multiset(b"m", multiset)))
        t += 1
        trace.rounds.append(nxt)
        if trace.stable_round is None and _partition_of(nxt) == _partition_of(cur):
            trace.stable_round = t
            if t_max is None:
                break
        cur = nxt
    return trace


def graph_label(trace: RefinementTrace, t: int) -> int:
    tag = f"g.{trace.algo}{trace.k}".encode()
    return INTERN.intern(encode_multiset(tag, [(c,) for c in trace.labels(t)]))


def vertex_label(trace: RefinementTrace, v: int, t: int) -> int:
    labels = trace.labels(t)
    if not (0 <= v < trace.graph.n):
        raise WLError(f"vertex {v} is not in the graph")
    if trace.algo == "cr":
        return labels[v]
    n, k = trace.graph.n, trace.k
    # index of (v, ..., v) in lexicographic order
    idx = sum(v * n ** (k - 1 - j) for j in range(k))
    return labels[idx]


def tuple_label(trace: RefinementTrace, tup: Sequence[int], t: int) -> int:
    n = trace.graph.n
    idx = 0
    for v in tup:
        idx = idx * n + v
    return trace.labels(t)[idx]


def wl_report(trace: RefinementTrace) -> dict:
    return {
        "algo": "cr" if trace.algo == "cr" else f"wl{trace.k}",
        "rounds": [trace.class_count(t) for t in range(len(trace.rounds))],
        "stable_round": trace.stable_round,
        "graph_label": digest(graph_label(trace, trace.t_max)),
    }
