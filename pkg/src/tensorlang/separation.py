"""Equivalence relations induced by expression sets and by WL labellings over
graph corpora, plus empirical checks of the inclusions between them."""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .expr import (
    Add, EdgePred, EqPred, Expr, LabelPred, One, Product, Scale, SumAgg, analyze, free_vars, is_guarded_fragment,
    sum_depth,
)
from .graph import Graph
from .logic import DistinguisherCache, LogicError, synthesize_cr_distinguisher
from .parser import render
from .tables import TableEvaluator
from .wl import color_refinement, graph_label, vertex_label, wl_k


class SeparationError(ValueError):
    pass


FLOAT_TOLERANCE = 1e-9
COEFFICIENTS = tuple(Fraction(c) for c in ("-2", "-1", "-1/2", "1/2", "1", "2"))
THEOREMS = ("thm2", "thm3", "thm4_1", "thm4_2")


@dataclass
class Partition:
    """Class id per item; items are (graph index, vertex tuple) in corpus order."""

    items: list
    classes: list
    arity: int

    def __post_init__(self):
        if len(self.items) != len(self.classes):
            raise SeparationError("items and classes differ in length")

    @classmethod
    def from_keys(cls, items: list, keys: Sequence, arity: int) -> "Partition":
        ids: dict = {}
        return cls(list(items), [ids.setdefault(k, len(ids)) for k in keys], arity)

    @property
    def class_count(self) -> int:
        return len(set(self.classes))

    def blocks(self) -> list[list[int]]:
        """Item indices per class, in class id order."""
        out: dict = {}
        for i, c in enumerate(self.classes):
            out.setdefault(c, []).append(i)
        return [out[c] for c in sorted(out)]

    def to_json(self) -> dict:
        return {"arity": self.arity, "items": [[g, list(t)] for g, t in self.items], "classes": self.classes}


def _check_corpus(corpus: Sequence[Graph]):
    if not corpus:
        raise SeparationError("empty corpus")
    sizes = {G.n for G in corpus}
    if len(sizes) > 1:
        raise SeparationError(f"corpus graphs must have equal size, found sizes {sorted(sizes)}")


def _items(corpus: Sequence[Graph], s: int) -> list:
    if s not in (0, 1):
        raise SeparationError("item arity must be 0 or 1")
    if s == 0:
        return [(g, ()) for g in range(len(corpus))]
    return [(g, (v,)) for g, G in enumerate(corpus) for v in range(G.n)]


class _Values:
    """Per-graph table evaluators shared by every expression of a run."""

    def __init__(self, corpus: Sequence[Graph], mode: str = "exact", threads: int = 1):
        self.corpus = list(corpus)
        self.mode = mode
        self.threads = max(1, threads)
        self._tev = [TableEvaluator(G, mode) for G in self.corpus]

    def value(self, e: Expr, item) -> object:
        g, tup = item
        return self._tev[g].raw(e, tup)

    def column(self, e: Expr, items) -> list:
        if self.threads == 1:
            return [self.value(e, it) for it in items]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(lambda it: self.value(e, it), items))

    def key(self, x):
        if self.mode == "exact":
            return x
        return round(float(x) / FLOAT_TOLERANCE)


def _check_arity(exprs: Sequence[Expr], s: int):
    for e in exprs:
        fv = free_vars(e)
        if not fv <= set(range(1, s + 1)):
            raise SeparationError(f"expression has free variables {sorted(fv)} but items have arity {s}")


def induced_partition(exprs: Sequence[Expr], corpus: Sequence[Graph], s: int = 1, mode: str = "exact",
                      threads: int = 1) -> Partition:
    """Items share a class iff every expression takes the same value on them.

    Float mode compares values on a grid of width 1e-9.
    """
    _check_corpus(corpus)
    _check_arity(exprs, s)
    items = _items(corpus, s)
    vals = _Values(corpus, mode, threads)
    cols = [[vals.key(x) for x in vals.column(e, items)] for e in exprs]
    keys = [tuple(col[i] for col in cols) for i in range(len(items))]
    return Partition.from_keys(items, keys, s)


def _traces(corpus, algo: str, k: int, t: int):
    if algo == "cr":
        return [color_refinement(G, t) for G in corpus]
    if algo in ("wl", "wl_k"):
        return [wl_k(G, k, t) for G in corpus]
    raise SeparationError(f"unknown algorithm {algo!r}; expected cr or wl_k")


def wl_partition(corpus: Sequence[Graph], algo: str = "cr", k: int = 1, t: int = 1, s: int = 1) -> Partition:
    _check_corpus(corpus)
    items = _items(corpus, s)
    traces = _traces(corpus, algo, k, t)
    if s == 0:
        keys = [graph_label(traces[g], t) for g, _ in items]
    else:
        keys = [vertex_label(traces[g], tup[0], t) for g, tup in items]
    return Partition.from_keys(items, keys, s)


def refines(P: Partition, Q: Partition) -> bool:
    """True iff every class of P lies inside a class of Q."""
    if P.items != Q.items:
        raise SeparationError("partitions are over different item sets")
    image: dict = {}
    for p, q in zip(P.classes, Q.classes):
        if image.setdefault(p, q) != q:
            return False
    return True


# ---------------------------------------------------------------- random expressions

class _Sampler:
    def __init__(self, rng: random.Random, k: int, n_labels: int, budget: int):
        self.rng = rng
        self.k = k
        self.n_labels = n_labels
        self.budget = budget

    def coef(self) -> Fraction:
        return self.rng.choice(COEFFICIENTS)

    def tl_leaf(self, scope: list) -> Expr:
        rng = self.rng
        if not scope:
            return One()
        options = ["eq", "neq", "edge", "one"] + (["label"] * 2 if self.n_labels else [])
        kind = rng.choice(options)
        i, j = rng.choice(scope), rng.choice(scope)
        if kind == "eq":
            return EqPred(i, j)
        if kind == "neq":
            return EqPred(i, j, "neq")
        if kind == "edge":
            if i == j and len(scope) > 1:
                j = rng.choice([v for v in scope if v != i])
            return EdgePred(i, j)
        if kind == "label":
            return LabelPred(rng.randint(1, self.n_labels), i)
        return One()

    def tl(self, d: int, scope: list) -> Expr:
        rng = self.rng
        self.budget -= 1
        if self.budget <= 0 or (rng.random() < 0.25 and d == 0):
            return self.tl_leaf(scope)
        ops = ["prod", "add", "scale", "leaf"] + (["sum"] * 3 if d > 0 else [])
        op = rng.choice(ops)
        if op == "leaf":
            return self.tl_leaf(scope)
        if op == "sum":
            v = rng.randint(1, self.k)
            return SumAgg(v, self.tl(d - 1, sorted(set(scope) | {v})))
        if op == "scale":
            return Scale(self.coef(), self.tl(d, scope))
        a, b = self.tl(d, scope), self.tl(d, scope)
        return Product(a, b) if op == "prod" else Add(a, b)

    def gf_leaf(self, x: int) -> Expr:
        options = ["eq", "one"] + (["label"] * 2 if self.n_labels else [])
        kind = self.rng.choice(options)
        if kind == "label":
            return LabelPred(self.rng.randint(1, self.n_labels), x)
        return EqPred(x, x) if kind == "eq" else One()

    def gf(self, d: int, x: int) -> Expr:
        rng = self.rng
        self.budget -= 1
        if self.budget <= 0 or (rng.random() < 0.25 and d == 0):
            return self.gf_leaf(x)
        ops = ["prod", "add", "scale", "leaf"] + (["sum"] * 3 if d > 0 else [])
        op = rng.choice(ops)
        if op == "leaf":
            return self.gf_leaf(x)
        if op == "sum":
            y = 3 - x
            return SumAgg(y, Product(EdgePred(x, y), self.gf(d - 1, y)))
        if op == "scale":
            return Scale(self.coef(), self.gf(d, x))
        a, b = self.gf(d, x), self.gf(d, x)
        return Product(a, b) if op == "prod" else Add(a, b)


def random_expr(k_vars: int, depth: int, guarded: bool, seed: int, n_labels: int = 0, free: int = 1,
                budget: int = 14, max_tries: int = 10_000) -> Expr:
    """Seeded function-free expression with at most ``k_vars`` variables and summation depth at most ``depth``.

    ``free`` is 1 (free variable x1, padded with [x1 = x1] when unused) or 0
    (closed). Samples are redrawn until the guarded flag equals ``guarded``.
    """
    if guarded and k_vars != 2:
        raise SeparationError("guarded sampling requires k_vars = 2")
    if guarded and free != 1:
        raise SeparationError("guarded expressions have one free variable")
    if k_vars < 1 or depth < 0 or free not in (0, 1):
        raise SeparationError("k_vars >= 1, depth >= 0 and free in {0, 1} are required")
    rng = random.Random(seed)
    for _ in range(max_tries):
        sampler = _Sampler(rng, k_vars, n_labels, budget)
        if guarded:
            e = sampler.gf(depth, 1)
        elif free == 1:
            e = sampler.tl(depth, [1])
        else:
            e = sampler.tl(depth, [])
        if free == 1 and 1 not in free_vars(e):
            e = Product(e, EqPred(1, 1))
        rep = analyze(e)
        if rep.var_count <= k_vars and rep.sum_depth <= depth and rep.guarded == guarded and \
                rep.free_vars == frozenset(range(1, free + 1)):
            return e
    raise SeparationError(f"no sample matched the requested fragment after {max_tries} tries")


# ---------------------------------------------------------------- theorem checks

@dataclass
class CheckReport:
    theorem: str
    params: dict
    items: int
    expressions: int
    pairs_checked: int = 0
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "theorem": self.theorem,
            "params": self.params,
            "items": self.items,
            "expressions": self.expressions,
            "pairs_checked": self.pairs_checked,
            "violations": self.violations,
            "notes": self.notes,
            "ok": self.ok,
        }


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    q = Fraction(int(x.numerator), int(x.denominator)) if hasattr(x, "numerator") else Fraction(x)
    return str(q)


def _item_json(item) -> list:
    return [item[0], list(item[1])]


def _upper_check(report: CheckReport, P: Partition, exprs: Sequence[Expr], vals: _Values, kind: str):
    """Every expression must be constant on every class of P."""
    blocks = [b for b in P.blocks() if len(b) > 1]
    pairs = sum(len(b) - 1 for b in blocks)
    for e in exprs:
        report.pairs_checked += pairs
        for b in blocks:
            first = P.items[b[0]]
            v0 = vals.value(e, first)
            for i in b[1:]:
                v = vals.value(e, P.items[i])
                if v != v0:
                    report.violations.append({
                        "kind": kind, "expr": render(e), "items": [_item_json(first), _item_json(P.items[i])],
                        "values": [_fmt(v0), _fmt(v)],
                    })
                    break


def _lower_check_cr(report: CheckReport, corpus, P: Partition, t: int, vals: _Values, cache: DistinguisherCache):
    """Each pair in different CR classes must be separated by its synthesized expression."""
    items = P.items
    count = 0
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            if P.classes[a] == P.classes[b]:
                continue
            (g, (v,)), (h, (w,)) = items[a], items[b]
            count += 1
            try:
                e = synthesize_cr_distinguisher(corpus[g], v, corpus[h], w, t, cache)
            except LogicError as exc:
                report.violations.append({"kind": "lower", "items": [_item_json(items[a]), _item_json(items[b])],
                                          "error": str(exc)})
                continue
            if e is None:
                report.violations.append({"kind": "lower", "items": [_item_json(items[a]), _item_json(items[b])],
                                          "error": "no distinguisher for a separated pair"})
                continue
            x, y = vals.value(e, items[a]), vals.value(e, items[b])
            fragment_ok = is_guarded_fragment(e) and sum_depth(e) <= t
            if x == y or not fragment_ok:
                report.violations.append({
                    "kind": "lower", "expr_size": len(render(e)), "items": [_item_json(items[a]), _item_json(items[b])],
                    "values": [_fmt(x), _fmt(y)], "guarded_depth_ok": fragment_ok,
                })
    report.pairs_checked += count


def check_theorem(tag: str, corpus: Sequence[Graph], k: int = 1, t: int = 1, n_exprs: int = 100, seed: int = 0,
                  lower: bool = True, threads: int = 1) -> CheckReport:
    """Check the falsifiable directions of one separation theorem on a corpus (exact arithmetic).

    thm2: vwl_k^(t)-equal vertices agree on random TL_{k+1}^(t) expressions.
    thm3: cr^(t)-equal vertices agree on random guarded depth-t expressions; with
      ``lower`` every cr^(t)-separated pair is split by its synthesized distinguisher.
    thm4_1: graph-level cr^(t) and wl_1^(t) partitions coincide, and random closed
      TL_2^(t+1) expressions agree on cr^(t)-equal graphs.
    thm4_2: random closed TL_{k+1}^(t+1) expressions agree on wl_k^(t)-equal graphs.
    """
    if tag not in THEOREMS:
        raise SeparationError(f"unknown theorem {tag!r}; expected one of {', '.join(THEOREMS)}")
    _check_corpus(corpus)
    corpus = list(corpus)
    ell = corpus[0].ell
    vals = _Values(corpus, "exact", threads)
    params = {"k": k, "t": t, "n_exprs": n_exprs, "seed": seed, "corpus_size": len(corpus), "n": corpus[0].n}

    def exprs(k_vars, depth, guarded, free):
        return [random_expr(k_vars, depth, guarded, seed * 1_000_003 + i, ell, free) for i in range(n_exprs)]

    if tag == "thm2":
        P = wl_partition(corpus, "wl", k, t, 1)
        rep = CheckReport(tag, params, len(P.items), n_exprs)
        _upper_check(rep, P, exprs(k + 1, t, False, 1), vals, "upper")
    elif tag == "thm3":
        P = wl_partition(corpus, "cr", 1, t, 1)
        rep = CheckReport(tag, params, len(P.items), n_exprs)
        _upper_check(rep, P, exprs(2, t, True, 1), vals, "upper")
        if lower:
            _lower_check_cr(rep, corpus, P, t, vals, DistinguisherCache())
        else:
            rep.notes.append("lower-bound direction skipped")
    elif tag == "thm4_1":
        P = wl_partition(corpus, "cr", 1, t, 0)
        Q = wl_partition(corpus, "wl", 1, t, 0)
        rep = CheckReport(tag, params, len(P.items), n_exprs)
        rep.pairs_checked += len(P.items)
        if P.classes != Q.classes:
            rep.violations.append({"kind": "partition", "cr": P.classes, "wl1": Q.classes})
        _upper_check(rep, P, exprs(2, t + 1, False, 0), vals, "upper")
    else:
        P = wl_partition(corpus, "wl", k, t, 0)
        rep = CheckReport(tag, params, len(P.items), n_exprs)
        rep.notes.append("only the inclusion rho0(gwl_k^(t)) <= rho0(TL_{k+1}^(t+1)) is checked")
        _upper_check(rep, P, exprs(k + 1, t + 1, False, 0), vals, "upper")
    return rep
