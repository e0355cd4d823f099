"""Counting logic: formulas, model checking, the translation into tensor-language
expressions via interpolation polynomials, and colour-refinement distinguishers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .expr import Add, EdgePred, EqPred, Expr, LabelPred, One, Product, Scale, SumAgg, product
from .graph import Graph
from .wl import color_refinement


class LogicError(ValueError):
    pass


# ---------------------------------------------------------------- formulas

class Formula:
    def __and__(self, other):
        return And(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True, eq=False)
class VarEq(Formula):
    i: int
    j: int


@dataclass(frozen=True, eq=False)
class Edge(Formula):
    i: int
    j: int


@dataclass(frozen=True, eq=False)
class Label(Formula):
    """Label entry s of x_i equals 1 (for 0/1 labels)."""

    s: int
    i: int


@dataclass(frozen=True, eq=False)
class LabelEq(Formula):
    """Label entry s of x_i equals r; ``values`` is the finite set of values that can occur."""

    s: int
    r: Fraction
    i: int
    values: tuple = ()


@dataclass(frozen=True, eq=False)
class Not(Formula):
    f: Formula


@dataclass(frozen=True, eq=False)
class And(Formula):
    f: Formula
    g: Formula


@dataclass(frozen=True, eq=False)
class CountExists(Formula):
    """At least m vertices for ``var`` satisfy f."""

    m: int
    var: int
    f: Formula


@dataclass(frozen=True, eq=False)
class CountExactly(Formula):
    """Exactly m vertices for ``var`` satisfy f."""

    m: int
    var: int
    f: Formula


def formula_free_vars(f: Formula) -> frozenset:
    if isinstance(f, (VarEq, Edge)):
        return frozenset((f.i, f.j))
    if isinstance(f, (Label, LabelEq)):
        return frozenset((f.i,))
    if isinstance(f, Not):
        return formula_free_vars(f.f)
    if isinstance(f, And):
        return formula_free_vars(f.f) | formula_free_vars(f.g)
    if isinstance(f, (CountExists, CountExactly)):
        return formula_free_vars(f.f) - {f.var}
    raise LogicError(f"unknown formula node {type(f).__name__}")


def quantifier_rank(f: Formula, _memo=None) -> int:
    memo = {} if _memo is None else _memo
    hit = memo.get(id(f))
    if hit is not None:
        return hit
    if isinstance(f, (VarEq, Edge, Label, LabelEq)):
        r = 0
    elif isinstance(f, Not):
        r = quantifier_rank(f.f, memo)
    elif isinstance(f, And):
        r = max(quantifier_rank(f.f, memo), quantifier_rank(f.g, memo))
    else:
        r = 1 + quantifier_rank(f.f, memo)
    memo[id(f)] = r
    return r


def eval_formula(f: Formula, G: Graph, nu: Mapping[int, int] | None = None) -> bool:
    env = dict(nu or {})
    missing = formula_free_vars(f) - env.keys()
    if missing:
        raise LogicError("unbound variable " + ", ".join(f"x{i}" for i in sorted(missing)))

    def ev(x) -> bool:
        if isinstance(x, VarEq):
            return env[x.i] == env[x.j]
        if isinstance(x, Edge):
            return G.has_edge(env[x.i], env[x.j])
        if isinstance(x, Label):
            return G.labels[env[x.i]][x.s - 1] == 1
        if isinstance(x, LabelEq):
            return G.labels[env[x.i]][x.s - 1] == x.r
        if isinstance(x, Not):
            return not ev(x.f)
        if isinstance(x, And):
            return ev(x.f) and ev(x.g)
        if isinstance(x, (CountExists, CountExactly)):
            had, saved = x.var in env, env.get(x.var)
            count = 0
            for v in range(G.n):
                env[x.var] = v
                count += ev(x.f)
            if had:
                env[x.var] = saved
            else:
                del env[x.var]
            return count >= x.m if isinstance(x, CountExists) else count == x.m
        raise LogicError(f"unknown formula node {type(x).__name__}")

    return ev(f)


def is_guarded_formula(f: Formula) -> bool:
    """Two-variable formula whose quantifiers all have the shape Q x_j (E(x_i, x_j) and phi(x_j))."""

    def ok(x) -> bool:
        if isinstance(x, VarEq):
            return x.i == x.j and x.i in (1, 2)
        if isinstance(x, (Label, LabelEq)):
            return x.i in (1, 2)
        if isinstance(x, Edge):
            return False
        if isinstance(x, Not):
            return ok(x.f)
        if isinstance(x, And):
            return ok(x.f) and ok(x.g) and len(formula_free_vars(x)) <= 1
        if isinstance(x, (CountExists, CountExactly)):
            body = x.f
            if x.var not in (1, 2):
                return False
            other = 3 - x.var
            if isinstance(body, Edge):
                return {body.i, body.j} == {1, 2}
            if isinstance(body, And) and isinstance(body.f, Edge) and {body.f.i, body.f.j} == {1, 2}:
                return ok(body.g) and formula_free_vars(body.g) <= {x.var} and other != x.var
            return False
        return False

    return ok(f) and len(formula_free_vars(f)) <= 1


# ---------------------------------------------------------------- polynomials

@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple  # a_0 .. a_d as Fractions, no trailing zeros (the zero polynomial is ())

    @staticmethod
    def of(coeffs: Sequence) -> "Polynomial":
        c = [Fraction(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        return Polynomial(tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = Fraction(0)
        for a in reversed(self.coeffs):
            acc = acc * x + a
        return acc


def _poly_mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def lagrange(values: Sequence) -> Polynomial:
    """Unique polynomial of degree <= n with p(j) = values[j] for j = 0..n."""
    n = len(values) - 1
    total = [Fraction(0)] * (n + 1)
    for j, yj in enumerate(values):
        if yj == 0:
            continue
        basis, denom = [Fraction(1)], Fraction(1)
        for i in range(n + 1):
            if i != j:
                basis = _poly_mul(basis, [Fraction(-i), Fraction(1)])
                denom *= j - i
        scale = Fraction(yj) / denom
        for d, c in enumerate(basis):
            total[d] += scale * c
    return Polynomial.of(total)


def interpolation_poly(m: int, n: int, kind: str = "at_least") -> Polynomial:
    if not 0 <= m <= n:
        raise LogicError(f"threshold {m} must lie in 0..{n}")
    if kind == "at_least":
        return lagrange([1 if x >= m else 0 for x in range(n + 1)])
    if kind == "exactly":
        return lagrange([1 if x == m else 0 for x in range(n + 1)])
    raise LogicError(f"unknown interpolation kind {kind!r}")


# ---------------------------------------------------------------- translation

def _poly_expr(p: Polynomial, S: Expr) -> Expr:
    terms = []
    power = None
    for j, a in enumerate(p.coeffs):
        if j > 0:
            power = S if power is None else Product(power, S)
        if a == 0:
            continue
        base = One() if j == 0 else power
        terms.append(base if a == 1 else Scale(a, base))
    if p.degree < 1:
        # keep the summation so the depth matches the quantifier rank
        terms.append(Scale(0, S))
    out = terms[0]
    for t in terms[1:]:
        out = Add(out, t)
    return out


def _label_test(f: LabelEq, label_values) -> Expr:
    values = f.values or tuple((label_values or {}).get(f.s, ()))
    r = Fraction(f.r)
    others = sorted({Fraction(v) for v in values} - {r})
    if not others:
        return EqPred(f.i, f.i)
    factors = []
    for v in others:
        diff = Add(LabelPred(f.s, f.i), Scale(-v, One())) if v != 0 else LabelPred(f.s, f.i)
        factors.append(Scale(1 / (r - v), diff))
    return product(factors)


def hat_translate(f: Formula, n: int, label_values: Mapping[int, Sequence] | None = None) -> Expr:
    """Expression that is 1 where ``f`` holds and 0 elsewhere, on every graph with n vertices."""
    memo: dict = {}

    def tr(x) -> Expr:
        hit = memo.get(id(x))
        if hit is not None and hit[0] is x:
            return hit[1]
        if isinstance(x, VarEq):
            out = EqPred(x.i, x.j)
        elif isinstance(x, Edge):
            out = EdgePred(x.i, x.j)
        elif isinstance(x, Label):
            out = LabelPred(x.s, x.i)
        elif isinstance(x, LabelEq):
            out = _label_test(x, label_values)
        elif isinstance(x, Not):
            out = Add(One(), Scale(-1, tr(x.f)))
        elif isinstance(x, And):
            out = Product(tr(x.f), tr(x.g))
        elif isinstance(x, (CountExists, CountExactly)):
            kind = "at_least" if isinstance(x, CountExists) else "exactly"
            S = SumAgg(x.var, tr(x.f))
            if x.m > n:
                # no graph with n vertices reaches the count
                out = Scale(0, S)
            else:
                out = _poly_expr(interpolation_poly(x.m, n, kind), S)
        else:
            raise LogicError(f"unknown formula node {type(x).__name__}")
        memo[id(x)] = (x, out)
        return out

    return tr(f)


# ---------------------------------------------------------------- distinguishers

def _label_values(graphs) -> dict:
    out: dict = {}
    for G in graphs:
        for row in G.labels:
            for s, v in enumerate(row, start=1):
                out.setdefault(s, set()).add(Fraction(v))
    return {s: tuple(sorted(v)) for s, v in out.items()}


class _ColorFormulas:
    """One formula per (round, colour, variable), built from refinement traces."""

    def __init__(self, values):
        self.values = values
        self.rep: dict = {}  # (round, colour) -> (trace, vertex)
        self.memo: dict = {}

    def add_trace(self, tr) -> None:
        for r, row in enumerate(tr.rounds):
            for v, c in enumerate(row):
                self.rep.setdefault((r, c), (tr, v))

    def formula(self, r: int, c: int, var: int) -> Formula:
        key = (r, c, var)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        tr, v = self.rep[(r, c)]
        G = tr.graph
        if r == 0:
            parts = [LabelEq(s, G.labels[v][s - 1], var, self.values.get(s, ()))
                     for s in range(1, G.ell + 1) if len(self.values.get(s, ())) > 1]
            f = parts[0] if parts else VarEq(var, var)
            for p in parts[1:]:
                f = And(f, p)
        else:
            other = 3 - var
            prev = tr.rounds[r - 1]
            counts: dict = {}
            for u in G.neighbors(v):
                counts[prev[u]] = counts.get(prev[u], 0) + 1
            f = And(self.formula(r - 1, prev[v], var), CountExactly(G.degree(v), other, Edge(var, other)))
            for d in sorted(counts):
                f = And(f, CountExactly(counts[d], other, And(Edge(var, other), self.formula(r - 1, d, other))))
        self.memo[key] = f
        return f


class DistinguisherCache:
    """Shares refinement traces, formulas and translated expressions across many synthesis calls.

    Graphs are keyed by identity, so reuse the same Graph objects between calls.
    """

    def __init__(self):
        self._traces: dict = {}
        self._builders: dict = {}
        self._exprs: dict = {}

    def trace(self, G: Graph, t: int):
        hit = self._traces.get(id(G))
        if hit is None or hit[0] is not G or hit[1].t_max < t:
            hit = (G, color_refinement(G, t))
            self._traces[id(G)] = hit
        return hit[1]

    def builder(self, values: dict) -> _ColorFormulas:
        key = tuple(sorted(values.items()))
        b = self._builders.get(key)
        if b is None:
            b = self._builders[key] = _ColorFormulas(values)
        return b

    def expression(self, key, make):
        e = self._exprs.get(key)
        if e is None:
            e = self._exprs[key] = make()
        return e


def cr_formula(G: Graph, v: int, H: Graph, r: int) -> Formula:
    """Formula in x1 that holds exactly at the vertices of G and H sharing v's round-r CR colour."""
    builder = _ColorFormulas(_label_values([G, H]))
    tg = color_refinement(G, r)
    builder.add_trace(tg)
    builder.add_trace(color_refinement(H, r))
    return builder.formula(r, tg.rounds[r][v], 1)


def synthesize_cr_distinguisher(G: Graph, v: int, H: Graph, w: int, t: int,
                                cache: DistinguisherCache | None = None) -> Expr | None:
    """Guarded expression of summation depth <= t that is 1 at (G, v) and 0 at (H, w),
    or None when t rounds of colour refinement do not tell them apart."""
    if G.n != H.n:
        raise LogicError(f"graphs must have the same size ({G.n} vs {H.n})")
    if G.ell != H.ell:
        raise LogicError(f"graphs must have the same label dimension ({G.ell} vs {H.ell})")
    cache = cache or DistinguisherCache()
    tg, th = cache.trace(G, t), cache.trace(H, t)
    first = next((r for r in range(t + 1) if tg.rounds[r][v] != th.rounds[r][w]), None)
    if first is None:
        return None
    values = _label_values([G, H])
    builder = cache.builder(values)
    builder.add_trace(tg)
    builder.add_trace(th)
    colour = tg.rounds[first][v]
    key = (first, colour, G.n, tuple(sorted(values.items())))
    return cache.expression(key, lambda: hat_translate(builder.formula(first, colour, 1), G.n, values))


__all__ = [
    "And", "CountExactly", "CountExists", "Edge", "Formula", "Label", "LabelEq", "LogicError", "Not", "Polynomial",
    "VarEq", "DistinguisherCache", "cr_formula", "eval_formula", "formula_free_vars", "hat_translate", "interpolation_poly",
    "is_guarded_formula", "lagrange", "quantifier_rank", "synthesize_cr_distinguisher",
]
