"""Conjunctive normal forms, variable hypergraphs, elimination orders and the
variable-minimizing rewrite.

Inside a normal form, free variables keep their expression index and bound
variables get ids from ``BOUND_BASE`` upwards, numbered so that integer order
follows the original variable names (this is what lexicographic tie-breaking
refers to).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .expr import (
    Add, Apply, EdgePred, EqPred, Expr, GuardedAgg, LabelPred, One, Product, Scale, SumAgg, UncondAgg,
    add_all, free_vars, product, substitute, variables,
)

BOUND_BASE = 1_000_000
EXHAUSTIVE_LIMIT = 10


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    """One factor of a conjunct.

    kind is ``E`` (edge), ``P`` (label ``s``), ``Eq`` (equality of two
    variables), ``Unit`` (constant one, keeps a variable in scope) or ``R``
    (an opaque subexpression whose free variables ``params`` are bound to
    ``vars`` position by position).
    """

    kind: str
    vars: tuple
    s: int = 0
    payload: Expr | None = None
    params: tuple = ()

    def rename(self, m) -> "Atom":
        return Atom(self.kind, tuple(m.get(v, v) for v in self.vars), self.s, self.payload, self.params)

    def to_expr(self, name) -> Expr:
        if self.kind == "E":
            return EdgePred(name(self.vars[0]), name(self.vars[1]))
        if self.kind == "P":
            return LabelPred(self.s, name(self.vars[0]))
        if self.kind == "Eq":
            return EqPred(name(self.vars[0]), name(self.vars[1]))
        if self.kind == "Unit":
            return EqPred(name(self.vars[0]), name(self.vars[0]))
        mapping = tuple((p, name(v)) for p, v in zip(self.params, self.vars))
        key = (id(self.payload), mapping)
        hit = _RENAMED.get(key)
        if hit is not None and hit[0] is self.payload:
            return hit[1]
        out = substitute(self.payload, dict(mapping))
        if len(_RENAMED) > 50_000:
            _RENAMED.clear()
        _RENAMED[key] = (self.payload, out)
        return out


_RENAMED: dict = {}


@dataclass(frozen=True)
class ConjunctiveExpr:
    free_vars: frozenset
    bound_vars: tuple
    atoms: tuple
    coef: Fraction = Fraction(1)

    def hypergraph(self) -> "Hypergraph":
        verts = sorted(set(self.free_vars) | set(self.bound_vars))
        return Hypergraph(tuple(verts), tuple(frozenset(a.vars) for a in self.atoms), frozenset(self.free_vars))

    def to_expr(self) -> Expr:
        """Plain form: the bound variables summed outermost, fresh indices above the free ones."""
        top = max(self.free_vars, default=0)
        names = {b: top + 1 + k for k, b in enumerate(self.bound_vars)}
        name = lambda v: names.get(v, v)
        body = product(a.to_expr(name) for a in self.atoms)
        for b in reversed(self.bound_vars):
            body = SumAgg(names[b], body)
        return body if self.coef == 1 else Scale(self.coef, body)


@dataclass
class NormalForm:
    terms: list  # list of (coef, ConjunctiveExpr)
    free_vars: frozenset

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def to_expr(self) -> Expr:
        parts = [c.to_expr() for _, c in self.terms]
        return add_all(parts) if parts else _zero(self.free_vars)


def _zero(free) -> Expr:
    return Scale(0, product(EqPred(i, i) for i in sorted(free)))


# ---------------------------------------------------------------- normalization

@dataclass
class _Term:
    coef: Fraction
    bound: tuple
    atoms: tuple


class _Normalizer:
    def __init__(self, opaque_aggs: bool, rewrite_payloads: bool):
        self.opaque_aggs = opaque_aggs
        self.rewrite_payloads = rewrite_payloads
        self.counter = itertools.count()
        self.origin: dict = {}

    def fresh(self, orig: int) -> int:
        b = BOUND_BASE * 10 + next(self.counter)
        self.origin[b] = orig
        return b

    def terms(self, x, env) -> list:
        m = lambda i: env.get(i, i)
        if isinstance(x, One):
            return [_Term(Fraction(1), (), ())]
        if isinstance(x, EqPred):
            a, b = m(x.i), m(x.j)
            if a == b:
                return [_Term(Fraction(1), (), (Atom("Unit", (a,)),))] if x.op == "eq" else []
            eq = Atom("Eq", (a, b))
            if x.op == "eq":
                return [_Term(Fraction(1), (), (eq,))]
            return [_Term(Fraction(1), (), (Atom("Unit", (a,)), Atom("Unit", (b,)))), _Term(Fraction(-1), (), (eq,))]
        if isinstance(x, EdgePred):
            a, b = m(x.i), m(x.j)
            return [] if a == b else [_Term(Fraction(1), (), (Atom("E", (a, b)),))]
        if isinstance(x, LabelPred):
            return [_Term(Fraction(1), (), (Atom("P", (m(x.i),), x.s),))]
        if isinstance(x, Scale):
            if x.coef == 0:
                return []
            return [_Term(t.coef * x.coef, t.bound, t.atoms) for t in self.terms(x.body, env)]
        if isinstance(x, Add):
            return self.terms(x.left, env) + self.terms(x.right, env)
        if isinstance(x, Product):
            left = self.terms(x.left, env)
            if not left:
                return []
            right = self.terms(x.right, env)
            return [_Term(a.coef * b.coef, a.bound + b.bound, a.atoms + b.atoms) for a in left for b in right]
        if isinstance(x, SumAgg):
            b = self.fresh(x.var)
            inner = dict(env)
            inner[x.var] = b
            out = []
            for t in self.terms(x.body, inner):
                atoms = t.atoms
                if not any(b in a.vars for a in atoms):
                    atoms = atoms + (Atom("Unit", (b,)),)
                out.append(_Term(t.coef, (b,) + t.bound, atoms))
            return out
        if isinstance(x, (UncondAgg, GuardedAgg)) and not self.opaque_aggs:
            raise NormalizationError(
                f"aggregation @{x.agg} has no conjunctive normal form; only summation can be normalized"
            )
        if isinstance(x, (Apply, UncondAgg, GuardedAgg)):
            payload = _rewrite_inside(x) if self.rewrite_payloads else x
            params = tuple(sorted(free_vars(x)))
            return [_Term(Fraction(1), (), (Atom("R", tuple(m(p) for p in params), payload=payload, params=params),))]
        raise NormalizationError(f"unknown expression node {type(x).__name__}")


def _resolve(term: _Term, free: frozenset, key) -> _Term | None:
    """Merge variables forced equal; None if the term is identically zero."""
    parent: dict = {}

    def find(v):
        while parent.get(v, v) != v:
            v = parent[v]
        return v

    eqs = [a for a in term.atoms if a.kind == "Eq"]
    for a in eqs:
        ra, rb = find(a.vars[0]), find(a.vars[1])
        if ra != rb:
            parent[ra] = rb
    classes: dict = {}
    for v in set(parent) | {w for a in eqs for w in a.vars}:
        classes.setdefault(find(v), []).append(v)
    sub, residual = {}, []
    for members in classes.values():
        fr = sorted(v for v in members if v in free)
        if fr:
            rep = fr[0]
            residual += [Atom("Eq", (rep, f)) for f in fr[1:]]
        else:
            rep = min(members, key=key)
        for v in members:
            if v not in free:
                sub[v] = rep
    atoms = [a.rename(sub) for a in term.atoms if a.kind != "Eq"] + residual
    if any(a.kind == "E" and a.vars[0] == a.vars[1] for a in atoms):
        return None
    bound = tuple(b for b in term.bound if b not in sub or sub[b] == b)
    # unit atoms only matter for variables that occur nowhere else
    used = {}
    for a in atoms:
        if a.kind != "Unit":
            for v in a.vars:
                used[v] = True
    kept, seen_units = [], set()
    for a in atoms:
        if a.kind == "Unit":
            v = a.vars[0]
            if v in used or v in seen_units:
                continue
            seen_units.add(v)
        kept.append(a)
    return _Term(term.coef, bound, tuple(kept))


def _normal_form(e: Expr, opaque_aggs: bool, rewrite_payloads: bool) -> NormalForm:
    nz = _Normalizer(opaque_aggs, rewrite_payloads)
    free = free_vars(e)
    raw = nz.terms(e, {})
    key = lambda v: (nz.origin.get(v, v), v)
    out = []
    for t in raw:
        r = _resolve(t, free, key)
        if r is None or r.coef == 0:
            continue
        # canonical bound ids in (original name, creation) order
        order = sorted(r.bound, key=key)
        ren = {b: BOUND_BASE + k + 1 for k, b in enumerate(order)}
        atoms = tuple(a.rename(ren) for a in r.atoms)
        fv = frozenset(v for a in atoms for v in a.vars if v < BOUND_BASE)
        out.append((r.coef, ConjunctiveExpr(fv, tuple(sorted(ren.values())), atoms, r.coef)))
    return NormalForm(out, free)


def normalize(e: Expr) -> NormalForm:
    """Linear combination of conjunctive expressions equal to ``e``.

    Function applications become opaque ``R`` atoms; any aggregation other
    than summation raises :class:`NormalizationError`.
    """
    return _normal_form(e, opaque_aggs=False, rewrite_payloads=False)


# ---------------------------------------------------------------- hypergraphs

@dataclass(frozen=True)
class Hypergraph:
    vertices: tuple
    hyperedges: tuple  # multiset of frozensets
    distinguished: frozenset


@dataclass
class EliminationStep:
    vertex: int
    incident: list  # the hyperedges containing the vertex when it is eliminated
    union: frozenset


@dataclass
class EliminationOrder:
    """Distinguished vertices first; elimination runs from the end of ``order``."""

    order: tuple
    steps: list
    induced_width: int
    distinguished_width: int  # f + max |U_j minus distinguished| - 1
    exact: bool

    def eliminated(self) -> list:
        return [s.vertex for s in self.steps]


def simulate(H: Hypergraph, sequence: Sequence[int]) -> list:
    """Eliminate the non-distinguished vertices of ``sequence`` from its end backwards."""
    edges = [frozenset(e) for e in H.hyperedges]
    steps = []
    for v in reversed(list(sequence)):
        incident = [e for e in edges if v in e]
        union = frozenset().union(*incident) | {v}
        edges = [e for e in edges if v not in e]
        rest = union - {v}
        if rest:
            edges.append(rest)
        steps.append(EliminationStep(v, incident, union))
    return steps


def _widths(H: Hypergraph, steps) -> tuple[int, int]:
    d = H.distinguished
    base = max(len(d) - 1, 0)
    width = max([base] + [len(s.union) - 1 for s in steps])
    f = len(d)
    dw = f + max([0] + [len(s.union - d) for s in steps]) - 1
    return max(width, 0), max(dw, 0)


def _primal(H: Hypergraph) -> dict:
    adj = {v: set() for v in H.vertices}
    for e in H.hyperedges:
        for a in e:
            adj.setdefault(a, set())
            adj[a] |= set(e) - {a}
    return adj


def _exhaustive_sequence(H: Hypergraph, nondist: list) -> tuple:
    adj = _primal(H)
    pos = {v: i for i, v in enumerate(nondist)}
    full = (1 << len(nondist)) - 1
    lower = max(len(H.distinguished) - 1, 0)

    @lru_cache(maxsize=None)
    def cost(eliminated: int, v: int) -> int:
        """Size of U when v is eliminated after the vertices in ``eliminated``."""
        seen, stack, boundary = {v}, [v], {v}
        while stack:
            w = stack.pop()
            for u in adj[w]:
                if u in seen:
                    continue
                seen.add(u)
                if u in pos and eliminated >> pos[u] & 1:
                    stack.append(u)
                else:
                    boundary.add(u)
        return len(boundary)

    def best(bound: int):
        @lru_cache(maxsize=None)
        def L(remaining: int):
            if remaining == 0:
                return ()
            eliminated = full & ~remaining
            choice = None
            for i, v in enumerate(nondist):
                if not remaining >> i & 1:
                    continue
                if cost(eliminated, v) - 1 > bound:
                    continue
                sub = L(remaining & ~(1 << i))
                if sub is None:
                    continue
                cand = sub + (v,)
                if choice is None or cand < choice:
                    choice = cand
            return choice

        return L(full)

    b = lower
    while True:
        seq = best(b)
        if seq is not None:
            return seq
        b += 1


def _min_fill_sequence(H: Hypergraph, nondist: list) -> tuple:
    adj = {v: set(s) for v, s in _primal(H).items()}
    remaining = set(nondist)
    eliminated = []
    while remaining:
        def fill(v):
            nb = list(adj[v])
            return sum(1 for a, b in itertools.combinations(nb, 2) if b not in adj[a])

        v = min(sorted(remaining), key=lambda v: (fill(v), len(adj[v]), v))
        nb = adj[v]
        for a, b in itertools.combinations(nb, 2):
            adj[a].add(b)
            adj[b].add(a)
        for a in nb:
            adj[a].discard(v)
        del adj[v]
        remaining.discard(v)
        eliminated.append(v)
    return tuple(reversed(eliminated))


def elimination_order(H: Hypergraph, strategy: str = "exhaustive") -> EliminationOrder:
    dist = sorted(H.distinguished)
    nondist = sorted(v for v in H.vertices if v not in H.distinguished)
    if strategy == "exhaustive" and len(nondist) > EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive search is limited to {EXHAUSTIVE_LIMIT} non-distinguished vertices")
    if strategy == "exhaustive":
        seq, exact = _exhaustive_sequence(H, nondist), True
    elif strategy == "min_fill":
        seq, exact = _min_fill_sequence(H, nondist), False
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    steps = simulate(H, seq)
    w, dw = _widths(H, steps)
    return EliminationOrder(tuple(dist) + tuple(seq), steps, w, dw, exact)


def auto_order(H: Hypergraph) -> EliminationOrder:
    nondist = [v for v in H.vertices if v not in H.distinguished]
    return elimination_order(H, "exhaustive" if len(nondist) <= EXHAUSTIVE_LIMIT else "min_fill")


@dataclass
class TreeDecomposition:
    bags: list  # list of frozensets; bag 0 is the root (the distinguished vertices)
    parent: list  # parent[i] is the index of bag i's parent, -1 for the root

    @property
    def width(self) -> int:
        return max(max(len(b) for b in self.bags) - 1, 0)


def tree_decomposition(H: Hypergraph, order: EliminationOrder) -> TreeDecomposition:
    bags = [frozenset(H.distinguished)]
    parent = [-1]
    step_index = {}
    steps = order.steps
    for k, s in enumerate(steps):
        step_index[s.vertex] = k + 1
        bags.append(s.union)
        parent.append(0)
    for k, s in enumerate(steps):
        later = [w for w in s.union - {s.vertex} if w in step_index and step_index[w] > k + 1]
        if later:
            parent[k + 1] = min(step_index[w] for w in later)
    return TreeDecomposition(bags, parent)


# ---------------------------------------------------------------- treewidth

def treewidth(e: Expr) -> tuple[int, bool]:
    """Maximum hypergraph width over conjuncts, recursing into function arguments."""
    nf = normalize(e)
    width, exact = 0, True
    for _, conj in nf:
        order = auto_order(conj.hypergraph())
        width = max(width, order.induced_width)
        exact = exact and order.exact
        for a in conj.atoms:
            if a.kind == "R":
                for arg in a.payload.args:
                    w, ex = treewidth(arg)
                    width, exact = max(width, w), exact and ex
    return width, exact


# ---------------------------------------------------------------- rewriting

@dataclass
class _Derived:
    """Result of eliminating ``var``: a sum over the product of ``factors``."""

    var: int
    factors: list
    scope: frozenset  # free parameters (U minus var)

    @property
    def vars(self):
        return tuple(sorted(self.scope))


def _items_vars(item) -> frozenset:
    return item.scope if isinstance(item, _Derived) else frozenset(item.vars)


def factor_conjunct(conj: ConjunctiveExpr, order: EliminationOrder | None = None) -> Expr:
    """Nested sums along the elimination order, reusing variable names under shadowing."""
    H = conj.hypergraph()
    if order is None:
        order = auto_order(H)
    items: list = list(conj.atoms)
    for step in order.steps:
        v = step.vertex
        incident = [it for it in items if v in _items_vars(it)]
        items = [it for it in items if v not in _items_vars(it)]
        scope = frozenset().union(*(_items_vars(it) for it in incident)) - {v}
        items.append(_Derived(v, incident, scope))
    free_names = sorted(conj.free_vars)

    def pool():
        yield from free_names
        i = 1
        while True:
            if i not in free_names:
                yield i
            i += 1

    def emit(item, env) -> Expr:
        if isinstance(item, _Derived):
            taken = {env[w] for w in item.scope}
            name = next(i for i in pool() if i not in taken)
            inner = {w: env[w] for w in item.scope}
            inner[item.var] = name
            return SumAgg(name, product(emit(f, inner) for f in item.factors))
        return item.to_expr(lambda w: env[w])

    env = {v: v for v in conj.free_vars}
    return product(emit(it, env) for it in items)


_PAYLOAD_CACHE: dict = {}


def _rewrite_inside(x: Expr) -> Expr:
    # shared payloads (e.g. previous network layers) are rewritten once
    hit = _PAYLOAD_CACHE.get(id(x))
    if hit is not None and hit[0] is x:
        return hit[1]
    out = _rewrite_payload(x)
    if len(_PAYLOAD_CACHE) > 50_000:
        _PAYLOAD_CACHE.clear()
    _PAYLOAD_CACHE[id(x)] = (x, out)
    return out


def _rewrite_payload(x: Expr) -> Expr:
    if isinstance(x, Apply):
        return Apply(x.fn, tuple(rewrite_min_vars(a) for a in x.args))
    if isinstance(x, UncondAgg):
        return UncondAgg(x.agg, x.var, rewrite_min_vars(x.body))
    if isinstance(x, GuardedAgg):
        return GuardedAgg(x.agg, x.guard, x.bound, rewrite_min_vars(x.body))
    return x


def rewrite_min_vars(e: Expr) -> Expr:
    """An equivalent expression whose summations follow a minimum-width elimination order."""
    nf = _normal_form(e, opaque_aggs=True, rewrite_payloads=True)
    parts = []
    for coef, conj in nf:
        body = factor_conjunct(conj)
        parts.append(body if coef == 1 else Scale(coef, body))
    return add_all(parts) if parts else _zero(free_vars(e))


@dataclass
class RewriteReport:
    width: int
    exact: bool
    var_count_before: int
    var_count_after: int
    orders: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "exact": self.exact,
            "var_count_before": self.var_count_before,
            "var_count_after": self.var_count_after,
            "elimination_orders": self.orders,
        }


def _var_name(v: int) -> str:
    return f"x{v}" if v < BOUND_BASE else f"y{v - BOUND_BASE}"


def _opaque_widths(e: Expr, orders: list) -> tuple[int, bool]:
    nf = _normal_form(e, opaque_aggs=True, rewrite_payloads=False)
    width, exact = 0, True
    for _, conj in nf:
        order = auto_order(conj.hypergraph())
        width, exact = max(width, order.induced_width), exact and order.exact
        orders.append([_var_name(v) for v in order.order])
        for a in conj.atoms:
            if a.kind == "R":
                inner = a.payload.args if isinstance(a.payload, Apply) else (a.payload.body,)
                for sub in inner:
                    w, ex = _opaque_widths(sub, orders)
                    width, exact = max(width, w), exact and ex
    return width, exact


def rewrite_with_report(e: Expr) -> tuple[Expr, RewriteReport]:
    out = rewrite_min_vars(e)
    orders: list = []
    width, exact = _opaque_widths(e, orders)
    return out, RewriteReport(width, exact, len(variables(e)), len(variables(out)), orders)
