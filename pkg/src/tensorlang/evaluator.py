"""Reference semantics: naive recursive evaluation of expressions on a graph.

Every summation loops over all vertices, so cost grows as n to the nesting
depth. This module is deliberately simple; faster paths live in ``tables``
and are tested against it.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from .expr import (
    Add, Apply, EdgePred, EqPred, Expr, GuardedAgg, LabelPred, One, Product, Scale, SumAgg, UncondAgg, free_vars,
)
from .graph import Graph
from .registry import DEFAULT_AGGREGATIONS, DEFAULT_FUNCTIONS, EvaluationError

MODES = ("exact", "float")


def to_mode(x, mode: str):
    if mode == "exact":
        if isinstance(x, Fraction):
            return x
        if isinstance(x, float):
            if x != x or x in (float("inf"), float("-inf")):
                raise EvaluationError(f"non-finite value {x!r} in exact mode")
            return Fraction(x)
        if isinstance(x, int):
            return Fraction(x)
        # gmpy2.mpq and other rationals
        return Fraction(int(x.numerator), int(x.denominator))
    return float(x)


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be 'exact' or 'float', got {mode!r}")


def evaluate(e: Expr, G: Graph, nu: Mapping[int, int] | None = None, mode: str = "exact",
             functions=None, aggregations=None):
    """Value of ``e`` on ``G`` under the valuation ``nu`` (variable index -> vertex)."""
    _check_mode(mode)
    functions = DEFAULT_FUNCTIONS if functions is None else functions
    aggregations = DEFAULT_AGGREGATIONS if aggregations is None else aggregations
    env = dict(nu or {})
    for k, v in env.items():
        if not (0 <= v < G.n):
            raise EvaluationError(f"x{k} is assigned {v}, which is not a vertex")
    missing = free_vars(e) - env.keys()
    if missing:
        raise EvaluationError("unbound variable " + ", ".join(f"x{i}" for i in sorted(missing)))
    one, zero = to_mode(1, mode), to_mode(0, mode)

    def lookup(i):
        if i not in env:
            raise EvaluationError(f"unbound variable x{i}")
        return env[i]

    def bind(var, v, body):
        saved = env.get(var, None)
        had = var in env
        env[var] = v
        try:
            return ev(body)
        finally:
            if had:
                env[var] = saved
            else:
                del env[var]

    def aggregate(name, values):
        if name not in aggregations:
            raise EvaluationError(f"unknown aggregation @{name}")
        agg = aggregations[name]
        if mode == "exact" and not agg.exact:
            raise EvaluationError(f"aggregation @{name} is not exact; use float mode")
        if not values:
            if not agg.empty_ok:
                raise EvaluationError(f"aggregation @{name} of an empty multiset")
            return zero
        return to_mode(agg.fn(values), mode)

    def ev(x):
        if isinstance(x, One):
            return one
        if isinstance(x, EqPred):
            same = lookup(x.i) == lookup(x.j)
            return one if same == (x.op == "eq") else zero
        if isinstance(x, EdgePred):
            return one if G.has_edge(lookup(x.i), lookup(x.j)) else zero
        if isinstance(x, LabelPred):
            if x.s > G.ell:
                raise EvaluationError(f"label index P{x.s} out of range (graph has {G.ell} label dimensions)")
            return to_mode(G.labels[lookup(x.i)][x.s - 1], mode)
        if isinstance(x, Product):
            return ev(x.left) * ev(x.right)
        if isinstance(x, Add):
            return ev(x.left) + ev(x.right)
        if isinstance(x, Scale):
            return to_mode(x.coef, mode) * ev(x.body)
        if isinstance(x, Apply):
            if x.fn not in functions:
                raise EvaluationError(f"unknown function @{x.fn}")
            f = functions[x.fn]
            if mode == "exact" and not f.exact:
                raise EvaluationError(f"function @{x.fn} is not exact; use float mode")
            return to_mode(f(*[ev(a) for a in x.args]), mode)
        if isinstance(x, SumAgg):
            total = zero
            for v in range(G.n):
                total = total + bind(x.var, v, x.body)
            return total
        if isinstance(x, UncondAgg):
            return aggregate(x.agg, [bind(x.var, v, x.body) for v in range(G.n)])
        if isinstance(x, GuardedAgg):
            return aggregate(x.agg, [bind(x.bound, u, x.body) for u in G.neighbors(lookup(x.guard))])
        raise EvaluationError(f"unknown expression node {type(x).__name__}")

    return ev(e)


def check_bundle_signature(exprs: Sequence[Expr]) -> frozenset:
    sigs = {free_vars(e) for e in exprs}
    if len(sigs) > 1:
        shown = sorted(sorted(s) for s in sigs)
        raise EvaluationError(f"bundle mixes free-variable signatures {shown}")
    return sigs.pop() if sigs else frozenset()


def evaluate_bundle(exprs: Sequence[Expr], G: Graph, tuples: Sequence[Sequence[int]], mode: str = "exact",
                    functions=None, aggregations=None, method: str = "table") -> list[list]:
    """One row per tuple, one column per expression; tuple entry i binds x_{i+1}.

    ``method="naive"`` uses :func:`evaluate` directly; the default shares
    work through :class:`tables.TableEvaluator` and gives identical values.
    """
    _check_mode(mode)
    sig = check_bundle_signature(exprs)
    tuples = [tuple(t) for t in tuples]
    for t in tuples:
        if not sig <= set(range(1, len(t) + 1)):
            raise EvaluationError(f"tuple {t} does not bind every free variable of the bundle")
    if not tuples or not exprs:
        return [[] for _ in tuples]
    if method == "naive":
        return [[evaluate(e, G, {i + 1: v for i, v in enumerate(t)}, mode, functions, aggregations) for e in exprs]
                for t in tuples]
    from .tables import TableEvaluator

    tev = TableEvaluator(G, mode, functions, aggregations)
    cols = [tev.values(e, tuples) for e in exprs]
    return [list(row) for row in zip(*cols)]
