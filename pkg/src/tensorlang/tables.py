"""Bottom-up evaluation: each subexpression becomes a dense table over its free variables.

Work is shared between repeated subexpressions (by node identity), so
expressions that are large as trees but small as DAGs stay cheap. Exact mode
uses gmpy2 rationals internally and returns ``Fraction`` at the boundary.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .evaluator import to_mode
from .expr import (
    Add, Apply, EdgePred, EqPred, Expr, GuardedAgg, LabelPred, One, Product, Scale, SumAgg, UncondAgg,
)
from .graph import Graph
from .registry import DEFAULT_AGGREGATIONS, DEFAULT_FUNCTIONS, EvaluationError

try:
    from gmpy2 import mpq as _rational
except ImportError:  # pragma: no cover
    _rational = Fraction


_RATIONAL_TYPE = type(_rational(0))


def _q(x):
    if isinstance(x, Fraction):
        return _rational(x.numerator, x.denominator)
    return _rational(x)


class TableEvaluator:
    def __init__(self, G: Graph, mode: str = "exact", functions=None, aggregations=None):
        self.G = G
        self.n = G.n
        self.mode = mode
        self.functions = DEFAULT_FUNCTIONS if functions is None else functions
        self.aggregations = DEFAULT_AGGREGATIONS if aggregations is None else aggregations
        self.exact = mode == "exact"
        self._memo: dict = {}
        n = self.n
        if self.exact:
            self.dtype = object
            self.one, self.zero = _q(1), _q(0)
            conv = _q
        else:
            self.dtype = float
            self.one, self.zero = 1.0, 0.0
            conv = float
        adj = np.full((n, n), self.zero, dtype=self.dtype)
        for u, v in G.edges:
            adj[u, v] = adj[v, u] = self.one
        eye = np.full((n, n), self.zero, dtype=self.dtype)
        for v in range(n):
            eye[v, v] = self.one
        self._adj, self._eye = adj, eye
        self._labels = [np.array([conv(G.labels[v][s]) for v in range(n)], dtype=self.dtype) for s in range(G.ell)]

    # -- helpers
    def _full(self, value, shape):
        return np.full(shape, value, dtype=self.dtype)

    def _align(self, tab, target):
        vars_, arr = tab
        shape = [self.n if v in vars_ else 1 for v in target]
        return arr.reshape(shape)

    def _convert(self, x):
        if self.exact:
            return x if isinstance(x, _RATIONAL_TYPE) else _q(to_mode(x, "exact"))
        return float(x)

    def _arr(self, x):
        return np.asarray(x, dtype=self.dtype)

    def _aggregate(self, name, values):
        if name not in self.aggregations:
            raise EvaluationError(f"unknown aggregation @{name}")
        agg = self.aggregations[name]
        if self.exact and not agg.exact:
            raise EvaluationError(f"aggregation @{name} is not exact; use float mode")
        if not values:
            if not agg.empty_ok:
                raise EvaluationError(f"aggregation @{name} of an empty multiset")
            return self.zero
        return self._convert(agg.fn(list(values)))

    # -- main entry points
    def table(self, e: Expr):
        """(sorted free variables, array with one axis per variable)."""
        hit = self._memo.get(id(e))
        if hit is not None and hit[0] is e:
            return hit[1]
        tab = self._build(e)
        self._memo[id(e)] = (e, tab)
        return tab

    def values(self, e: Expr, tuples: Sequence[Sequence[int]]) -> list:
        vars_, arr = self.table(e)
        out = []
        for t in tuples:
            idx = tuple(t[v - 1] for v in vars_)
            out.append(to_mode(arr[idx], self.mode))
        return out

    def raw(self, e: Expr, tup: Sequence[int]):
        """Value in the internal number type (cheap, hashable)."""
        vars_, arr = self.table(e)
        return arr[tuple(tup[v - 1] for v in vars_)]

    def _build(self, x):
        n = self.n
        if isinstance(x, One):
            return (), self._full(self.one, ())
        if isinstance(x, EqPred):
            if x.i == x.j:
                return (x.i,), self._full(self.one if x.op == "eq" else self.zero, (n,))
            mat = self._eye if x.op == "eq" else self._full(self.one, (n, n)) - self._eye
            return tuple(sorted((x.i, x.j))), mat
        if isinstance(x, EdgePred):
            if x.i == x.j:
                return (x.i,), self._full(self.zero, (n,))
            return tuple(sorted((x.i, x.j))), self._adj
        if isinstance(x, LabelPred):
            if x.s > self.G.ell:
                raise EvaluationError(f"label index P{x.s} out of range (graph has {self.G.ell} label dimensions)")
            return (x.i,), self._labels[x.s - 1]
        if isinstance(x, (Product, Add)):
            a, b = self.table(x.left), self.table(x.right)
            target = tuple(sorted(set(a[0]) | set(b[0])))
            A, B = self._align(a, target), self._align(b, target)
            out = A * B if isinstance(x, Product) else A + B
            return target, np.broadcast_to(self._arr(out), (n,) * len(target))
        if isinstance(x, Scale):
            vars_, arr = self.table(x.body)
            c = _q(x.coef) if self.exact else float(x.coef)
            return vars_, self._arr(arr * c)
        if isinstance(x, Apply):
            if x.fn not in self.functions:
                raise EvaluationError(f"unknown function @{x.fn}")
            f = self.functions[x.fn]
            if self.exact and not f.exact:
                raise EvaluationError(f"function @{x.fn} is not exact; use float mode")
            tabs = [self.table(a) for a in x.args]
            target = tuple(sorted(set().union(*(t[0] for t in tabs))))
            arrs = [np.broadcast_to(self._align(t, target), (n,) * len(target)) for t in tabs]
            ufunc = np.frompyfunc(lambda *a: self._convert(f(*a)), len(arrs), 1)
            out = ufunc(*arrs)
            out = np.asarray(out, dtype=self.dtype).reshape((n,) * len(target))
            return target, out
        if isinstance(x, SumAgg):
            vars_, arr = self.table(x.body)
            if x.var in vars_:
                k = vars_.index(x.var)
                if n == 0:
                    rest = vars_[:k] + vars_[k + 1:]
                    return rest, self._full(self.zero, (0,) * len(rest))
                out = arr.sum(axis=k, dtype=self.dtype)
                return vars_[:k] + vars_[k + 1:], np.asarray(out, dtype=self.dtype)
            return vars_, self._arr(arr * self._convert(n))
        if isinstance(x, UncondAgg):
            vars_, arr = self.table(x.body)
            if x.var in vars_:
                k = vars_.index(x.var)
                moved = np.moveaxis(arr, k, -1)
                rest = vars_[:k] + vars_[k + 1:]
                flat = moved.reshape(-1, n)
                out = np.array([self._aggregate(x.agg, list(row)) for row in flat], dtype=self.dtype)
                return rest, out.reshape((n,) * len(rest))
            out = np.empty(arr.shape, dtype=self.dtype)
            for idx in np.ndindex(arr.shape):
                out[idx] = self._aggregate(x.agg, [arr[idx]] * n)
            return vars_, out
        if isinstance(x, GuardedAgg):
            vars_, arr = self.table(x.body)
            if vars_:
                vals = list(arr)
            else:
                vals = [arr[()]] * n
            out = np.array([self._aggregate(x.agg, [vals[u] for u in self.G.neighbors(v)]) for v in range(n)],
                           dtype=self.dtype)
            return (x.guard,), out
        raise EvaluationError(f"unknown expression node {type(x).__name__}")
