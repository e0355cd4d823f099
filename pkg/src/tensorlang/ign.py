"""Equality-pattern terms of invariant graph network layers and their reduction
from 2k to k variables.

A term is ``sum_{y_1..y_k} psi(x, y) * phi(y)`` where ``psi`` is a conjunction
of equality / inequality literals over x_1..x_k and y_1..y_k. The y variables
are represented by indices k+1..2k.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .expr import (
    EqPred, Expr, Scale, SumAgg, add_all, compact_binders, free_vars, product, product_factors, substitute, sum_over,
)


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class IgnTerm:
    k: int
    literals: tuple  # (a, b, "eq" | "neq") with a, b in 1..2k
    body: Expr  # free variables among k+1..2k

    def to_expr(self) -> Expr:
        preds = [EqPred(a, b, op) for a, b, op in self.literals]
        return sum_over(range(self.k + 1, 2 * self.k + 1), product(preds + [self.body]))

    @classmethod
    def from_expr(cls, e: Expr, k: int) -> "IgnTerm":
        """Read back the raw shape produced by :meth:`to_expr`."""
        x = e
        for v in range(k + 1, 2 * k + 1):
            if not (isinstance(x, SumAgg) and x.var == v):
                raise PatternError(f"expected a summation over x{v}")
            x = x.body
        lits, rest = [], []
        for f in product_factors(x):
            if isinstance(f, EqPred):
                lits.append((f.i, f.j, f.op))
            else:
                rest.append(f)
        scale = _scale_of(x)
        body = product(rest)
        if scale != 1:
            body = Scale(scale, body)
        return cls(k, tuple(lits), body)


def _scale_of(x) -> Fraction:
    from .expr import Product

    if isinstance(x, Product):
        return _scale_of(x.left) * _scale_of(x.right)
    if isinstance(x, Scale):
        return x.coef * _scale_of(x.body)
    return Fraction(1)


def set_partitions(items) -> Iterator[list]:
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def equality_patterns(m: int) -> list:
    """All partitions of positions 1..m (the equality patterns of m-tuples), in a fixed order."""
    parts = [sorted(sorted(b) for b in p) for p in set_partitions(range(1, m + 1))]
    return sorted(parts, key=lambda p: (len(p), p))


def pattern_literals(partition) -> tuple:
    """Full literal set of a pattern: '=' inside a block, '!=' across blocks."""
    block = {v: i for i, b in enumerate(partition) for v in b}
    out = []
    for a, b in itertools.combinations(sorted(block), 2):
        out.append((a, b, "eq" if block[a] == block[b] else "neq"))
    return tuple(out)


def _classes(n: int, eqs) -> list:
    parent = list(range(n + 1))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in eqs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict = {}
    for v in range(1, n + 1):
        groups.setdefault(find(v), []).append(v)
    return list(groups.values())


def reduce_ign_term(term, k: int) -> Expr:
    """Equivalent expression in x_1..x_k only, with at most k extra summations."""
    if isinstance(term, Expr):
        term = IgnTerm.from_expr(term, k)
    if term.k != k:
        raise PatternError(f"term was built for k={term.k}, not k={k}")
    if k > 3:
        raise PatternError("pattern reduction is supported for k <= 3")
    extra = free_vars(term.body) - set(range(k + 1, 2 * k + 1))
    if extra:
        raise PatternError("the body may only use the y variables x%d..x%d freely" % (k + 1, 2 * k))
    eqs, x_neqs, y_neqs = [], [], []
    for a, b, op in term.literals:
        if not (1 <= a <= 2 * k and 1 <= b <= 2 * k):
            raise PatternError(f"literal ({a}, {b}) mentions a variable outside x1..x{2 * k}")
        if op == "eq":
            if a != b:
                eqs.append((a, b))
        elif a == b:
            raise PatternError(f"inconsistent pattern: x{a} != x{a}")
        elif a <= k and b <= k:
            x_neqs.append((a, b))
        else:
            y_neqs.append((a, b))
    base = _classes(2 * k, eqs)
    cls = {v: i for i, c in enumerate(base) for v in c}
    for a, b in x_neqs + y_neqs:
        if cls[a] == cls[b]:
            raise PatternError(f"inconsistent pattern: x{a} != x{b} contradicts the equalities")

    terms = []
    for r in range(len(y_neqs) + 1):
        for chosen in itertools.combinations(y_neqs, r):
            groups = _classes(2 * k, eqs + list(chosen))
            where = {v: i for i, g in enumerate(groups) for v in g}
            if any(where[a] == where[b] for a, b in x_neqs):
                continue  # the merged equalities contradict a kept x-inequality
            residual, rep_of, y_only = [], {}, []
            for g in groups:
                xs = [v for v in g if v <= k]
                ys = [v for v in g if v > k]
                for other in xs[1:]:
                    residual.append(EqPred(xs[0], other))
                if xs and ys:
                    for y in ys:
                        rep_of[y] = xs[0]
                elif ys:
                    y_only.append(ys)
            used = set(rep_of.values())
            free_names = [i for i in range(1, k + 1) if i not in used]
            y_only.sort(key=min)
            names = []
            for g, name in zip(y_only, free_names):
                names.append(name)
                for y in g:
                    rep_of[y] = name
            body = substitute(term.body, {y: rep_of[y] for y in range(k + 1, 2 * k + 1)})
            inner = sum_over(names, body)
            t = product(residual + [EqPred(a, b, "neq") for a, b in x_neqs] + [inner])
            terms.append(t if r % 2 == 0 else Scale(-1, t))
    if not terms:
        return Scale(0, product(EqPred(i, i) for i in range(1, k + 1)))
    return compact_binders(add_all(terms))


def ign_term_depth_bound(term: IgnTerm) -> int:
    from .expr import sum_depth

    return sum_depth(term.body) + term.k
