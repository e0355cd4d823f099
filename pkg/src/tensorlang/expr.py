"""Expression trees for the tensor language and their static analysis.

Nodes are immutable and hashable; the hash is cached at construction so
that large expressions with shared subtrees stay cheap to hash.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator


class ExprError(ValueError):
    pass


class Expr:
    __slots__ = ()

    def children(self) -> tuple:
        return ()

    # arithmetic sugar for building expressions in Python code
    def __mul__(self, other):
        return Product(self, _lift(other))

    def __add__(self, other):
        return Add(self, _lift(other))

    def __sub__(self, other):
        return Add(self, Scale(-1, _lift(other)))

    def __rmul__(self, c):
        return Scale(c, self)


def _lift(x):
    if isinstance(x, Expr):
        return x
    return Scale(x, One())


def _check_var(i, what="variable"):
    if not isinstance(i, int) or isinstance(i, bool) or i < 1:
        raise ExprError(f"{what} index must be a positive integer, got {i!r}")


def _hashed(cls):
    cls = dataclass(frozen=True)(cls)
    return cls


@_hashed
class One(Expr):
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("One",)))

    def __hash__(self):
        return self._h


@_hashed
class EqPred(Expr):
    i: int
    j: int
    op: str = "eq"
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_var(self.i)
        _check_var(self.j)
        if self.op not in ("eq", "neq"):
            raise ExprError(f"equality operator must be 'eq' or 'neq', got {self.op!r}")
        object.__setattr__(self, "_h", hash(("Eq", self.i, self.j, self.op)))

    def __hash__(self):
        return self._h


@_hashed
class EdgePred(Expr):
    i: int
    j: int
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_var(self.i)
        _check_var(self.j)
        object.__setattr__(self, "_h", hash(("E", self.i, self.j)))

    def __hash__(self):
        return self._h


@_hashed
class LabelPred(Expr):
    s: int
    i: int
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_var(self.s, "label")
        _check_var(self.i)
        object.__setattr__(self, "_h", hash(("P", self.s, self.i)))

    def __hash__(self):
        return self._h


@_hashed
class Product(Expr):
    left: Expr
    right: Expr
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("*", self.left._h, self.right._h)))

    def __hash__(self):
        return self._h

    def children(self):
        return (self.left, self.right)


@_hashed
class Add(Expr):
    left: Expr
    right: Expr
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("+", self.left._h, self.right._h)))

    def __hash__(self):
        return self._h

    def children(self):
        return (self.left, self.right)


@_hashed
class Scale(Expr):
    coef: Fraction
    body: Expr
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        c = self.coef
        if isinstance(c, bool) or not isinstance(c, (int, Fraction, str)):
            raise ExprError(f"scale coefficient must be rational, got {c!r}")
        object.__setattr__(self, "coef", Fraction(c))
        object.__setattr__(self, "_h", hash(("c", self.coef, self.body._h)))

    def __hash__(self):
        return self._h

    def children(self):
        return (self.body,)


@_hashed
class Apply(Expr):
    fn: str
    args: tuple
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ExprError("function application needs at least one argument")
        object.__setattr__(self, "_h", hash(("@", self.fn) + tuple(a._h for a in self.args)))

    def __hash__(self):
        return self._h

    def children(self):
        return self.args


@_hashed
class SumAgg(Expr):
    var: int
    body: Expr
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_var(self.var)
        object.__setattr__(self, "_h", hash(("sum", self.var, self.body._h)))

    def __hash__(self):
        return self._h

    def children(self):
        return (self.body,)


@_hashed
class UncondAgg(Expr):
    agg: str
    var: int
    body: Expr
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_var(self.var)
        object.__setattr__(self, "_h", hash(("agg", self.agg, self.var, self.body._h)))

    def __hash__(self):
        return self._h

    def children(self):
        return (self.body,)


@_hashed
class GuardedAgg(Expr):
    """Aggregate ``body`` over the neighbours x_bound of x_guard."""

    agg: str
    guard: int
    bound: int
    body: Expr
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_var(self.guard)
        _check_var(self.bound)
        if self.guard == self.bound:
            raise ExprError("guarded aggregation needs two distinct variables")
        extra = free_vars(self.body) - {self.bound}
        if extra:
            raise ExprError(
                f"body of a guarded aggregation may only use x{self.bound} freely, found "
                + ", ".join(f"x{v}" for v in sorted(extra))
            )
        object.__setattr__(self, "_h", hash(("gagg", self.agg, self.guard, self.bound, self.body._h)))

    def __hash__(self):
        return self._h

    def children(self):
        return (self.body,)


def neq(i: int, j: int) -> EqPred:
    return EqPred(i, j, "neq")


def sub(a: Expr, b: Expr) -> Add:
    return Add(a, Scale(-1, b))


def product(factors) -> Expr:
    factors = list(factors)
    if not factors:
        return One()
    out = factors[0]
    for f in factors[1:]:
        out = Product(out, f)
    return out


def add_all(terms) -> Expr:
    terms = list(terms)
    if not terms:
        raise ExprError("empty sum")
    if len(terms) > 8:
        # balanced so long sums stay shallow
        mid = (len(terms) + 1) // 2
        return Add(add_all(terms[:mid]), add_all(terms[mid:]))
    out = terms[0]
    for t in terms[1:]:
        out = Add(out, t)
    return out


def sum_over(variables, body: Expr) -> Expr:
    """Nested SumAgg, outermost binder first."""
    for v in reversed(list(variables)):
        body = SumAgg(v, body)
    return body


# ---------------------------------------------------------------- analysis

_FREE_CACHE: dict = {}


def free_vars(e: Expr) -> frozenset:
    key = id(e)
    hit = _FREE_CACHE.get(key)
    if hit is not None and hit[0] is e:
        return hit[1]
    if isinstance(e, (EqPred, EdgePred)):
        out = frozenset((e.i, e.j))
    elif isinstance(e, LabelPred):
        out = frozenset((e.i,))
    elif isinstance(e, One):
        out = frozenset()
    elif isinstance(e, (SumAgg, UncondAgg)):
        out = free_vars(e.body) - {e.var}
    elif isinstance(e, GuardedAgg):
        out = (free_vars(e.body) - {e.bound}) | {e.guard}
    else:
        out = frozenset().union(*(free_vars(c) for c in e.children()))
    if len(_FREE_CACHE) > 200_000:
        _FREE_CACHE.clear()
    _FREE_CACHE[key] = (e, out)
    return out


def nodes(e: Expr) -> Iterator[Expr]:
    """Each distinct node object once, parents before children."""
    seen = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if id(x) in seen:
            continue
        seen.add(id(x))
        yield x
        stack.extend(reversed(x.children()))


def variables(e: Expr) -> frozenset:
    out = set()
    for x in nodes(e):
        if isinstance(x, (EqPred, EdgePred)):
            out |= {x.i, x.j}
        elif isinstance(x, LabelPred):
            out.add(x.i)
        elif isinstance(x, (SumAgg, UncondAgg)):
            out.add(x.var)
        elif isinstance(x, GuardedAgg):
            out |= {x.guard, x.bound}
    return frozenset(out)


def _depths(e: Expr) -> tuple[int, int]:
    memo: dict = {}

    def go(x):
        k = id(x)
        if k in memo:
            return memo[k]
        sub_sd, sub_ad = 0, 0
        for c in x.children():
            s, a = go(c)
            sub_sd, sub_ad = max(sub_sd, s), max(sub_ad, a)
        if isinstance(x, SumAgg):
            r = (sub_sd + 1, sub_ad + 1)
        elif isinstance(x, (UncondAgg, GuardedAgg)):
            r = (sub_sd, sub_ad + 1)
        else:
            r = (sub_sd, sub_ad)
        memo[k] = r
        return r

    return go(e)


def sum_depth(e: Expr) -> int:
    return _depths(e)[0]


def agg_depth(e: Expr) -> int:
    return _depths(e)[1]


def product_factors(e: Expr) -> list:
    """Flatten nested products (and constant scalings) into a factor list."""
    if isinstance(e, Product):
        return product_factors(e.left) + product_factors(e.right)
    if isinstance(e, Scale):
        return product_factors(e.body)
    return [e]


def _guard_split(body: Expr, bound: int):
    """If ``body`` is E(x_i, x_bound) times factors in x_bound alone, return i."""
    factors = product_factors(body)
    for k, f in enumerate(factors):
        if isinstance(f, EdgePred) and bound in (f.i, f.j) and f.i != f.j:
            other = f.j if f.i == bound else f.i
            rest = factors[:k] + factors[k + 1:]
            if all(free_vars(r) <= {bound} for r in rest):
                return other, rest
    return None


def is_guarded_fragment(e: Expr) -> bool:
    """Syntactic membership in the guarded two-variable fragment, any free variable in {x1, x2}."""
    memo: dict = {}

    def gf(x) -> bool:
        k = id(x)
        if k in memo:
            return memo[k]
        r = _gf(x)
        memo[k] = r
        return r

    def _gf(x) -> bool:
        if isinstance(x, One):
            return True
        if isinstance(x, EqPred):
            return x.i == x.j and x.i in (1, 2)
        if isinstance(x, LabelPred):
            return x.i in (1, 2)
        if isinstance(x, EdgePred):
            return False
        if isinstance(x, Scale):
            return gf(x.body)
        if isinstance(x, (Add, Product, Apply)):
            if not all(gf(c) for c in x.children()):
                return False
            return len(free_vars(x)) <= 1
        if isinstance(x, SumAgg):
            if x.var not in (1, 2):
                return False
            split = _guard_split(x.body, x.var)
            if split is None:
                return False
            other, rest = split
            return other in (1, 2) and all(gf(r) for r in rest)
        if isinstance(x, GuardedAgg):
            return {x.guard, x.bound} == {1, 2} and gf(x.body)
        return False

    return gf(e)


@dataclass(frozen=True)
class AnalysisReport:
    free_vars: frozenset
    var_count: int
    sum_depth: int
    agg_depth: int
    guarded: bool
    function_free: bool

    def to_json(self) -> dict:
        return {
            "free": [f"x{i}" for i in sorted(self.free_vars)],
            "var_count": self.var_count,
            "sum_depth": self.sum_depth,
            "agg_depth": self.agg_depth,
            "guarded": self.guarded,
            "function_free": self.function_free,
        }


def analyze(e: Expr) -> AnalysisReport:
    fv = free_vars(e)
    sd, ad = _depths(e)
    guarded = fv <= {1} and is_guarded_fragment(e)
    function_free = not any(isinstance(x, Apply) for x in nodes(e))
    return AnalysisReport(fv, len(variables(e)), sd, ad, guarded, function_free)


def structural_equal(a: Expr, b: Expr) -> bool:
    return a == b


# ---------------------------------------------------------------- substitution

def rename_all(e: Expr, mapping: dict) -> Expr:
    """Rename every occurrence (free and bound) of the variables in ``mapping``.

    Only an alpha-renaming when ``mapping`` is injective on the variables used.
    """
    memo: dict = {}
    m = lambda v: mapping.get(v, v)

    def go(x):
        k = id(x)
        if k in memo:
            return memo[k]
        if isinstance(x, EqPred):
            r = EqPred(m(x.i), m(x.j), x.op)
        elif isinstance(x, EdgePred):
            r = EdgePred(m(x.i), m(x.j))
        elif isinstance(x, LabelPred):
            r = LabelPred(x.s, m(x.i))
        elif isinstance(x, One):
            r = x
        elif isinstance(x, Product):
            r = Product(go(x.left), go(x.right))
        elif isinstance(x, Add):
            r = Add(go(x.left), go(x.right))
        elif isinstance(x, Scale):
            r = Scale(x.coef, go(x.body))
        elif isinstance(x, Apply):
            r = Apply(x.fn, tuple(go(a) for a in x.args))
        elif isinstance(x, SumAgg):
            r = SumAgg(m(x.var), go(x.body))
        elif isinstance(x, UncondAgg):
            r = UncondAgg(x.agg, m(x.var), go(x.body))
        elif isinstance(x, GuardedAgg):
            r = GuardedAgg(x.agg, m(x.guard), m(x.bound), go(x.body))
        else:
            raise ExprError(f"unknown node {x!r}")
        memo[k] = r
        return r

    return go(e)


def substitute(e: Expr, mapping: dict) -> Expr:
    """Capture-avoiding renaming of free variables.

    A binder keeps its index unless that would capture a renamed free
    variable; otherwise it takes the smallest index not free in its scope.
    """
    memo = _SUBST_MEMO
    if len(memo) > 500_000:
        memo.clear()

    def fresh(taken):
        i = 1
        while i in taken:
            i += 1
        return i

    def go(x, env):
        # process-wide memo so repeated renamings of one node share their result
        key = (id(x), tuple(sorted((v, env[v]) for v in free_vars(x) if v in env and env[v] != v)))
        hit = memo.get(key)
        if hit is not None and hit[0] is x:
            return hit[1]
        if not key[1]:
            return x
        m = lambda v: env.get(v, v)
        if isinstance(x, EqPred):
            r = EqPred(m(x.i), m(x.j), x.op)
        elif isinstance(x, EdgePred):
            r = EdgePred(m(x.i), m(x.j))
        elif isinstance(x, LabelPred):
            r = LabelPred(x.s, m(x.i))
        elif isinstance(x, One):
            r = x
        elif isinstance(x, Product):
            r = Product(go(x.left, env), go(x.right, env))
        elif isinstance(x, Add):
            r = Add(go(x.left, env), go(x.right, env))
        elif isinstance(x, Scale):
            r = Scale(x.coef, go(x.body, env))
        elif isinstance(x, Apply):
            r = Apply(x.fn, tuple(go(a, env) for a in x.args))
        elif isinstance(x, (SumAgg, UncondAgg, GuardedAgg)):
            b = x.bound if isinstance(x, GuardedAgg) else x.var
            outer = {m(v) for v in free_vars(x.body) if v != b}
            if isinstance(x, GuardedAgg):
                outer.add(m(x.guard))
            nb = b if b not in outer else fresh(outer)
            inner = dict(env)
            inner[b] = nb
            body = go(x.body, inner)
            if isinstance(x, SumAgg):
                r = SumAgg(nb, body)
            elif isinstance(x, UncondAgg):
                r = UncondAgg(x.agg, nb, body)
            else:
                r = GuardedAgg(x.agg, m(x.guard), nb, body)
        else:
            raise ExprError(f"unknown node {x!r}")
        memo[key] = (x, r)
        return r

    return go(e, dict(mapping))


_SUBST_MEMO: dict = {}
_COMPACT_MEMO: dict = {}


def compact_binders(e: Expr) -> Expr:
    """Rename every binder, innermost first, to the smallest index its scope leaves free.

    Semantics are unchanged; the variable count usually drops. The input is
    returned when compaction would not reduce it.
    """
    memo = _COMPACT_MEMO
    if len(memo) > 500_000:
        memo.clear()

    def fresh(taken):
        i = 1
        while i in taken:
            i += 1
        return i

    def go(x):
        hit = memo.get(id(x))
        if hit is not None and hit[0] is x:
            return hit[1]
        if isinstance(x, (One, EqPred, EdgePred, LabelPred)):
            r = x
        elif isinstance(x, Product):
            r = Product(go(x.left), go(x.right))
        elif isinstance(x, Add):
            r = Add(go(x.left), go(x.right))
        elif isinstance(x, Scale):
            r = Scale(x.coef, go(x.body))
        elif isinstance(x, Apply):
            r = Apply(x.fn, tuple(go(a) for a in x.args))
        else:
            body = go(x.body)
            b = x.bound if isinstance(x, GuardedAgg) else x.var
            taken = {x.guard} if isinstance(x, GuardedAgg) else set(free_vars(body) - {b})
            nb = fresh(taken)
            if nb != b:
                body = substitute(body, {b: nb})
            if isinstance(x, SumAgg):
                r = SumAgg(nb, body)
            elif isinstance(x, UncondAgg):
                r = UncondAgg(x.agg, nb, body)
            else:
                r = GuardedAgg(x.agg, x.guard, nb, body)
        memo[id(x)] = (x, r)
        return r

    out = go(e)
    return out if len(variables(out)) <= len(variables(e)) else e
