"""Compile GNN layer specifications into expression bundles, run an independent
dense forward pass for cross-checking, and derive separation bounds.

Parameter payloads (all weights are nested lists of numbers; ``d`` is the
feature width entering a layer, ``d'`` the width leaving it, ``l`` the number
of vertex labels):

- gin / egin: ``{"in_dim": l, "mlps": [mlp, ...]}``; each mlp maps 2d (gin) or
  3d (egin) inputs to d' outputs.
- graphsage: ``{"in_dim", "agg": name or [name per layer], "act",
  "weights": [{"V": d x d', "W": d x d', "b": [d']}, ...]}``.
- gcn: ``{"in_dim", "act", "weights": [{"W": d x d', "b": [d']}, ...]}``.
- sgc: ``{"in_dim", "p", "act", "W": l x d'}`` (a single layer).
- pna: ``{"in_dim", "scalers": [s1, s2], "mlps": [{"pre": mlp d -> d,
  "post": mlp 12d -> d'}, ...]}``.
- chebnet: ``{"in_dim", "p", "c", "act", "weights": [[W_1, ..., W_p], ...]}``.
- fgnn_k: ``{"in_dim", "k", "mlps": [{"m0": mlp (d + h) -> d', "ms": [mlp d -> h] * k}, ...]}``.
- kgin: ``{"in_dim", "k", "mlps": [{"m0": mlp (d + k h) -> d', "m1": mlp d -> h}, ...]}``.
- ign_layer: ``{"in_dim", "k", "act", "form": "raw" | "reduced",
  "weights": [{"c": [pattern2k][d][d'], "b": [pattern_k][d']}, ...]}``; patterns
  are indexed in the order of :func:`ign.equality_patterns`.
- readout: ``{"base": {"arch", "layers", "params"}, "mlp": optional mlp d -> d'}``.
- hom_count: ``{"pattern": {"n", "edges"}, "root": 0, "rewrite": true}``.

An mlp payload is ``{"layers": [{"W": in x out, "b": [out], "act": "relu" | "id"}, ...]}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .evaluator import check_bundle_signature, evaluate_bundle
from .expr import (
    Add, Apply, EdgePred, EqPred, Expr, GuardedAgg, LabelPred, Product, Scale, SumAgg, add_all, analyze,
    product, substitute, sum_over,
)
from .graph import Graph
from .ign import IgnTerm, equality_patterns, pattern_literals, reduce_ign_term
from .registry import (
    DEFAULT_AGGREGATIONS, DEFAULT_FUNCTIONS, MLP, AggregationRegistry, FunctionRegistry,
)

ARCHITECTURES = (
    "gin", "egin", "gcn", "sgc", "graphsage", "pna", "fgnn_k", "kgin", "ign_layer", "readout", "hom_count", "chebnet",
)


class GnnSpecError(ValueError):
    pass


@dataclass
class GnnLayerSpec:
    arch: str
    layers: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise GnnSpecError(f"unknown architecture {self.arch!r}; expected one of {', '.join(ARCHITECTURES)}")
        if self.layers < 0:
            raise GnnSpecError("layer count must be non-negative")

    @classmethod
    def from_json(cls, obj: dict) -> "GnnLayerSpec":
        return cls(obj["arch"], int(obj.get("layers", 0)), dict(obj.get("params", {})))

    def to_json(self) -> dict:
        return {"arch": self.arch, "layers": self.layers, "params": self.params}


@dataclass
class Encoding:
    """An encoded network: one expression per output feature plus the functions it calls."""

    exprs: list
    functions: FunctionRegistry
    aggregations: AggregationRegistry
    arity: int
    layer_bundles: list
    meta: dict = field(default_factory=dict)

    def evaluate(self, G: Graph, mode: str = "float", method: str = "table") -> np.ndarray:
        """Values shaped (n,) * arity + (features,), matching :func:`oracle_forward`."""
        tuples = list(itertools.product(range(G.n), repeat=self.arity))
        rows = evaluate_bundle(self.exprs, G, tuples, mode, self.functions, self.aggregations, method)
        dtype = object if mode == "exact" else float
        out = np.array(rows, dtype=dtype).reshape(len(tuples), len(self.exprs))
        return out.reshape((G.n,) * self.arity + (len(self.exprs),))


# ---------------------------------------------------------------- expression helpers

def _q(x) -> Fraction:
    return Fraction(x)


def _lin(coeffs: Sequence, exprs: Sequence[Expr]) -> Expr:
    terms = []
    for c, e in zip(coeffs, exprs):
        c = _q(c)
        if c == 0:
            continue
        terms.append(e if c == 1 else Scale(c, e))
    if not terms:
        return Scale(0, exprs[0])
    return add_all(terms)


def _swap(e: Expr) -> Expr:
    return substitute(e, {1: 2})


def _pad(e: Expr, k: int) -> Expr:
    from .expr import free_vars

    missing = [i for i in range(1, k + 1) if i not in free_vars(e)]
    return product([e] + [EqPred(i, i) for i in missing]) if missing else e


def _act(name: str | None, e: Expr) -> Expr:
    if name in (None, "id", "identity"):
        return e
    return Apply(name, (e,))


def _matrix(obj, rows: int | None, cols: int | None, what: str) -> list:
    M = [list(r) for r in obj]
    if rows is not None and len(M) != rows:
        raise GnnSpecError(f"{what}: expected {rows} rows, got {len(M)}")
    widths = {len(r) for r in M}
    if len(widths) > 1:
        raise GnnSpecError(f"{what}: ragged rows")
    if cols is not None and widths and widths.pop() != cols:
        raise GnnSpecError(f"{what}: expected {cols} columns")
    return M


def _vector(obj, size: int, what: str) -> list:
    v = list(obj) if obj is not None else [0] * size
    if len(v) != size:
        raise GnnSpecError(f"{what}: expected length {size}, got {len(v)}")
    return v


def _register(reg: FunctionRegistry, name: str, payload, in_dim: int, what: str) -> list[str]:
    try:
        mlp = MLP.from_payload(payload)
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise GnnSpecError(f"{what}: {exc}") from None
    if mlp.in_dim != in_dim:
        raise GnnSpecError(f"{what}: expects input width {mlp.in_dim}, layer provides {in_dim}")
    return reg.register_mlp(name, payload)


def _layer_list(params: dict, key: str, layers: int) -> list:
    items = params.get(key, [])
    if len(items) < layers:
        raise GnnSpecError(f"'{key}' has {len(items)} entries but {layers} layers were requested")
    return items[:layers]


def _label_exprs(ell: int) -> list:
    return [LabelPred(s, 1) for s in range(1, ell + 1)]


def _atomic_exprs(k: int, ell: int) -> list:
    """Expressions for the atomic type of (x1..xk): equality bits, adjacency bits, labels."""
    pairs = list(itertools.combinations(range(1, k + 1), 2))
    out = [EqPred(i, j) for i, j in pairs] + [EdgePred(i, j) for i, j in pairs]
    out += [LabelPred(s, v) for v in range(1, k + 1) for s in range(1, ell + 1)]
    return [_pad(e, k) for e in out]


def _fgnn_initial(k: int, ell: int) -> list:
    out = []
    for r in range(1, k + 1):
        for s in range(1, k + 1):
            for j in range(1, ell + 3):
                if j <= ell:
                    e = Product(EqPred(r, s), LabelPred(j, r))
                elif j == ell + 1:
                    e = EdgePred(r, s)
                else:
                    e = EqPred(r, s)
                out.append(_pad(e, k))
    return out


# ---------------------------------------------------------------- encoders

def _encode_gin(spec, reg, extended: bool):
    bundles = [_label_exprs(int(spec.params["in_dim"]))]
    for t, payload in enumerate(_layer_list(spec.params, "mlps", spec.layers), start=1):
        prev = bundles[-1]
        shifted = [_swap(e) for e in prev]
        args = list(prev) + [SumAgg(2, Product(EdgePred(1, 2), s)) for s in shifted]
        if extended:
            args += [SumAgg(2, s) for s in shifted]
        names = _register(reg, f"{spec.arch}{t}", payload, len(args), f"layer {t} mlp")
        bundles.append([Apply(n, tuple(args)) for n in names])
    return bundles, 1


def _encode_graphsage(spec, reg):
    p = spec.params
    bundles = [_label_exprs(int(p["in_dim"]))]
    aggs = p.get("agg", "sum")
    for t, w in enumerate(_layer_list(p, "weights", spec.layers), start=1):
        agg = aggs[t - 1] if isinstance(aggs, list) else aggs
        if agg not in DEFAULT_AGGREGATIONS:
            raise GnnSpecError(f"unknown aggregation {agg!r}")
        prev = bundles[-1]
        d = len(prev)
        V = _matrix(w["V"], d, None, f"layer {t} V")
        out = len(V[0])
        W = _matrix(w["W"], d, out, f"layer {t} W")
        b = _vector(w.get("b"), out, f"layer {t} b")
        aggregated = [GuardedAgg(agg, 1, 2, _swap(e)) for e in prev]
        layer = []
        for j in range(out):
            pre = Add(Add(_lin([V[i][j] for i in range(d)], prev), _lin([W[i][j] for i in range(d)], aggregated)),
                      Scale(_q(b[j]), EqPred(1, 1)))
            layer.append(_act(p.get("act", "relu"), pre))
        bundles.append(layer)
    return bundles, 1


def _degree_scale(name: str) -> tuple[Expr, Expr]:
    r1 = Apply(name, (SumAgg(2, EdgePred(1, 2)),))
    return r1, _swap(r1)


def _encode_gcn(spec, reg):
    p = spec.params
    bundles = [_label_exprs(int(p["in_dim"]))]
    r1, r2 = _degree_scale("recip_sqrt_plus1")
    for t, w in enumerate(_layer_list(p, "weights", spec.layers), start=1):
        prev = bundles[-1]
        d = len(prev)
        W = _matrix(w["W"], d, None, f"layer {t} W")
        out = len(W[0])
        b = _vector(w.get("b"), out, f"layer {t} b")
        layer = []
        for j in range(out):
            lin = _lin([W[i][j] for i in range(d)], prev)
            self_term = Product(Product(r1, lin), r1)
            nb = Product(r1, SumAgg(2, Product(Product(EdgePred(1, 2), r2), _swap(lin))))
            pre = Add(Add(self_term, nb), Scale(_q(b[j]), EqPred(1, 1)))
            layer.append(_act(p.get("act", "relu"), pre))
        bundles.append(layer)
    return bundles, 1


def _encode_sgc(spec, reg):
    p = spec.params
    ell = int(p["in_dim"])
    power = int(p.get("p", 1))
    W = _matrix(p["W"], ell, None, "W")
    bundles = [_label_exprs(ell)]
    chain = [EdgePred(k, k + 1) for k in range(1, power + 1)]
    last = power + 1
    layer = []
    for j in range(len(W[0])):
        lin = _lin([W[i][j] for i in range(ell)], [LabelPred(s, last) for s in range(1, ell + 1)])
        layer.append(_act(p.get("act", "identity"), sum_over(range(2, power + 2), product(chain + [lin]))))
    bundles.append(layer)
    return bundles, 1


PNA_AGGS = ("mean", "stdv", "max", "min")


def _encode_pna(spec, reg):
    p = spec.params
    bundles = [_label_exprs(int(p["in_dim"]))]
    s1, s2 = p.get("scalers", ["pna_amp", "pna_att"])
    for name in (s1, s2):
        if name not in reg:
            raise GnnSpecError(f"unknown scaler function {name!r}")
    degree = GuardedAgg("sum", 1, 2, EqPred(2, 2))
    sc1, sc2 = Apply(s1, (degree,)), Apply(s2, (degree,))
    for t, m in enumerate(_layer_list(p, "mlps", spec.layers), start=1):
        prev = bundles[-1]
        d = len(prev)
        pre_names = _register(reg, f"pna{t}.pre", m["pre"], d, f"layer {t} pre mlp")
        shifted = tuple(_swap(e) for e in prev)
        messages = [Apply(n, shifted) for n in pre_names]
        psi = [GuardedAgg(a, 1, 2, msg) for a in PNA_AGGS for msg in messages]
        xi = psi + [Product(sc1, x) for x in psi] + [Product(sc2, x) for x in psi]
        post_names = _register(reg, f"pna{t}.post", m["post"], len(xi), f"layer {t} post mlp")
        bundles.append([Apply(n, tuple(xi)) for n in post_names])
    return bundles, 1


def _encode_chebnet(spec, reg):
    p = spec.params
    order = int(p.get("p", 2))
    c = _q(p.get("c", 1))
    bundles = [_label_exprs(int(p["in_dim"]))]
    r1, r2 = _degree_scale("recip_sqrt")

    def prop(Y):  # D^-1/2 A D^-1/2 Y
        return Product(r1, SumAgg(2, Product(Product(EdgePred(1, 2), r2), _swap(Y))))

    def laplacian(Y):
        return Add(Y, Scale(-1, prop(Y)))

    def cheb(Y):
        """[C_1 Y, ..., C_order Y] with C_2 = c L - I and C_s = 2 C_2 C_{s-1} - C_{s-2}."""
        def c2(Z):
            return Add(Scale(c, laplacian(Z)), Scale(-1, Z))

        out = [Y]
        if order >= 2:
            out.append(c2(Y))
        for _ in range(3, order + 1):
            out.append(Add(Scale(2, c2(out[-1])), Scale(-1, out[-2])))
        return out

    for t, ws in enumerate(_layer_list(p, "weights", spec.layers), start=1):
        prev = bundles[-1]
        d = len(prev)
        if len(ws) != order:
            raise GnnSpecError(f"layer {t}: expected {order} weight matrices, got {len(ws)}")
        Ws = [_matrix(W, d, None, f"layer {t} W{s + 1}") for s, W in enumerate(ws)]
        out = len(Ws[0][0])
        layer = []
        for j in range(out):
            parts = []
            for s in range(order):
                _matrix(ws[s], d, out, f"layer {t} W{s + 1}")
                Y = _lin([Ws[s][i][j] for i in range(d)], prev)
                parts.append(cheb(Y)[s])
            layer.append(_act(p.get("act", "relu"), add_all(parts)))
        bundles.append(layer)
    return bundles, 1


def _encode_fgnn(spec, reg):
    p = spec.params
    k = int(p.get("k", 2))
    bundles = [_fgnn_initial(k, int(p["in_dim"]))]
    for t, m in enumerate(_layer_list(p, "mlps", spec.layers), start=1):
        prev = bundles[-1]
        d = len(prev)
        if len(m["ms"]) != k:
            raise GnnSpecError(f"layer {t}: expected {k} inner mlps, got {len(m['ms'])}")
        inner_names = []
        for s in range(1, k + 1):
            inner_names.append(_register(reg, f"fgnn{t}.m{s}", m["ms"][s - 1], d, f"layer {t} mlp {s}"))
        widths = {len(n) for n in inner_names}
        if len(widths) != 1:
            raise GnnSpecError(f"layer {t}: inner mlps must share an output width")
        h = widths.pop()
        shifted = [tuple(substitute(e, {s: k + 1}) for e in prev) for s in range(1, k + 1)]
        inner = [SumAgg(k + 1, product(Apply(inner_names[s][c], shifted[s]) for s in range(k))) for c in range(h)]
        names = _register(reg, f"fgnn{t}.m0", m["m0"], d + h, f"layer {t} outer mlp")
        bundles.append([_pad(Apply(n, tuple(prev) + tuple(inner)), k) for n in names])
    return bundles, k


def _encode_kgin(spec, reg):
    p = spec.params
    k = int(p.get("k", 2))
    bundles = [_atomic_exprs(k, int(p["in_dim"]))]
    for t, m in enumerate(_layer_list(p, "mlps", spec.layers), start=1):
        prev = bundles[-1]
        d = len(prev)
        inner = _register(reg, f"kgin{t}.m1", m["m1"], d, f"layer {t} inner mlp")
        applied = [Apply(n, tuple(prev)) for n in inner]
        sums = [SumAgg(s, a) for s in range(1, k + 1) for a in applied]
        names = _register(reg, f"kgin{t}.m0", m["m0"], d + len(sums), f"layer {t} outer mlp")
        bundles.append([_pad(Apply(n, tuple(prev) + tuple(sums)), k) for n in names])
    return bundles, k


def _encode_ign(spec, reg):
    p = spec.params
    k = int(p.get("k", 2))
    form = p.get("form", "raw")
    if form not in ("raw", "reduced"):
        raise GnnSpecError("ign_layer form must be 'raw' or 'reduced'")
    pats2, patsk = equality_patterns(2 * k), equality_patterns(k)
    bundles = [_atomic_exprs(k, int(p["in_dim"]))]
    to_y = {s: k + s for s in range(1, k + 1)}
    for t, w in enumerate(_layer_list(p, "weights", spec.layers), start=1):
        prev = bundles[-1]
        d = len(prev)
        C = w["c"]
        if len(C) != len(pats2):
            raise GnnSpecError(f"layer {t}: 'c' needs {len(pats2)} pattern entries, got {len(C)}")
        C = [_matrix(Cg, d, None, f"layer {t} c[{g}]") for g, Cg in enumerate(C)]
        out = len(C[0][0])
        B = _matrix(w.get("b", [[0] * out for _ in patsk]), len(patsk), out, f"layer {t} b")
        shifted = [substitute(e, to_y) for e in prev]
        layer = []
        for j in range(out):
            terms = []
            for g, pat in enumerate(pats2):
                coeffs = [C[g][i][j] for i in range(d)]
                if all(_q(x) == 0 for x in coeffs):
                    continue
                term = IgnTerm(k, pattern_literals(pat), _lin(coeffs, shifted))
                terms.append(term.to_expr() if form == "raw" else reduce_ign_term(term, k))
            for m, mu in enumerate(patsk):
                if _q(B[m][j]) != 0:
                    lits = pattern_literals(mu)
                    terms.append(Scale(_q(B[m][j]), product(EqPred(a, b, op) for a, b, op in lits)))
            body = add_all(terms) if terms else Scale(0, product(EqPred(i, i) for i in range(1, k + 1)))
            layer.append(_pad(_act(p.get("act", "relu"), body), k))
        bundles.append(layer)
    return bundles, k


def _encode_readout(spec, reg):
    base = GnnLayerSpec.from_json(spec.params["base"])
    inner = _encode_into(base, reg)
    bundles, arity = inner
    last = bundles[-1]
    sums = [sum_over(range(1, arity + 1), e) for e in last]
    if spec.params.get("mlp") is not None:
        names = _register(reg, "readout", spec.params["mlp"], len(sums), "readout mlp")
        out = [Apply(n, tuple(sums)) for n in names]
    else:
        out = sums
    return bundles + [out], 0


def _pattern(params) -> tuple[int, list, int]:
    pat = params["pattern"]
    n = int(pat["n"])
    edges = sorted({tuple(sorted((int(u), int(v)))) for u, v in pat.get("edges", [])})
    root = int(params.get("root", 0))
    if not 0 <= root < n:
        raise GnnSpecError(f"root {root} is not a pattern vertex")
    for u, v in edges:
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise GnnSpecError(f"bad pattern edge ({u}, {v})")
    seen, stack = {root}, [root]
    while stack:
        x = stack.pop()
        for u, v in edges:
            for a, b in ((u, v), (v, u)):
                if a == x and b not in seen:
                    seen.add(b)
                    stack.append(b)
    if len(seen) != n:
        raise GnnSpecError("hom_count pattern must be connected")
    return n, edges, root


def hom_count_expr(n: int, edges, root: int = 0) -> Expr:
    """Number of homomorphisms from the pattern into the graph mapping the root to x1."""
    order = [root] + [u for u in range(n) if u != root]
    var = {u: i + 1 for i, u in enumerate(order)}
    body = product([EdgePred(var[u], var[v]) for u, v in edges]) if edges else EqPred(1, 1)
    return sum_over(range(2, n + 1), body)


def _encode_hom(spec, reg):
    from .treewidth import rewrite_min_vars

    n, edges, root = _pattern(spec.params)
    e = hom_count_expr(n, edges, root)
    if spec.params.get("rewrite", True):
        e = rewrite_min_vars(e)
    return [[e]], 1


def _encode_into(spec: GnnLayerSpec, reg: FunctionRegistry):
    try:
        if spec.arch in ("gin", "egin"):
            return _encode_gin(spec, reg, spec.arch == "egin")
        return {
            "graphsage": _encode_graphsage, "gcn": _encode_gcn, "sgc": _encode_sgc, "pna": _encode_pna,
            "chebnet": _encode_chebnet, "fgnn_k": _encode_fgnn, "kgin": _encode_kgin, "ign_layer": _encode_ign,
            "readout": _encode_readout, "hom_count": _encode_hom,
        }[spec.arch](spec, reg)
    except KeyError as exc:
        raise GnnSpecError(f"{spec.arch}: missing parameter {exc}") from None


def encode(spec: GnnLayerSpec, functions: FunctionRegistry | None = None) -> Encoding:
    reg = (functions or DEFAULT_FUNCTIONS).copy()
    bundles, arity = _encode_into(spec, reg)
    enc = Encoding(bundles[-1], reg, DEFAULT_AGGREGATIONS.copy(), arity, bundles)
    if spec.arch == "ign_layer":
        from .expr import variables

        form = spec.params.get("form", "raw")
        other = "reduced" if form == "raw" else "raw"
        twin, _ = _encode_into(GnnLayerSpec(spec.arch, spec.layers, {**spec.params, "form": other}),
                               (functions or DEFAULT_FUNCTIONS).copy())
        counts = {form: max(len(variables(e)) for e in bundles[-1]),
                  other: max(len(variables(e)) for e in twin[-1])}
        enc.meta.update(form=form, raw_var_count=counts["raw"], reduced_var_count=counts["reduced"])
    if spec.arch == "gcn":
        enc.meta["unimplemented"] = "sharper cr^(t+1) bound via a factored degree normalisation"
    return enc


# ---------------------------------------------------------------- dense oracle

def _np_mlp(payload, X: np.ndarray) -> np.ndarray:
    for layer in payload["layers"]:
        W = np.asarray(layer["W"], dtype=float)
        b = np.asarray(layer.get("b", np.zeros(W.shape[1])), dtype=float)
        X = X @ W + b
        act = layer.get("act", "id")
        if act == "relu":
            X = np.maximum(X, 0.0)
        elif act not in ("id", "identity"):
            raise GnnSpecError(f"unknown activation {act!r}")
    return X


def _np_act(name, X):
    if name in (None, "id", "identity"):
        return X
    if name == "relu":
        return np.maximum(X, 0.0)
    if name == "sign":
        return np.sign(X)
    raise GnnSpecError(f"the dense oracle has no activation {name!r}")


def _np_labels(G: Graph) -> np.ndarray:
    return np.array([[float(x) for x in row] for row in G.labels], dtype=float).reshape(G.n, G.ell)


def _np_atomic(G: Graph, k: int) -> np.ndarray:
    A = G.adjacency().astype(float)
    L = _np_labels(G)
    n = G.n
    pairs = list(itertools.combinations(range(k), 2))
    out = np.zeros((n,) * k + (2 * len(pairs) + k * G.ell,))
    for tup in itertools.product(range(n), repeat=k):
        feats = [1.0 if tup[i] == tup[j] else 0.0 for i, j in pairs]
        feats += [A[tup[i], tup[j]] for i, j in pairs]
        feats += [L[v, s] for v in tup for s in range(G.ell)]
        out[tup] = feats
    return out


def _np_fgnn_initial(G: Graph, k: int) -> np.ndarray:
    A = G.adjacency().astype(float)
    L = _np_labels(G)
    ell = G.ell
    out = np.zeros((G.n,) * k + (k * k * (ell + 2),))
    for tup in itertools.product(range(G.n), repeat=k):
        feats = []
        for r in range(k):
            for s in range(k):
                eq = 1.0 if tup[r] == tup[s] else 0.0
                feats += [eq * L[tup[r], j] for j in range(ell)] + [A[tup[r], tup[s]], eq]
        out[tup] = feats
    return out


def _pattern_index(tup, patterns) -> int:
    first: dict = {}
    blocks: dict = {}
    for pos, v in enumerate(tup, start=1):
        blocks.setdefault(first.setdefault(v, len(first)), []).append(pos)
    key = sorted(blocks.values())
    return patterns.index(key)


def oracle_forward(spec: GnnLayerSpec, G: Graph) -> np.ndarray:
    """Direct dense forward pass, shaped (n,) * arity + (features,)."""
    p = spec.params
    arch = spec.arch
    n = G.n
    A = G.adjacency().astype(float)
    deg = A.sum(axis=1)
    if arch in ("gin", "egin", "graphsage", "gcn", "sgc", "pna", "chebnet"):
        F = _np_labels(G)
    if arch in ("gin", "egin"):
        for payload in _layer_list(p, "mlps", spec.layers):
            parts = [F, A @ F] + ([np.tile(F.sum(axis=0), (n, 1))] if arch == "egin" else [])
            F = _np_mlp(payload, np.hstack(parts))
        return F
    if arch == "graphsage":
        aggs = p.get("agg", "sum")
        for t, w in enumerate(_layer_list(p, "weights", spec.layers)):
            agg = aggs[t] if isinstance(aggs, list) else aggs
            rows = []
            for v in range(n):
                nb = F[A[v] > 0]
                if agg == "sum":
                    rows.append(nb.sum(axis=0))
                elif len(nb) == 0:
                    raise GnnSpecError(f"@{agg} of an empty neighbourhood")
                else:
                    rows.append({"max": nb.max(axis=0), "min": nb.min(axis=0), "mean": nb.mean(axis=0),
                                 "stdv": nb.std(axis=0)}[agg])
            M = np.array(rows).reshape(n, F.shape[1])
            b = np.asarray(w.get("b", np.zeros(len(w["V"][0]))), dtype=float)
            F = _np_act(p.get("act", "relu"), F @ np.asarray(w["V"], float) + M @ np.asarray(w["W"], float) + b)
        return F
    if arch == "gcn":
        Dm = np.diag(1.0 / np.sqrt(deg + 1.0))
        prop = Dm @ (np.eye(n) + A) @ Dm
        for w in _layer_list(p, "weights", spec.layers):
            W = np.asarray(w["W"], float)
            b = np.asarray(w.get("b", np.zeros(W.shape[1])), float)
            F = _np_act(p.get("act", "relu"), prop @ F @ W + b)
        return F
    if arch == "sgc":
        power = int(p.get("p", 1))
        return _np_act(p.get("act", "identity"), np.linalg.matrix_power(A, power) @ F @ np.asarray(p["W"], float))
    if arch == "pna":
        s1, s2 = p.get("scalers", ["pna_amp", "pna_att"])
        scal = {"pna_amp": lambda d: np.log(d + 1.0), "pna_att": lambda d: 1.0 / np.log(d + 1.0)}
        for m in _layer_list(p, "mlps", spec.layers):
            msg = _np_mlp(m["pre"], F)
            H = []
            for v in range(n):
                nb = msg[A[v] > 0]
                if len(nb) == 0:
                    raise GnnSpecError("pna needs every vertex to have a neighbour")
                g = np.concatenate([nb.mean(axis=0), nb.std(axis=0), nb.max(axis=0), nb.min(axis=0)])
                H.append(np.concatenate([g, scal[s1](deg[v]) * g, scal[s2](deg[v]) * g]))
            F = _np_mlp(m["post"], np.array(H))
        return F
    if arch == "chebnet":
        order = int(p.get("p", 2))
        c = float(p.get("c", 1))
        if np.any(deg == 0):
            raise GnnSpecError("chebnet needs every vertex to have a neighbour")
        Dm = np.diag(1.0 / np.sqrt(deg))
        Lnorm = np.eye(n) - Dm @ A @ Dm
        Cs = [np.eye(n)]
        if order >= 2:
            Cs.append(c * Lnorm - np.eye(n))
        for _ in range(3, order + 1):
            Cs.append(2 * Cs[1] @ Cs[-1] - Cs[-2])
        for ws in _layer_list(p, "weights", spec.layers):
            F = _np_act(p.get("act", "relu"), sum(Cs[s] @ F @ np.asarray(ws[s], float) for s in range(order)))
        return F
    if arch == "fgnn_k":
        k = int(p.get("k", 2))
        F = _np_fgnn_initial(G, k)
        for m in _layer_list(p, "mlps", spec.layers):
            inner = [_np_mlp(m["ms"][s], F) for s in range(k)]
            h = inner[0].shape[-1]
            agg = np.zeros((n,) * k + (h,))
            for tup in itertools.product(range(n), repeat=k):
                acc = np.zeros(h)
                for w in range(n):
                    term = np.ones(h)
                    for s in range(k):
                        t2 = tup[:s] + (w,) + tup[s + 1:]
                        term = term * inner[s][t2]
                    acc += term
                agg[tup] = acc
            F = _np_mlp(m["m0"], np.concatenate([F, agg], axis=-1))
        return F
    if arch == "kgin":
        k = int(p.get("k", 2))
        F = _np_atomic(G, k)
        for m in _layer_list(p, "mlps", spec.layers):
            inner = _np_mlp(m["m1"], F)
            parts = [F]
            for s in range(k):
                parts.append(np.broadcast_to(inner.sum(axis=s, keepdims=True), inner.shape))
            F = _np_mlp(m["m0"], np.concatenate(parts, axis=-1))
        return F
    if arch == "ign_layer":
        k = int(p.get("k", 2))
        pats2, patsk = equality_patterns(2 * k), equality_patterns(k)
        F = _np_atomic(G, k)
        tuples = list(itertools.product(range(n), repeat=k))
        for w in _layer_list(p, "weights", spec.layers):
            C = np.asarray(w["c"], float)
            out = C.shape[2]
            B = np.asarray(w.get("b", np.zeros((len(patsk), out))), float)
            new = np.zeros((n,) * k + (out,))
            for v in tuples:
                acc = B[_pattern_index(v, patsk)].copy()
                for u in tuples:
                    acc += F[u] @ C[_pattern_index(v + u, pats2)]
                new[v] = acc
            F = _np_act(p.get("act", "relu"), new)
        return F
    if arch == "readout":
        base = GnnLayerSpec.from_json(p["base"])
        F = oracle_forward(base, G)
        arity = F.ndim - 1
        S = F.reshape(-1, F.shape[-1]).sum(axis=0) if arity else F
        return _np_mlp(p["mlp"], S[None, :])[0] if p.get("mlp") is not None else S
    if arch == "hom_count":
        m, edges, root = _pattern(p)
        out = np.zeros((n, 1))
        others = [u for u in range(m) if u != root]
        for v in range(n):
            count = 0
            for images in itertools.product(range(n), repeat=len(others)):
                f = dict(zip(others, images))
                f[root] = v
                count += all(A[f[a], f[b]] > 0 for a, b in edges)
            out[v, 0] = count
        return out
    raise GnnSpecError(f"unsupported architecture {arch!r}")


# ---------------------------------------------------------------- random parameters

def _rand_matrix(rng, rows, cols) -> list:
    return np.round(rng.uniform(-1, 1, size=(rows, cols)), 3).tolist()


def random_mlp(rng, in_dim: int, out_dim: int, hidden: int = 3) -> dict:
    return {"layers": [
        {"W": _rand_matrix(rng, in_dim, hidden), "b": _rand_matrix(rng, 1, hidden)[0], "act": "relu"},
        {"W": _rand_matrix(rng, hidden, out_dim), "b": _rand_matrix(rng, 1, out_dim)[0], "act": "id"},
    ]}


def random_spec(arch: str, layers: int = 2, in_dim: int = 1, seed: int = 0, width: int = 2, **options) -> GnnLayerSpec:
    """Seeded random weights for ``arch`` (options: k, p, c, agg, act, form, pattern, base)."""
    rng = np.random.default_rng(seed)
    k = int(options.get("k", 2))
    p: dict = {"in_dim": in_dim}
    dims = [in_dim] + [width] * layers
    if arch in ("gin", "egin"):
        mult = 2 if arch == "gin" else 3
        p["mlps"] = [random_mlp(rng, mult * dims[t], dims[t + 1]) for t in range(layers)]
    elif arch == "graphsage":
        p["agg"] = options.get("agg", "sum")
        p["act"] = options.get("act", "relu")
        p["weights"] = [{"V": _rand_matrix(rng, dims[t], dims[t + 1]), "W": _rand_matrix(rng, dims[t], dims[t + 1]),
                         "b": _rand_matrix(rng, 1, dims[t + 1])[0]} for t in range(layers)]
    elif arch == "gcn":
        p["act"] = options.get("act", "relu")
        p["weights"] = [{"W": _rand_matrix(rng, dims[t], dims[t + 1]), "b": _rand_matrix(rng, 1, dims[t + 1])[0]}
                        for t in range(layers)]
    elif arch == "sgc":
        p["p"] = int(options.get("p", 3))
        p["act"] = options.get("act", "relu")
        p["W"] = _rand_matrix(rng, in_dim, width)
        layers = 1
    elif arch == "pna":
        p["mlps"] = [{"pre": random_mlp(rng, dims[t], dims[t]), "post": random_mlp(rng, 12 * dims[t], dims[t + 1])}
                     for t in range(layers)]
    elif arch == "chebnet":
        order = int(options.get("p", 3))
        p.update({"p": order, "c": float(options.get("c", 1.0)), "act": options.get("act", "relu")})
        p["weights"] = [[_rand_matrix(rng, dims[t], dims[t + 1]) for _ in range(order)] for t in range(layers)]
    elif arch == "fgnn_k":
        p["k"] = k
        dims = [k * k * (in_dim + 2)] + [width] * layers
        p["mlps"] = [{"m0": random_mlp(rng, dims[t] + width, dims[t + 1]),
                      "ms": [random_mlp(rng, dims[t], width) for _ in range(k)]} for t in range(layers)]
    elif arch == "kgin":
        p["k"] = k
        dims = [k * (k - 1) + k * in_dim] + [width] * layers
        p["mlps"] = [{"m0": random_mlp(rng, dims[t] + k * width, dims[t + 1]), "m1": random_mlp(rng, dims[t], width)}
                     for t in range(layers)]
    elif arch == "ign_layer":
        p.update({"k": k, "act": options.get("act", "relu"), "form": options.get("form", "raw")})
        dims = [k * (k - 1) + k * in_dim] + [width] * layers
        n2, nk = len(equality_patterns(2 * k)), len(equality_patterns(k))
        p["weights"] = [{"c": np.round(rng.uniform(-1, 1, size=(n2, dims[t], dims[t + 1])), 3).tolist(),
                         "b": _rand_matrix(rng, nk, dims[t + 1])} for t in range(layers)]
    elif arch == "readout":
        base = options.get("base") or random_spec("egin", layers, in_dim, seed + 1, width).to_json()
        p = {"base": base, "mlp": random_mlp(rng, width, width)}
    elif arch == "hom_count":
        p = {"pattern": options.get("pattern", {"n": 3, "edges": [[0, 1], [1, 2], [0, 2]]}), "root": 0}
    else:
        raise GnnSpecError(f"unknown architecture {arch!r}")
    return GnnLayerSpec(arch, layers, p)


# ---------------------------------------------------------------- bounds

@dataclass
class BoundReport:
    free: list
    var_count: int
    sum_depth: int
    agg_depth: int
    layer_depths: list
    guarded: bool
    optimized_var_count: int
    optimized_guarded: bool
    bound_kind: str  # cr | vwl | gcr | gwl | wl
    bound_k: int
    bound_t: int | None  # None means unbounded rounds

    @property
    def bound(self) -> str:
        t = "inf" if self.bound_t is None else str(self.bound_t)
        if self.bound_kind in ("cr", "gcr"):
            return f"{self.bound_kind}^({t})"
        return f"{self.bound_kind}_{self.bound_k}^({t})"

    def to_json(self) -> dict:
        return {
            "free": self.free,
            "var_count": self.var_count,
            "sum_depth": self.sum_depth,
            "agg_depth": self.agg_depth,
            "layer_depths": self.layer_depths,
            "guarded": self.guarded,
            "optimized_var_count": self.optimized_var_count,
            "optimized_guarded": self.optimized_guarded,
            "bound": self.bound,
        }


def _derive(free: frozenset, var_count: int, guarded: bool, depth: int) -> tuple:
    if guarded:
        return ("cr", 1, depth)
    if len(free) == 1:
        return ("vwl", max(1, var_count - 1), depth)
    if not free:
        if var_count <= 2:
            return ("gcr", 1, max(depth - 1, 0))
        return ("gwl", var_count - 1, None)
    return ("wl", max(1, var_count - 1), depth)


_RANK = {"cr": 0, "gcr": 0, "vwl": 1, "wl": 1, "gwl": 2}


def bound_report(bundle, rewrite: bool = True) -> BoundReport:
    """Separation bound implied by the bundle's fragment; an upper bound only."""
    from .treewidth import NormalizationError, rewrite_min_vars

    layers = None
    if isinstance(bundle, Encoding):
        layers = bundle.layer_bundles
        bundle = bundle.exprs
    bundle = list(bundle)
    if not bundle:
        raise GnnSpecError("bound_report needs at least one expression")
    free = check_bundle_signature(bundle)
    reps = [analyze(e) for e in bundle]
    var_count = max(r.var_count for r in reps)
    sd = max(r.sum_depth for r in reps)
    ad = max(r.agg_depth for r in reps)
    guarded = all(r.guarded for r in reps)
    best = _derive(free, var_count, guarded, ad)
    opt_vars, opt_guarded = var_count, guarded
    if rewrite and not guarded:
        try:
            rew = [rewrite_min_vars(e) for e in bundle]
        except NormalizationError:
            rew = None
        if rew is not None:
            rr = [analyze(e) for e in rew]
            rv, rg, rd = max(r.var_count for r in rr), all(r.guarded for r in rr), max(r.agg_depth for r in rr)
            cand = _derive(free, rv, rg, rd)
            opt_vars, opt_guarded = min(var_count, rv), rg
            if (_RANK[cand[0]], cand[1], cand[2] if cand[2] is not None else 10 ** 9) < \
                    (_RANK[best[0]], best[1], best[2] if best[2] is not None else 10 ** 9):
                best = cand
    layer_depths = []
    if layers:
        for b in layers:
            rs = [analyze(e) for e in b]
            layer_depths.append([max(r.sum_depth for r in rs), max(r.agg_depth for r in rs)])
    return BoundReport([f"x{i}" for i in sorted(free)], var_count, sd, ad, layer_depths, guarded, opt_vars,
                       opt_guarded, *best)
