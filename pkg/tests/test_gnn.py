import itertools
import random

import numpy as np
import pytest

from oracles import hom_count
from tensorlang.expr import analyze, free_vars, sum_depth
from tensorlang.gnn import (
    ARCHITECTURES, GnnLayerSpec, GnnSpecError, bound_report, encode, hom_count_expr, oracle_forward, random_spec,
)
from tensorlang.graph import atomic_type, complete_graph, cycle_graph, path_graph, random_graph
from tensorlang.parser import parse

ID = "id"


def _graphs(count, seed, n_max=8, no_isolated=False):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(2, n_max)
        G = random_graph(n, rng, 0.5)
        if no_isolated and any(G.degree(v) == 0 for v in range(n)):
            continue
        out.append(G.with_labels([[rng.randint(0, 2)] for _ in range(n)]))
    return out


def _close(a, b, rel=1e-6):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    assert a.shape == b.shape
    assert np.all(np.abs(a - b) <= rel * np.maximum(1.0, np.abs(b)))


CASES = [
    ("gin", {}, False),
    ("egin", {}, False),
    ("gcn", {}, False),
    ("sgc", {"p": 3}, False),
    ("graphsage", {"agg": "sum"}, False),
    ("graphsage", {"agg": "mean"}, True),
    ("graphsage", {"agg": "max"}, True),
    ("pna", {}, True),
    ("chebnet", {"p": 3, "c": 1.0}, True),
    ("fgnn_k", {"k": 2}, False),
    ("kgin", {"k": 2}, False),
    ("ign_layer", {"k": 2, "form": "reduced"}, False),
    ("readout", {}, False),
    ("hom_count", {}, False),
]


@pytest.mark.parametrize("arch,options,no_isolated", CASES, ids=[c[0] + str(c[1]) for c in CASES])
def test_encoding_matches_dense_forward(arch, options, no_isolated):
    spec = random_spec(arch, layers=2, seed=11, **options)
    enc = encode(spec)
    for G in _graphs(4, 5, n_max=6, no_isolated=no_isolated):
        _close(enc.evaluate(G), oracle_forward(spec, G))


def test_raw_ign_matches_dense_forward():
    spec = random_spec("ign_layer", layers=1, seed=4, k=2, form="raw")
    enc = encode(spec)
    assert enc.meta["raw_var_count"] == 4 and enc.meta["reduced_var_count"] == 2
    for G in _graphs(3, 9, n_max=5):
        _close(enc.evaluate(G), oracle_forward(spec, G))


def test_every_architecture_is_covered():
    assert {c[0] for c in CASES} | {"ign_layer"} == set(ARCHITECTURES)


def _gin_example():
    mlp = {"layers": [{"W": [[1], [2]], "b": [0], "act": ID}]}
    return GnnLayerSpec("gin", 1, {"in_dim": 1, "mlps": [mlp]})


def test_gin_hand_example():
    G = path_graph(3).with_labels([[1], [2], [3]])
    spec = _gin_example()
    assert encode(spec).evaluate(G)[:, 0].tolist() == [5, 10, 7]
    assert oracle_forward(spec, G)[:, 0].tolist() == [5, 10, 7]


def test_gcn_on_triangle():
    spec = GnnLayerSpec("gcn", 1, {"in_dim": 1, "act": ID, "weights": [{"W": [[1]], "b": [0]}]})
    G = complete_graph(3).with_labels([[1], [1], [1]])
    _close(encode(spec).evaluate(G)[:, 0], [1, 1, 1])
    _close(oracle_forward(spec, G)[:, 0], [1, 1, 1])
    assert "unimplemented" in encode(spec).meta


def test_triangle_homomorphisms_on_k4():
    spec = GnnLayerSpec("hom_count", 0, {"pattern": {"n": 3, "edges": [[0, 1], [1, 2], [0, 2]]}, "root": 0})
    assert encode(spec).evaluate(complete_graph(4), mode="exact")[:, 0].tolist() == [6] * 4


@pytest.mark.parametrize("pattern", [
    (3, [(0, 1), (1, 2), (0, 2)], 0),
    (3, [(0, 1), (1, 2)], 1),
    (4, [(0, 1), (1, 2), (2, 3), (0, 3)], 0),
    (4, [(0, 1), (0, 2), (0, 3)], 2),
])
def test_hom_count_against_brute_force(pattern):
    n, edges, root = pattern
    e = hom_count_expr(n, edges, root)
    enc = encode(GnnLayerSpec("hom_count", 0, {"pattern": {"n": n, "edges": edges}, "root": root}))
    for G in _graphs(5, n, n_max=6) + [cycle_graph(5)]:
        want = [hom_count(n, edges, G, root, v) for v in range(G.n)]
        assert enc.evaluate(G, mode="exact")[:, 0].tolist() == want
    assert analyze(enc.exprs[0]).var_count <= analyze(e).var_count


def test_fgnn_zero_layers_is_atomic_type():
    ell = 1
    enc = encode(GnnLayerSpec("fgnn_k", 0, {"k": 2, "in_dim": ell}))
    for G in _graphs(3, 2, n_max=5):
        T = enc.evaluate(G, mode="exact")
        for u, v in itertools.product(range(G.n), repeat=2):
            feat = T[u, v]
            phi = lambda r, s, j: feat[((r - 1) * 2 + (s - 1)) * (ell + 2) + (j - 1)]
            projected = (phi(1, 2, ell + 2), phi(1, 2, ell + 1), phi(1, 1, 1), phi(2, 2, 1))
            assert projected == atomic_type(G, (u, v))


def test_fragment_conformance():
    for t in (1, 2, 3):
        rep = analyze(encode(random_spec("gin", t, seed=t)).exprs[0])
        assert rep.guarded and rep.sum_depth == t
        rep = analyze(encode(random_spec("egin", t, seed=t)).exprs[0])
        assert not rep.guarded and rep.var_count == 2 and rep.sum_depth == t
        for k in (2, 3):
            rep = analyze(encode(random_spec("fgnn_k", t, seed=t, k=k)).exprs[0])
            assert rep.var_count == k + 1 and rep.sum_depth == t
            rep = analyze(encode(random_spec("kgin", t, seed=t, k=k)).exprs[0])
            assert rep.var_count == k and rep.sum_depth == t


@pytest.mark.parametrize("arch", ["gin", "egin", "gcn", "sgc", "fgnn_k", "kgin"])
def test_readout_adds_one_summation(arch):
    base = random_spec(arch, 2, seed=3)
    spec = GnnLayerSpec("readout", 2, {"base": base.to_json()})
    inner, outer = encode(base).exprs, encode(spec).exprs
    assert all(free_vars(e) == frozenset() for e in outer)
    extra = encode(base).arity
    assert max(map(sum_depth, outer)) == max(map(sum_depth, inner)) + extra


def test_bound_reports():
    assert bound_report(encode(random_spec("gin", 2))).bound == "cr^(2)"
    assert bound_report(encode(random_spec("egin", 2))).bound == "vwl_1^(2)"
    assert bound_report(encode(random_spec("readout", 2))).bound == "gcr^(2)"
    assert bound_report(encode(random_spec("fgnn_k", 2, k=2))).bound == "wl_2^(2)"
    rep = bound_report(encode(random_spec("sgc", 1, p=3)))
    assert (rep.var_count, rep.optimized_var_count, rep.optimized_guarded, rep.bound) == (4, 2, True, "cr^(3)")
    chain = parse("sum x2 : sum x3 : sum x4 : E(x1,x2)*E(x2,x3)*E(x3,x4)")
    rep = bound_report([chain])
    assert rep.var_count == 4 and rep.bound == "cr^(3)"
    closed = parse("sum x1 : sum x2 : sum x3 : E(x1,x2)*E(x2,x3)*E(x1,x3)")
    assert bound_report([closed]).bound == "gwl_2^(inf)"


def test_spec_errors():
    with pytest.raises(GnnSpecError):
        GnnLayerSpec("gat", 1)
    with pytest.raises(GnnSpecError):
        GnnLayerSpec("gin", -1)
    bad = {"in_dim": 1, "mlps": [{"layers": [{"W": [[1], [2], [3]], "b": [0], "act": ID}]}]}
    with pytest.raises(GnnSpecError):
        encode(GnnLayerSpec("gin", 1, bad))
    with pytest.raises(GnnSpecError):
        encode(GnnLayerSpec("gin", 2, {"in_dim": 1, "mlps": []}))
    with pytest.raises(GnnSpecError):
        encode(GnnLayerSpec("hom_count", 0, {"pattern": {"n": 4, "edges": [[0, 1], [2, 3]]}}))
    with pytest.raises(GnnSpecError):
        encode(GnnLayerSpec("gcn", 1, {"in_dim": 1}))
    with pytest.raises(GnnSpecError):
        bound_report([])


def test_spec_json_round_trip():
    spec = random_spec("pna", 2, seed=8)
    assert GnnLayerSpec.from_json(spec.to_json()) == spec
