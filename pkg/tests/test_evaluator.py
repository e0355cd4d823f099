import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import triangle_count, walks2
from strategies import expressions, function_free
from tensorlang.evaluator import evaluate, evaluate_bundle
from tensorlang.expr import (
    Apply, EdgePred, EqPred, GuardedAgg, LabelPred, One, Product, SumAgg, UncondAgg, free_vars,
)
from tensorlang.graph import complete_graph, cycle_graph, disjoint_union, path_graph, random_graph
from tensorlang.parser import parse
from tensorlang.registry import DEFAULT_FUNCTIONS, EvaluationError

THETA = parse("sum x2 : sum x3 : E(x1,x2)*E(x2,x3)")
TAU = parse("sum x1 : sum x2 : sum x3 : E(x1,x2)*E(x2,x3)*E(x1,x3)")


def test_walks_on_path():
    G = path_graph(4)
    assert [evaluate(THETA, G, {1: v}) for v in range(4)] == [walks2(G, v) for v in range(4)]
    assert evaluate(THETA, G, {1: 0}) == 2 and evaluate(THETA, G, {1: 1}) == 3


@pytest.mark.parametrize("G", [complete_graph(3), cycle_graph(6), disjoint_union(cycle_graph(3), cycle_graph(3))])
def test_triangle_expression(G):
    assert evaluate(TAU, G) == triangle_count(G)


def test_equality_literals():
    G = path_graph(3)
    for v in range(3):
        assert evaluate(EqPred(1, 1), G, {1: v}) == 1
        assert evaluate(EqPred(1, 1, "neq"), G, {1: v}) == 0


def test_bundle_examples():
    G = path_graph(4).with_labels([[1], [2], [3], [1]])
    assert evaluate_bundle([LabelPred(1, 1)], G, [(0,), (1,)]) == [[1], [2]]
    assert evaluate_bundle([TAU], complete_graph(3), [()]) == [[6]]
    assert evaluate_bundle([LabelPred(1, 1)], G, []) == []


def test_bundle_signature_mismatch():
    with pytest.raises(EvaluationError):
        evaluate_bundle([LabelPred(1, 1), One()], path_graph(2), [(0,)])


def test_unassigned_free_variable():
    with pytest.raises(EvaluationError):
        evaluate(EdgePred(1, 2), path_graph(2), {1: 0})


def test_label_on_unlabelled_graph():
    with pytest.raises(EvaluationError):
        evaluate(LabelPred(1, 1), path_graph(2), {1: 0})


def test_empty_multiset_needs_an_identity():
    G = disjoint_union(path_graph(2), path_graph(1))
    e = GuardedAgg("max", 1, 2, EqPred(2, 2))
    with pytest.raises(EvaluationError):
        evaluate(e, G, {1: 2})
    assert evaluate(GuardedAgg("sum", 1, 2, EqPred(2, 2)), G, {1: 2}) == 0


def test_stdv_is_population():
    G = path_graph(3).with_labels([[1], [0], [3]])
    e = GuardedAgg("stdv", 1, 2, LabelPred(1, 2))
    assert evaluate(e, G, {1: 1}, mode="float") == pytest.approx(1.0)
    with pytest.raises(EvaluationError):
        evaluate(e, G, {1: 1}, mode="exact")


def test_mlp_functions_are_float_only():
    reg = DEFAULT_FUNCTIONS.copy()
    names = reg.register_mlp("m", {"layers": [{"W": [[1, -1]], "b": [0, 1], "act": "relu"}]})
    assert names == ["m.0", "m.1"]
    G = path_graph(2).with_labels([[2], [3]])
    e = Apply("m.1", (LabelPred(1, 1),))
    assert evaluate(e, G, {1: 0}, "float", reg) == 0.0
    with pytest.raises(EvaluationError):
        evaluate(e, G, {1: 0}, "exact", reg)


def _labelled(seed, n):
    rng = random.Random(seed)
    return random_graph(n, rng).with_labels([[rng.randint(0, 2), rng.choice([0, 1])] for _ in range(n)])


def _tuples(e, n):
    width = max(free_vars(e), default=0)
    return list(itertools.product(range(n), repeat=width))


@settings(max_examples=200)
@given(expressions, st.integers(0, 10_000))
def test_naive_and_table_agree(e, seed):
    G = _labelled(seed, 4)
    tuples = _tuples(e, G.n)
    try:
        naive = evaluate_bundle([e], G, tuples, "float", method="naive")
    except EvaluationError:
        with pytest.raises(EvaluationError):
            evaluate_bundle([e], G, tuples, "float", method="table")
        return
    table = evaluate_bundle([e], G, tuples, "float", method="table")
    for a, b in zip(naive, table):
        assert a[0] == pytest.approx(b[0], rel=1e-12, abs=1e-12)


@settings(max_examples=200)
@given(function_free(2, 10), st.integers(0, 10_000))
def test_exact_routes_agree(e, seed):
    G = _labelled(seed, 4)
    tuples = _tuples(e, G.n)
    assert evaluate_bundle([e], G, tuples, "exact", method="naive") == \
        evaluate_bundle([e], G, tuples, "exact", method="table")


@settings(max_examples=200)
@given(function_free(2, 10), st.integers(0, 10_000), st.integers(2, 6))
def test_equivariance(e, seed, n):
    rng = random.Random(seed)
    G = _labelled(seed, n)
    perm = list(range(n))
    rng.shuffle(perm)
    H = G.permute(perm)
    nu = {v: rng.randrange(n) for v in free_vars(e)}
    assert evaluate(e, H, {v: perm[x] for v, x in nu.items()}) == evaluate(e, G, nu)


@settings(max_examples=100)
@given(function_free(2, 10), st.integers(0, 10_000))
def test_float_matches_exact(e, seed):
    G = _labelled(seed, 6)
    nu = {v: (v * 7 + seed) % 6 for v in free_vars(e)}
    exact = evaluate(e, G, nu, "exact")
    assert isinstance(exact, Fraction)
    assert math.isclose(evaluate(e, G, nu, "float"), float(exact), rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=100)
@given(st.integers(0, 10_000))
def test_guarded_sum_equals_edge_product(seed):
    G = _labelled(seed, 5)
    body = LabelPred(1, 2) if seed % 2 else SumAgg(1, Product(EdgePred(2, 1), LabelPred(2, 1)))
    guarded = GuardedAgg("sum", 1, 2, body)
    plain = SumAgg(2, Product(EdgePred(1, 2), body))
    for v in range(G.n):
        assert evaluate(guarded, G, {1: v}) == evaluate(plain, G, {1: v})


def test_conditional_mean_differs_from_edge_product():
    G = path_graph(4)
    cond = GuardedAgg("mean", 1, 2, EqPred(2, 2))
    uncond = UncondAgg("mean", 2, Product(EqPred(2, 2), EdgePred(1, 2)))
    for v in range(4):
        assert evaluate(cond, G, {1: v}) == 1
        assert evaluate(uncond, G, {1: v}) == Fraction(G.degree(v), 4)
