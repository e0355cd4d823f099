import itertools
from fractions import Fraction

import pytest

from formulas import E12, GUARDED, LIBRARY, labellings
from oracles import adjacency, count_at_least, lagrange_value
from tensorlang.evaluator import evaluate, evaluate_bundle
from tensorlang.expr import (
    Add, EdgePred, EqPred, LabelPred, One, Product, Scale, SumAgg, is_guarded_fragment, structural_equal, sum_depth,
)
from tensorlang.graph import complete_graph, cycle_graph, disjoint_union, exhaustive_graphs, path_graph
from tensorlang.logic import (
    CountExists, DistinguisherCache, Label, LabelEq, LogicError, Not, VarEq, eval_formula,
    formula_free_vars, hat_translate, interpolation_poly, is_guarded_formula, lagrange, quantifier_rank,
    synthesize_cr_distinguisher,
)
from tensorlang.wl import color_refinement


def test_formula_basics():
    P4 = path_graph(4)
    deg2 = CountExists(2, 2, E12)
    assert eval_formula(deg2, P4, {1: 1}) and not eval_formula(deg2, P4, {1: 0})
    assert eval_formula(VarEq(1, 1), P4, {1: 3})
    with pytest.raises(LogicError):
        eval_formula(E12, P4, {1: 0})
    assert formula_free_vars(LIBRARY["has_triangle"]) == frozenset()
    assert quantifier_rank(LIBRARY["has_triangle"]) == 3


def test_formula_semantics_against_adjacency():
    for n in range(1, 5):
        for G in exhaustive_graphs(n):
            A = adjacency(G)
            for v in range(n):
                d = sum(A[v])
                assert eval_formula(LIBRARY["deg_ge2"], G, {1: v}) == (d >= 2)
                assert eval_formula(LIBRARY["deg_eq1"], G, {1: v}) == (d == 1)
            tri = any(A[a][b] and A[b][c] and A[a][c] for a, b, c in itertools.product(range(n), repeat=3))
            assert eval_formula(LIBRARY["has_triangle"], G) == tri


def test_interpolation_examples():
    assert interpolation_poly(1, 2).coeffs == (0, Fraction(3, 2), Fraction(-1, 2))
    assert interpolation_poly(0, 5).coeffs == (1,)
    for n in range(1, 9):
        p = interpolation_poly(n, n, "exactly")
        assert [p(j) for j in range(n + 1)] == [int(j == n) for j in range(n + 1)]
    with pytest.raises(LogicError):
        interpolation_poly(3, 2)
    with pytest.raises(LogicError):
        interpolation_poly(1, 2, "most")


@pytest.mark.parametrize("n", range(1, 9))
def test_interpolation_against_direct_lagrange(n):
    nodes = list(range(n + 1))
    for m in range(n + 1):
        for kind, target in (("at_least", lambda x: count_at_least(m, x)), ("exactly", lambda x: int(x == m))):
            p = interpolation_poly(m, n, kind)
            assert p.degree <= n
            values = [target(x) for x in nodes]
            assert [p(x) for x in nodes] == values
            for x in (n + 1, n + 2, -1):
                assert p(x) == lagrange_value(nodes, values, x)
    assert lagrange([2, 2, 2]).coeffs == (2,)


def test_hat_examples():
    assert structural_equal(hat_translate(VarEq(1, 2), 3), EqPred(1, 2))
    assert structural_equal(hat_translate(Not(Label(1, 1)), 3), Add(One(), Scale(-1, LabelPred(1, 1))))
    S = SumAgg(2, EdgePred(1, 2))
    expected = Add(Scale(Fraction(3, 2), S), Scale(Fraction(-1, 2), Product(S, S)))
    out = hat_translate(CountExists(1, 2, E12), 2)
    assert structural_equal(out, expected)
    for G in exhaustive_graphs(2):
        for v in range(2):
            assert evaluate(out, G, {1: v}) == int(G.degree(v) >= 1)


def test_library_size():
    assert len(LIBRARY) >= 20


@pytest.mark.parametrize("name", sorted(LIBRARY))
def test_hat_soundness(name):
    f = LIBRARY[name]
    width = max(formula_free_vars(f), default=0)
    for n in range(1, 6):
        hat = hat_translate(f, n)
        assert sum_depth(hat) == quantifier_rank(f)
        for G0 in exhaustive_graphs(n):
            for labels in labellings(n):
                G = G0.with_labels(labels)
                tuples = list(itertools.product(range(n), repeat=width))
                got = evaluate_bundle([hat], G, tuples)
                want = [[int(eval_formula(f, G, dict(enumerate(t, start=1))))] for t in tuples]
                assert got == want


@pytest.mark.parametrize("name", sorted(LIBRARY))
def test_guardedness_carries_over(name):
    f = LIBRARY[name]
    assert is_guarded_formula(f) == (name in GUARDED)
    if name in GUARDED:
        assert is_guarded_fragment(hat_translate(f, 4))


def test_real_valued_label_test():
    G = path_graph(3).with_labels([[Fraction(1, 2)], [3], [-1]])
    values = {1: [Fraction(1, 2), 3, -1]}
    for r in values[1]:
        hat = hat_translate(LabelEq(1, r, 1), 3, values)
        assert [evaluate(hat, G, {1: v}) for v in range(3)] == [int(G.labels[v][0] == r) for v in range(3)]


def test_synth_path_vs_cycle():
    P4, C4 = path_graph(4), cycle_graph(4)
    e = synthesize_cr_distinguisher(P4, 0, C4, 0, 1)
    assert e is not None and is_guarded_fragment(e) and sum_depth(e) <= 1
    assert evaluate(e, P4, {1: 0}) == 1 and evaluate(e, C4, {1: 0}) == 0


def test_synth_none_when_cr_agrees():
    C6, T = cycle_graph(6), disjoint_union(cycle_graph(3), cycle_graph(3))
    for t in range(4):
        assert synthesize_cr_distinguisher(C6, 0, T, 0, t) is None
    P5 = path_graph(5)
    assert synthesize_cr_distinguisher(P5, 1, P5, 1, 3) is None


def test_synth_errors():
    with pytest.raises(LogicError):
        synthesize_cr_distinguisher(path_graph(3), 0, path_graph(4), 0, 1)
    with pytest.raises(LogicError):
        synthesize_cr_distinguisher(path_graph(3), 0, path_graph(3).with_labels([[1], [0], [0]]), 0, 1)


def test_synth_with_labels():
    G = complete_graph(3).with_labels([[1], [1], [2]])
    H = complete_graph(3).with_labels([[1], [2], [2]])
    e = synthesize_cr_distinguisher(G, 0, H, 0, 1)
    assert evaluate(e, G, {1: 0}) == 1 and evaluate(e, H, {1: 0}) == 0


@pytest.mark.parametrize("n", [3, 4])
def test_synth_complete_on_exhaustive(n):
    t = 2
    graphs = exhaustive_graphs(n)
    cache = DistinguisherCache()
    items = [(G, v, color_refinement(G, t)) for G in graphs for v in range(n)]
    checked = 0
    for (G, v, tg), (H, w, th) in itertools.permutations(items, 2):
        differ = any(tg.rounds[r][v] != th.rounds[r][w] for r in range(t + 1))
        e = synthesize_cr_distinguisher(G, v, H, w, t, cache)
        if not differ:
            assert e is None
            continue
        checked += 1
        assert sum_depth(e) <= t and is_guarded_fragment(e)
        assert evaluate(e, G, {1: v}) == 1 and evaluate(e, H, {1: w}) == 0
    assert checked > 0
