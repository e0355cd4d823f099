import pytest
from hypothesis import given, settings, strategies as st

from tensorlang.expr import One, analyze, structural_equal
from tensorlang.graph import cycle_graph, disjoint_union, exhaustive_graphs, path_graph
from tensorlang.parser import parse
from tensorlang.separation import (
    COEFFICIENTS, Partition, SeparationError, check_theorem, induced_partition, random_expr, refines, wl_partition,
)

PAIR = [cycle_graph(6), disjoint_union(cycle_graph(3), cycle_graph(3))]
TAU = parse("sum x1 : sum x2 : sum x3 : E(x1,x2)*E(x2,x3)*E(x1,x3)")


def test_triangle_count_separates_pair():
    assert induced_partition([TAU], PAIR, s=0).class_count == 2


def test_trivial_expression_sets():
    corpus = exhaustive_graphs(4)
    assert induced_partition([One()], corpus, s=1).class_count == 1
    assert induced_partition([], corpus, s=1).class_count == 1
    assert induced_partition([], corpus, s=0).class_count == 1


def test_wl_partitions_of_pair():
    for t in range(4):
        assert wl_partition(PAIR, "cr", t=t, s=0).class_count == 1
    assert wl_partition(PAIR, "wl", k=2, t=2, s=0).class_count == 2
    assert wl_partition(exhaustive_graphs(4), "cr", t=0, s=1).class_count == 1


def test_errors():
    with pytest.raises(SeparationError):
        induced_partition([One()], [path_graph(3), path_graph(4)])
    with pytest.raises(SeparationError):
        induced_partition([parse("E(x1,x2)")], PAIR, s=1)
    with pytest.raises(SeparationError):
        refines(wl_partition(PAIR, s=0), wl_partition(PAIR, s=1))
    with pytest.raises(SeparationError):
        random_expr(3, 2, True, 0)


def _partition(classes):
    items = [(0, (i,)) for i in range(len(classes))]
    return Partition.from_keys(items, classes, 1)


@settings(max_examples=100)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=8), st.data())
def test_refines_is_partial_order(a, data):
    n = len(a)
    b = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    c = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    P, Q, R = _partition(a), _partition(b), _partition(c)
    assert refines(P, P)
    assert refines(_partition(list(range(n))), P)
    assert refines(P, _partition([0] * n))
    if refines(P, Q) and refines(Q, P):
        assert P.classes == Q.classes
    if refines(P, Q) and refines(Q, R):
        assert refines(P, R)


def test_wl2_refines_wl1_on_exhaustive():
    for n in range(2, 6):
        corpus = exhaustive_graphs(n)
        for t in range(3):
            assert refines(wl_partition(corpus, "wl", 2, t), wl_partition(corpus, "wl", 1, t))


def test_adding_expressions_refines():
    corpus = exhaustive_graphs(4)
    exprs = [random_expr(2, 2, False, s) for s in range(6)]
    for i in range(len(exprs)):
        assert refines(induced_partition(exprs[:i + 1], corpus), induced_partition(exprs[:i], corpus))


@settings(max_examples=200)
@given(st.integers(1, 4), st.integers(0, 3), st.booleans(), st.integers(0, 10 ** 6))
def test_random_expr_respects_fragment(k, depth, guarded, seed):
    if guarded:
        k = 2
    e = random_expr(k, depth, guarded, seed)
    rep = analyze(e)
    assert rep.var_count <= k and rep.sum_depth <= depth and rep.guarded == guarded
    assert rep.free_vars == {1} and rep.function_free
    assert structural_equal(e, random_expr(k, depth, guarded, seed))
    for node in _scales(e):
        assert node.coef in COEFFICIENTS


def _scales(e):
    from tensorlang.expr import Scale, nodes

    return [x for x in nodes(e) if isinstance(x, Scale)]


def test_random_expr_is_not_degenerate():
    from tensorlang.parser import render

    distinct = {render(random_expr(3, 2, False, s)) for s in range(500)}
    assert len(distinct) >= 100


def test_closed_samples():
    e = random_expr(3, 2, False, 5, free=0)
    assert analyze(e).free_vars == frozenset()


@pytest.mark.parametrize("t", [1, 2])
def test_thm3_small(t):
    rep = check_theorem("thm3", exhaustive_graphs(4), t=t, n_exprs=60, seed=1)
    assert rep.ok and rep.pairs_checked > 0


def test_thm2_small():
    rep = check_theorem("thm2", exhaustive_graphs(4), k=2, t=2, n_exprs=60, seed=2)
    assert rep.ok


@pytest.mark.parametrize("tag", ["thm4_1", "thm4_2"])
def test_graph_level_theorems(tag):
    for t in range(3):
        rep = check_theorem(tag, PAIR, k=2, t=t, n_exprs=30, seed=3)
        assert rep.ok, rep.to_json()["violations"][:1]


def test_threads_do_not_change_results():
    corpus = exhaustive_graphs(4)
    exprs = [random_expr(2, 2, False, s) for s in range(10)]
    assert induced_partition(exprs, corpus, threads=3).classes == induced_partition(exprs, corpus).classes


def test_report_json():
    rep = check_theorem("thm3", exhaustive_graphs(3), t=1, n_exprs=10, seed=0)
    out = rep.to_json()
    assert out["theorem"] == "thm3" and out["violations"] == []


def test_float_mode_partition():
    corpus = exhaustive_graphs(4)
    exprs = [random_expr(2, 2, False, s) for s in range(5)]
    assert induced_partition(exprs, corpus, mode="float").classes == induced_partition(exprs, corpus).classes
