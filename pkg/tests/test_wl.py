import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import cr_colours, partition_shape
from tensorlang.graph import complete_graph, cycle_graph, disjoint_union, exhaustive_graphs, path_graph, random_graph
from tensorlang.wl import (
    WLError, color_refinement, graph_label, tuple_label, vertex_label, wl_k, wl_report,
)

C6 = cycle_graph(6)
TWO_TRIANGLES = disjoint_union(cycle_graph(3), cycle_graph(3))


def blocks(shape):
    out: dict = {}
    for i, c in enumerate(shape):
        out.setdefault(c, set()).add(i)
    return sorted(map(frozenset, out.values()), key=min)


def test_cr_on_path():
    tr = color_refinement(path_graph(4))
    assert blocks(tr.partition(1)) == [{0, 3}, {1, 2}]
    assert tr.stable_round == 2
    assert tr.partition(2) == tr.partition(1)


def test_cr_on_cycle():
    tr = color_refinement(C6, 5)
    assert all(tr.class_count(t) == 1 for t in range(6))


def test_cr_with_labels():
    tr = color_refinement(complete_graph(3).with_labels([[1], [1], [2]]), 1)
    assert blocks(tr.partition(0)) == [{0, 1}, {2}]
    assert blocks(tr.partition(1)) == [{0, 1}, {2}]


def test_cr_cannot_separate_c6_from_two_triangles():
    for t in range(4):
        assert graph_label(color_refinement(C6, t), t) == graph_label(color_refinement(TWO_TRIANGLES, t), t)
        assert graph_label(wl_k(C6, 1, t), t) == graph_label(wl_k(TWO_TRIANGLES, 1, t), t)


def test_wl2_separates_c6_from_two_triangles():
    assert graph_label(wl_k(C6, 2, 2), 2) != graph_label(wl_k(TWO_TRIANGLES, 2, 2), 2)


def test_wl1_on_path():
    tr = wl_k(path_graph(4), 1, 1)
    assert blocks(tr.partition(1)) == [{0, 3}, {1, 2}]


def test_wl2_vertex_labels():
    tr = wl_k(path_graph(4), 2, 1)
    lab = [vertex_label(tr, v, 1) for v in range(4)]
    assert lab[0] == lab[3] and lab[1] == lab[2] and lab[0] != lab[1]
    tr = wl_k(C6, 2, 3)
    for t in range(4):
        assert len({vertex_label(tr, v, t) for v in range(6)}) == 1


def test_wl1_vertex_label_is_tuple_label():
    tr = wl_k(path_graph(5), 1, 2)
    for v in range(5):
        assert vertex_label(tr, v, 2) == tuple_label(tr, (v,), 2)


def test_round_zero_graph_label_unlabelled():
    a, b = path_graph(4), complete_graph(4)
    assert graph_label(color_refinement(a, 0), 0) == graph_label(color_refinement(b, 0), 0)
    assert graph_label(color_refinement(a, 0), 0) != graph_label(color_refinement(path_graph(5), 0), 0)


def test_errors():
    tr = color_refinement(path_graph(3), 1)
    with pytest.raises(WLError):
        tr.labels(2)
    with pytest.raises(WLError):
        wl_k(path_graph(3), 0)
    with pytest.raises(WLError):
        wl_k(path_graph(30), 3, memory_cap=1000)
    with pytest.raises(WLError):
        vertex_label(tr, 7, 0)


def test_report_shape():
    rep = wl_report(color_refinement(path_graph(4)))
    assert rep["algo"] == "cr" and rep["rounds"] == [1, 2, 2] and rep["stable_round"] == 2


def _graph(seed, n, labelled=True):
    rng = random.Random(seed)
    G = random_graph(n, rng, rng.choice([0.3, 0.5, 0.7]))
    if labelled:
        G = G.with_labels([[rng.randint(0, 1)] for _ in range(n)])
    return G


def _refines(fine, coarse):
    return len(set(zip(fine, coarse))) == len(set(fine))


@settings(max_examples=60)
@given(st.integers(0, 10_000), st.integers(1, 7))
def test_cr_matches_oracle(seed, n):
    G = _graph(seed, n)
    tr = color_refinement(G, 4)
    for t in range(5):
        assert tr.partition(t) == partition_shape(cr_colours(G, t))


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_refinement_monotone(seed, n):
    G = _graph(seed, n)
    for tr in (color_refinement(G, 4), wl_k(G, 1, 4), wl_k(G, 2, 3)):
        for t in range(tr.t_max):
            assert _refines(tr.labels(t + 1), tr.labels(t))


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_stabilises_within_bounds(seed, n):
    G = _graph(seed, n)
    assert color_refinement(G).stable_round <= max(n, 1)
    assert wl_k(G, 2).stable_round <= n ** 2


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_hierarchy_on_corpus(seed):
    corpus = [_graph(seed * 17 + i, 5) for i in range(6)]
    for t in range(1, 3):
        cr, w1, w2 = [], [], []
        for G in corpus:
            a, b, c = color_refinement(G, t), wl_k(G, 1, t), wl_k(G, 2, t)
            cr += [a.labels(t)[v] for v in range(G.n)]
            w1 += [vertex_label(b, v, t) for v in range(G.n)]
            w2 += [vertex_label(c, v, t) for v in range(G.n)]
        assert _refines(w1, cr)
        assert _refines(w2, w1)


@pytest.mark.parametrize("n", range(1, 6))
def test_graph_level_cr_equals_wl1_exhaustive(n):
    corpus = exhaustive_graphs(n)
    for t in range(4):
        cr = [graph_label(color_refinement(G, t), t) for G in corpus]
        w1 = [graph_label(wl_k(G, 1, t), t) for G in corpus]
        assert partition_shape(cr) == partition_shape(w1)


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_graph_label_invariant_under_permutation(seed, n):
    G = _graph(seed, n)
    perm = list(range(n))
    random.Random(seed).shuffle(perm)
    H = G.permute(perm)
    for t in range(3):
        assert graph_label(color_refinement(G, t), t) == graph_label(color_refinement(H, t), t)
        assert graph_label(wl_k(G, 2, t), t) == graph_label(wl_k(H, 2, t), t)
