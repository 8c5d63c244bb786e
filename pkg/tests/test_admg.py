import random

import pytest
from hypothesis import given, settings, strategies as st

from recant import Admg, GraphError

from gen import figures, random_dag

FIGS = figures()


def test_parents_of_outcome_in_longitudinal_figure():
    g = FIGS["time_med"].graph
    assert g.parents(["y"]) == ("a0", "l1", "m1", "a1", "l2", "m2")


def test_parents_empty_set():
    g = FIGS["triangle_a"].graph
    assert g.parents([]) == ()


def test_parents_matches_edge_scan():
    rng = random.Random(0)
    for _ in range(25):
        g = random_dag(rng, rng.randint(2, 7))
        for v in g.vertices:
            scan = sorted({t for t, h in g.directed if h == v}, key=g.index)
            assert g.parents([v]) == tuple(scan)


def test_ancestors_in_latent_variant():
    g = FIGS["time_med_latent"].graph
    assert set(g.ancestors(["m1"])) == {"m1", "l1", "a0", "u"}


def test_ancestors_reflexive_on_edgeless_graph():
    g = Admg(["x", "y", "z"])
    assert g.ancestors(["y"]) == ("y",)


def test_every_vertex_is_ancestor_of_outcome():
    g = FIGS["time_med"].graph
    assert g.ancestors(["y"]) == g.vertices


def test_ancestors_monotone_and_idempotent():
    rng = random.Random(1)
    for _ in range(25):
        g = random_dag(rng, rng.randint(2, 7))
        vs = list(g.vertices)
        w = set(rng.sample(vs, rng.randint(1, len(vs))))
        w2 = w | {rng.choice(vs)}
        anW, anW2 = set(g.ancestors(w)), set(g.ancestors(w2))
        assert anW <= anW2
        assert set(g.ancestors(anW)) == anW


def test_subgraph_of_confounded_triangle():
    g = FIGS["time_med"].graph
    s = g.subgraph(["l1", "l2", "y"])
    assert set(s.directed) == {("l1", "l2"), ("l1", "y"), ("l2", "y")}
    assert set(s.bidirected) == {("l1", "l2"), ("l1", "y"), ("l2", "y")}


def test_subgraph_identity_and_composition():
    rng = random.Random(2)
    for _ in range(20):
        g = random_dag(rng, rng.randint(2, 7))
        assert g.subgraph(g.vertices) == g
        vs = list(g.vertices)
        s = rng.sample(vs, rng.randint(1, len(vs)))
        t = rng.sample(s, rng.randint(1, len(s)))
        assert g.subgraph(s).subgraph(t) == g.subgraph(t)


def test_districts_of_longitudinal_figure():
    g = FIGS["time_med"].graph
    assert g.districts() == [("a0",), ("l1", "l2", "y"), ("m1",), ("a1",), ("m2",)]
    assert g.district_of("y") == ("l1", "l2", "y")


def test_districts_singletons_without_bidirected_edges():
    g = FIGS["triangle_b"].graph
    assert g.districts() == [("c",), ("a",), ("m",), ("y",)]


def _union_find_districts(g: Admg):
    parent = {v: v for v in g.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in g.bidirected:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups = {}
    for v in g.vertices:
        groups.setdefault(find(v), []).append(v)
    return {frozenset(grp) for grp in groups.values()}


def test_districts_match_union_find_oracle():
    rng = random.Random(3)
    for _ in range(25):
        g = random_dag(rng, rng.randint(2, 8), p_bi=0.4)
        assert {frozenset(d) for d in g.districts()} == _union_find_districts(g)


def test_districts_partition_vertices():
    rng = random.Random(4)
    for _ in range(25):
        g = random_dag(rng, rng.randint(1, 8), p_bi=0.4)
        ds = g.districts()
        flat = [v for d in ds for v in d]
        assert sorted(flat) == sorted(g.vertices)
        assert len(flat) == len(set(flat))


def test_subgraph_districts_refine_traces():
    rng = random.Random(5)
    for _ in range(20):
        g = random_dag(rng, rng.randint(2, 7), p_bi=0.5)
        vs = list(g.vertices)
        s = rng.sample(vs, rng.randint(1, len(vs)))
        outer = {frozenset(d) for d in g.districts()}
        for d in g.subgraph(s).districts():
            assert any(set(d) <= o for o in outer)


def test_district_sinks_chain():
    g = Admg(
        ["v1", "v2", "v3"],
        [("v1", "v2"), ("v2", "v3")],
        [("v1", "v2"), ("v2", "v3")],
    )
    assert g.district_sinks(("v1", "v2", "v3")) == ("v3",)


def test_district_sinks_in_longitudinal_figure():
    g = FIGS["time_med"].graph
    assert g.district_sinks(("l1", "l2", "y")) == ("y",)


def test_district_sinks_no_internal_edges():
    g = Admg(["x", "y", "z"], [], [("x", "y"), ("y", "z")])
    assert g.district_sinks(("x", "y", "z")) == ("x", "y", "z")


def test_topological_order_forced_and_stable():
    g = FIGS["triangle_a"].graph
    assert g.topological_order() == ("a", "m", "y")
    g2 = Admg(["x", "y", "z"])
    assert g2.topological_order() == ("x", "y", "z")


def test_topological_order_respects_edges():
    rng = random.Random(6)
    for _ in range(25):
        g = random_dag(rng, rng.randint(2, 8))
        pos = {v: i for i, v in enumerate(g.topological_order())}
        assert all(pos[t] < pos[h] for t, h in g.directed)


def test_cycle_rejected():
    with pytest.raises(GraphError):
        Admg(["a", "b"], [("a", "b"), ("b", "a")])


def test_bad_edges_rejected():
    with pytest.raises(GraphError):
        Admg(["a"], [("a", "a")])
    with pytest.raises(GraphError):
        Admg(["a", "b"], [("a", "b"), ("a", "b")])
    with pytest.raises(GraphError):
        Admg(["a", "b"], [], [("a", "b"), ("b", "a")])
    with pytest.raises(GraphError):
        Admg(["a"], [("a", "zzz")])


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_district_of_equals_bidirected_reachability(data):
    n = data.draw(st.integers(2, 6))
    names = [f"v{i}" for i in range(n)]
    pairs = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n)]
    bi = data.draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    g = Admg(names, [], bi)
    v = data.draw(st.sampled_from(names))
    # breadth-first reachability over the bidirected skeleton
    seen, stack = {v}, [v]
    while stack:
        u = stack.pop()
        for w in g.siblings_of(u):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    assert set(g.district_of(v)) == seen
