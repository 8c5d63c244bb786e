"""Shared fixtures: the worked figures and random instance generators."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from recant import Admg, DiscreteScm, Noise, bundle_all, make_bundle
from recant.scm import tabulate

TIME_MED_DIRECTED = [
    ("a0", "l1"),
    ("a0", "m1"),
    ("a0", "y"),
    ("l1", "m1"),
    ("l1", "l2"),
    ("l1", "y"),
    ("m1", "a1"),
    ("m1", "m2"),
    ("m1", "y"),
    ("a1", "l2"),
    ("a1", "m2"),
    ("a1", "y"),
    ("l2", "m2"),
    ("l2", "y"),
    ("m2", "y"),
]
TIME_MED_BIDIRECTED = [("l1", "l2"), ("l1", "y"), ("l2", "y")]
TIME_MED_GREEN = [("a0", "m1", "y"), ("a0", "m1", "m2", "y"), ("a1", "m2", "y")]


@dataclass
class Figure:
    graph: Admg
    treatments: tuple
    outcomes: tuple
    paths: object


def figures() -> dict:
    out = {}
    tri = Admg(["a", "m", "y"], [("a", "m"), ("m", "y"), ("a", "y")])
    out["triangle_a"] = Figure(tri, ("a",), ("y",), (("a", "y"),))
    tri_b = Admg(
        ["c", "a", "m", "y"],
        [("c", "a"), ("c", "m"), ("c", "y"), ("a", "m"), ("m", "y"), ("a", "y")],
    )
    out["triangle_b"] = Figure(tri_b, ("a",), ("y",), "all")
    verma = Admg(
        ["a", "l", "m", "y"],
        [("a", "l"), ("l", "m"), ("a", "m"), ("m", "y")],
        [("l", "y")],
    )
    out["verma"] = Figure(verma, ("a",), ("y",), (("a", "l", "m", "y"),))
    tm = Admg(
        ["a0", "l1", "m1", "a1", "l2", "m2", "y"], TIME_MED_DIRECTED, TIME_MED_BIDIRECTED
    )
    out["time_med"] = Figure(tm, ("a0", "a1"), ("y",), tuple(TIME_MED_GREEN))
    fa = Admg(
        ["a0", "l1", "m1", "a1", "l2", "m2", "y"],
        TIME_MED_DIRECTED,
        TIME_MED_BIDIRECTED + [("l2", "m2")],
    )
    out["time_med_fail_a"] = Figure(fa, ("a0", "a1"), ("y",), tuple(TIME_MED_GREEN))
    fb = Admg(
        ["a0", "l1", "m1", "a1", "l2", "m2", "y"],
        TIME_MED_DIRECTED + [("m1", "l2")],
        TIME_MED_BIDIRECTED,
    )
    out["time_med_fail_b"] = Figure(fb, ("a0", "a1"), ("y",), tuple(TIME_MED_GREEN))
    # DAG-with-latent variant of the longitudinal figure (u explicit)
    tm_lat = Admg(
        ["a0", "u", "l1", "m1", "a1", "l2", "m2", "y"],
        TIME_MED_DIRECTED + [("a0", "u"), ("u", "l1"), ("u", "l2"), ("u", "y")],
    )
    out["time_med_latent"] = Figure(tm_lat, ("a0", "a1"), ("y",), tuple(TIME_MED_GREEN))
    return out


def bundle_of(fig: Figure):
    if fig.paths == "all":
        return bundle_all(fig.graph, fig.treatments, fig.outcomes)
    return make_bundle(fig.graph, fig.treatments, fig.outcomes, fig.paths)


# ---------------------------------------------------------------------------
# random instances


def random_dag(rng: random.Random, n: int, p_edge=0.5, p_bi=0.2) -> Admg:
    names = [f"v{i}" for i in range(n)]
    directed = [
        (names[i], names[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p_edge
    ]
    bidirected = [
        (names[i], names[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p_bi
    ]
    return Admg(names, directed, bidirected)


def random_positive_scm(g: Admg, rng: random.Random, binary=True) -> DiscreteScm:
    """Random rational SCM with an own fair/biased noise bit mixed into every
    mechanism, so the observed joint is strictly positive."""
    domains = {v: (0, 1) for v in g.vertices}
    vnoise, enoise, mechs = {}, {}, {}
    for v in g.vertices:
        num = rng.randint(1, 7)
        vnoise[v] = Noise((Fraction(num, 8), Fraction(8 - num, 8)))
    for e in g.bidirected:
        num = rng.randint(1, 7)
        enoise[e] = Noise((Fraction(num, 8), Fraction(8 - num, 8)))
    for v in g.vertices:
        parents = g.parents_of(v)
        edges = tuple(e for e in g.bidirected if v in e)
        base_space = [domains[p] for p in parents] + [range(enoise[e].size) for e in edges]
        base = {key: rng.randint(0, 1) for key in itertools.product(*base_space)}
        spaces = (
            [domains[p] for p in parents]
            + [range(vnoise[v].size)]
            + [range(enoise[e].size) for e in edges]
        )
        np_ = len(parents)

        def fn(*key, _np=np_, _base=base):
            return _base[key[:_np] + key[_np + 1 :]] ^ (key[_np] & 1)

        mechs[v] = tabulate(spaces, fn)
    return DiscreteScm(g, domains, vnoise, enoise, mechs)


def random_identifiable_instance(rng: random.Random, max_nodes=7):
    """(graph, bundle) with no recanting district and an identifiable total
    effect, or None if the draw fails the filters."""
    from recant import (
        NotIdentifiableError,
        bundle_all,
        find_recanting_districts,
        identify_total,
        proper_causal_paths,
    )

    n = rng.randint(3, max_nodes)
    g = random_dag(rng, n, p_edge=rng.uniform(0.3, 0.7), p_bi=rng.uniform(0.0, 0.35))
    verts = list(g.vertices)
    y = verts[-1]
    k = rng.randint(1, min(2, n - 1))
    treats = rng.sample(verts[:-1], k)
    A = g.sorted(treats)
    paths = proper_causal_paths(g, A, (y,))
    if not paths:
        return None
    # pick a random green edge set via a path subset, then close it
    chosen = [p for p in paths if rng.random() < 0.6]
    green = {e for p in chosen for e in zip(p[:-1], p[1:])}
    closed = [p for p in paths if all(e in green for e in zip(p[:-1], p[1:]))]
    try:
        bundle = make_bundle(g, A, (y,), closed)
    except Exception:
        return None
    if find_recanting_districts(g, bundle):
        return None
    try:
        identify_total(g, A, (y,))
    except NotIdentifiableError:
        return None
    return g, bundle
