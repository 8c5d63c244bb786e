import itertools
import random
from fractions import Fraction

import pytest

from recant import (
    Admg,
    DiscreteScm,
    EnumerationLimitError,
    ModelError,
    Noise,
    truncated_factorization,
    unroll,
)
from recant.counterfactual import CfTerm, Const
from recant.scm import FAIR_COIN, TRIVIAL, DistTable, tabulate

from gen import bundle_of, figures, random_dag, random_positive_scm

FIGS = figures()


def chain_deterministic():
    g = Admg(["a", "m", "y"], [("a", "m"), ("m", "y")])
    domains = {v: (0, 1) for v in g.vertices}
    mechs = {
        "a": {(0,): 1},
        "m": {(0, 0): 0, (1, 0): 1},
        "y": {(0, 0): 0, (1, 0): 1},
    }
    return DiscreteScm(g, domains, {v: TRIVIAL for v in g.vertices}, {}, mechs)


def test_point_mass_chain():
    m = chain_deterministic()
    t = m.observational_dist()
    assert t.p((1, 1, 1)) == 1
    assert t.event({"y": 0}) == 0


def test_observational_matches_factored_route():
    rng = random.Random(10)
    g = FIGS["triangle_a"].graph
    for _ in range(10):
        m = random_positive_scm(g, rng)
        t = m.observational_dist()
        # independent route: chain products of exact conditionals
        for assign in itertools.product((0, 1), repeat=3):
            full = dict(zip(g.vertices, assign))
            pr = Fraction(1)
            for v in g.vertices:
                pa = {p: full[p] for p in g.parents_of(v)}
                num = t.event({v: full[v], **pa})
                den = t.event(pa) if pa else Fraction(1)
                pr *= num / den
            assert pr == t.p(assign)


def test_empty_regime_is_observational():
    rng = random.Random(11)
    g = random_dag(rng, 5, p_bi=0.3)
    m = random_positive_scm(g, rng)
    assert m.interventional_dist({}) == m.observational_dist()


def test_mutilation_equals_truncated_factorization():
    rng = random.Random(12)
    for _ in range(10):
        g = random_dag(rng, rng.randint(2, 5), p_bi=0.0)
        m = random_positive_scm(g, rng)
        obs = m.observational_dist()
        verts = list(g.vertices)
        regime = {v: rng.randint(0, 1) for v in rng.sample(verts, rng.randint(0, len(verts) - 1))}
        assert m.interventional_dist(regime) == truncated_factorization(g, obs, regime)


def test_conflict_free_counterfactual_is_interventional():
    rng = random.Random(13)
    g = FIGS["verma"].graph
    for _ in range(5):
        m = random_positive_scm(g, rng)
        # term tree for y under do(a=1) built by hand: every path rolls a=1
        l = CfTerm("l", (("a", Const(1, "a")),))
        mm = CfTerm("m", (("a", Const(1, "a")), ("l", l)))
        y = CfTerm("y", (("m", mm),))
        lhs = m.counterfactual_dist(y)
        rhs = m.interventional_dist({"a": 1}).marginal(["y"])
        assert lhs.probs == {k: rhs.probs[k] for k in lhs.probs}


def test_counterfactual_of_unrolled_total_effect_is_do():
    from recant import bundle_all

    rng = random.Random(14)
    fig = FIGS["time_med"]
    b = bundle_all(fig.graph, fig.treatments, fig.outcomes)
    m = random_positive_scm(fig.graph, rng)
    lhs = m.counterfactual_dist(unroll(fig.graph, b))
    rhs = m.interventional_dist({"a0": 1, "a1": 1}).marginal(["y"])
    assert lhs.probs == rhs.probs


def test_mediation_formula_matches_oracle_on_random_triangles():
    # cross-world independence holds by construction (independent noises)
    rng = random.Random(15)
    g = FIGS["triangle_a"].graph
    b = bundle_of(FIGS["triangle_a"])
    for _ in range(50):
        m = random_positive_scm(g, rng)
        t = m.observational_dist()
        gamma = m.counterfactual_dist(unroll(g, b))  # Y(1, M(0))
        total = Fraction(0)
        for mv in (0, 1):
            pm = t.event({"a": 0, "m": mv}) / t.event({"a": 0})
            py = t.event({"a": 1, "m": mv, "y": 1}) / t.event({"a": 1, "m": mv})
            total += pm * py
        assert gamma.event({"y": 1}) == total


def test_distribution_tables_are_normalised():
    with pytest.raises(ModelError):
        DistTable.from_counts(("x",), ((0, 1),), {(0,): Fraction(1, 3)})


def test_mechanism_totality_enforced():
    g = Admg(["a", "y"], [("a", "y")])
    domains = {"a": (0, 1), "y": (0, 1)}
    with pytest.raises(ModelError, match="not total"):
        DiscreteScm(
            g,
            domains,
            {"a": FAIR_COIN, "y": TRIVIAL},
            {},
            {"a": {(0,): 0, (1,): 1}, "y": {(0, 0): 0}},
        )


def test_enumeration_guard():
    n = 30
    g = Admg([f"v{i}" for i in range(n)])
    domains = {v: (0, 1) for v in g.vertices}
    noise = {v: FAIR_COIN for v in g.vertices}
    mechs = {v: {(0,): 0, (1,): 1} for v in g.vertices}
    m = DiscreteScm(g, domains, noise, {}, mechs)
    with pytest.raises(EnumerationLimitError):
        m.observational_dist()


def test_total_variation_distance():
    t1 = DistTable.from_counts(("x",), ((0, 1),), {(0,): Fraction(1, 2), (1,): Fraction(1, 2)})
    t2 = DistTable.from_counts(("x",), ((0, 1),), {(0,): Fraction(1, 4), (1,): Fraction(3, 4)})
    assert t1.total_variation(t2) == Fraction(1, 4)
