from recant import bundle_all, make_bundle, relevant_nodes, unroll
from recant.counterfactual import CfTerm, active_const, baseline_const

from gen import bundle_of, figures

FIGS = figures()


def test_triangle_direct_effect_unrolls_to_nested_form():
    fig = FIGS["triangle_a"]
    (term,) = unroll(fig.graph, bundle_of(fig))
    m_base = CfTerm("m", (("a", baseline_const("a", 0)),))
    expected = CfTerm("y", (("a", active_const("a", 1)), ("m", m_base)))
    assert term == expected
    assert term.render() == "y(a=a, m(a=a'))"


def test_longitudinal_unrolling_follows_inductive_rule():
    fig = FIGS["time_med"]
    (term,) = unroll(fig.graph, bundle_of(fig))
    a0a, a1a = active_const("a0", 1), active_const("a1", 1)
    a0b, a1b = baseline_const("a0", 0), baseline_const("a1", 0)
    l1_b = CfTerm("l1", (("a0", a0b),))
    m1_pi = CfTerm("m1", (("a0", a0a), ("l1", l1_b)))
    l2_b = CfTerm("l2", (("l1", l1_b), ("a1", a1b)))
    m2_pi = CfTerm("m2", (("m1", m1_pi), ("a1", a1a), ("l2", l2_b)))
    expected = CfTerm(
        "y",
        (
            ("a0", a0b),
            ("l1", l1_b),
            ("m1", m1_pi),
            ("a1", a1b),
            ("l2", l2_b),
            ("m2", m2_pi),
        ),
    )
    assert term == expected


def test_shared_subterms_are_aliased():
    fig = FIGS["time_med"]
    (term,) = unroll(fig.graph, bundle_of(fig))
    args = dict(term.args)
    m2 = args["m2"]
    # the m1 subterm of y and the m1 subterm of m2 are one node
    assert args["m1"] is dict(m2.args)["m1"]
    assert args["l2"] is not None and dict(dict(m2.args)["l2"].args)["l1"] is dict(
        args["m1"].args
    )["l1"]


def test_total_effect_bundle_gives_all_active_arguments():
    fig = FIGS["time_med"]
    b = bundle_all(fig.graph, fig.treatments, fig.outcomes)
    (term,) = unroll(fig.graph, b)

    def treatment_consts(t):
        for _, arg in t.args:
            if isinstance(arg, CfTerm):
                yield from treatment_consts(arg)
            else:
                yield arg

    consts = set(treatment_consts(term))
    assert consts == {active_const("a0", 1), active_const("a1", 1)}


def test_unroll_targets_exactly_relevant_set():
    for name in ("triangle_a", "verma", "time_med"):
        fig = FIGS[name]
        b = bundle_of(fig)
        roots = unroll(fig.graph, b)
        targets = {t.target for r in roots for t in r.subterms()}
        assert targets == set(relevant_nodes(fig.graph, fig.treatments, fig.outcomes))


def test_subterm_order_respects_topology():
    fig = FIGS["time_med"]
    (term,) = unroll(fig.graph, bundle_of(fig))
    order = [t.target for t in term.subterms()]
    g = fig.graph
    pos = {v: i for i, v in enumerate(order)}
    for t in term.subterms():
        for _, arg in t.args:
            if isinstance(arg, CfTerm):
                assert pos[arg.target] < pos[t.target]


def test_custom_values_flow_into_constants():
    fig = FIGS["triangle_a"]
    b = make_bundle(fig.graph, ["a"], ["y"], [("a", "y")])
    (term,) = unroll(fig.graph, b, active={"a": 7}, baseline={"a": 3})
    args = dict(term.args)
    assert args["a"].value == 7
    assert dict(args["m"].args)["a"].value == 3
