import random
from fractions import Fraction

from recant import (
    Difference,
    Expectation,
    LinearComb,
    ObsTerm,
    Product,
    Scalar,
    Sum,
    canonicalize,
    canonically_equal,
    render,
)
from recant.formula import ExpTerm, Sym, active, baseline, idx


def p(targets, given=()):
    return ObsTerm(
        tuple((s.var, s) for s in targets), tuple((s.var, s) for s in given)
    )


M, L, C, Y = idx("m"), idx("l"), idx("c"), idx("y")
A, A0 = active("a"), baseline("a")


def test_sum_order_and_factor_order_do_not_matter():
    e1 = Sum((M,), Sum((L,), Product((p([Y], [A, M]), p([M], [A0, L])))))
    e2 = Sum((L, M), Product((p([M], [L, A0]), p([Y], [M, A]))))
    assert canonicalize(e1) == canonicalize(e2)


def test_self_difference_collapses_to_zero():
    e = Sum((M,), Product((p([Y], [A, M]), p([M], [A0]))))
    assert canonicalize(Difference(e, e)) == Scalar(Fraction(0))


def test_idempotent():
    e = Difference(
        Sum((M,), Product((p([Y], [A, M]), p([M], [A0])))),
        Expectation("y", p([Y], [A0])),
    )
    c1 = canonicalize(e)
    assert canonicalize(c1) == c1


def test_chain_rule_merge_and_barren_marginalisation():
    # sum_{c,m} p(c) p(m|a,c) p(y|a,c,m)  ->  sum_c p(c) p(y|a,c)
    e = Sum((C, M), Product((p([C]), p([M], [A, C]), p([Y], [A, C, M]))))
    expected = Sum((C,), Product((p([C]), p([Y], [A, C]))))
    assert canonicalize(e) == canonicalize(expected)


def test_merge_requires_matching_worlds():
    # p(y|a,m) p(m|a*) must not merge: the a-symbols differ
    e = Sum((M,), Product((p([Y], [A, M]), p([M], [A0]))))
    c = canonicalize(e)
    assert isinstance(c, Sum) and len(c.body.factors) == 2


def test_tower_collapse_of_expectations():
    # sum_m E[y|a*,m] p(m|a*) == E[y|a*]
    e = Sum((M,), Product((ExpTerm("y", (("a", A0), ("m", M))), p([M], [A0]))))
    assert canonicalize(e) == ExpTerm("y", (("a", A0),))


def test_expectation_of_distribution_normalises_to_exp_terms():
    f = Sum((M,), Product((p([Y], [A, M]), p([M], [A0]))))
    e = Expectation("y", f)
    expected = Sum((M,), Product((ExpTerm("y", (("a", A), ("m", M))), p([M], [A0]))))
    assert canonicalize(e) == canonicalize(expected)


def test_grouped_difference_equals_split_difference():
    # sum_m (E[y|a,m] - E[y|a*,m]) p(m|a*)  ==  sum_m E[y|a,m]p(m|a*) - E[y|a*]
    grouped = Sum(
        (M,),
        Product(
            (
                Difference(
                    ExpTerm("y", (("a", A), ("m", M))), ExpTerm("y", (("a", A0), ("m", M)))
                ),
                p([M], [A0]),
            )
        ),
    )
    split = Difference(
        Sum((M,), Product((ExpTerm("y", (("a", A), ("m", M))), p([M], [A0])))),
        ExpTerm("y", (("a", A0),)),
    )
    assert canonically_equal(grouped, split)


def test_shuffle_and_compare_harness():
    rng = random.Random(0)
    base = Sum(
        (M, L, C),
        Product(
            (
                p([Y], [A, M, L, C]),
                p([M], [A0, L, C]),
                p([L], [A0, C]),
                p([C]),
            )
        ),
    )

    def shuffle(e):
        if isinstance(e, Sum):
            ix = list(e.indices)
            rng.shuffle(ix)
            return Sum(tuple(ix), shuffle(e.body))
        if isinstance(e, Product):
            fs = [shuffle(f) for f in e.factors]
            rng.shuffle(fs)
            return Product(tuple(fs))
        if isinstance(e, ObsTerm):
            tg, gv = list(e.targets), list(e.given)
            rng.shuffle(tg)
            rng.shuffle(gv)
            return ObsTerm(tuple(tg), tuple(gv))
        return e

    for _ in range(20):
        mixed = Difference(shuffle(base), Sum((M,), p([M], [A])))
        ref = Difference(base, Sum((M,), p([M], [A])))
        assert canonicalize(mixed) == canonicalize(ref)


def test_nested_sums_merge_and_hoist():
    inner = Sum((L,), Product((p([L], [A]), p([Y], [A, L, M]))))
    e = Sum((M,), Product((inner, p([M], [A0]))))
    flat = Sum((L, M), Product((p([L], [A]), p([Y], [A, L, M]), p([M], [A0]))))
    assert canonicalize(e) == canonicalize(flat)


def test_capture_avoiding_hoist():
    # two inner sums both binding m must not collide after hoisting
    s1 = Sum((M,), Product((p([Y], [A, M]), p([M], [A0]))))
    s2 = Sum((M,), Product((p([C], [A, M]), p([M], [A0]))))
    c = canonicalize(Product((s1, s2)))
    assert isinstance(c, Sum) and len(c.indices) == 2
    assert len({s.tag for s in c.indices}) == 2  # distinct bound copies of m
    assert canonically_equal(Product((s1, s2)), Product((s2, s1)))


def test_linear_comb_collects_coefficients():
    e = Difference(Difference(p([Y], [A]), p([Y], [A0])), p([Y], [A]))
    c = canonicalize(e)
    assert isinstance(c, LinearComb)
    assert c == canonicalize(
        LinearComb(((Fraction(-1), p([Y], [A0])),))
    )


def test_render_is_deterministic_and_reads_well():
    e = Sum((M,), Product((p([Y], [A, M]), p([M], [A0]))))
    assert render(e) == "Σ_{m} p(y | a, m) · p(m | a*)"
    assert (
        render(e, values={"a": (1, 0)}) == "Σ_{m} p(y | a=1, m) · p(m | a=0)"
    )
    assert render(e, style="latex") == (
        "\\sum_{m} p(y \\mid a, m) \\cdot p(m \\mid a^*)"
    )


def test_telescoping_sum_of_conditional_is_dropped():
    # sum_{m,c} p(c) p(m|a,c) telescopes all the way to one
    e = Sum((M, C), Product((p([C]), p([M], [A, C]))))
    assert canonicalize(e) == Scalar(Fraction(1))
    # but a summed target referenced elsewhere survives
    e2 = Sum((M, C), Product((p([C]), p([M], [A, C]), p([Y], [M]))))
    c2 = canonicalize(e2)
    assert isinstance(c2, Sum) and len(c2.indices) == 2
