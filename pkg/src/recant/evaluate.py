"""Exact numeric evaluation of formula expressions against distribution tables."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .admg import Admg
from .errors import PositivityError, RecantError
from .formula import (
    ACTIVE,
    BASELINE,
    INDEX,
    LIT,
    Difference,
    DoTerm,
    Expectation,
    ExpTerm,
    Expr,
    LinearComb,
    ObsTerm,
    Product,
    Ratio,
    Scalar,
    Sum,
    Sym,
    free_syms,
)
from .identify import identify_total, mediation_effects
from .paths import PathBundle
from .scm import DiscreteScm, DistTable


class _ZeroDiv:
    """Sentinel for a conditional with a zero-probability conditioning event."""

    def __init__(self, event):
        self.event = event


class Environment:
    """Resolution context for evaluation.

    ``obs`` answers observed terms, ``scm`` answers interventional terms by
    enumeration (cached per regime), ``values`` maps each treatment to its
    (active, baseline) pair, ``scoring`` optionally re-scores expectation
    outcomes (default: the value itself).
    """

    def __init__(
        self,
        obs: DistTable | None = None,
        scm: DiscreteScm | None = None,
        values: Mapping[str, tuple[int, int]] | None = None,
        domains: Mapping[str, tuple[int, ...]] | None = None,
        scoring: Mapping[str, Mapping[int, Fraction]] | None = None,
    ):
        self.obs = obs
        self.scm = scm
        self.values = dict(values or {})
        self.scoring = dict(scoring or {})
        self._do_cache: dict = {}
        doms: dict[str, tuple[int, ...]] = {}
        if obs is not None:
            doms.update(zip(obs.variables, obs.domains))
        if scm is not None:
            doms.update(scm.domains)
        if domains:
            doms.update({v: tuple(d) for v, d in domains.items()})
        self.domains = doms

    def domain(self, var: str) -> tuple[int, ...]:
        if var not in self.domains:
            raise RecantError(f"no domain known for {var}")
        return self.domains[var]

    def score(self, var: str, value: int) -> Fraction:
        if var in self.scoring:
            return Fraction(self.scoring[var][value])
        return Fraction(value)

    def interventional(self, regime: Mapping[str, int]) -> DistTable:
        if self.scm is None:
            raise RecantError("no SCM supplied for interventional terms")
        key = tuple(sorted(regime.items()))
        if key not in self._do_cache:
            self._do_cache[key] = self.scm.interventional_dist(dict(regime))
        return self._do_cache[key]


def _value(sym: Sym, binding, env: Environment) -> int:
    if sym.kind == LIT:
        return sym.value
    if sym.kind == INDEX:
        if sym not in binding:
            raise RecantError(f"unbound index symbol {sym}")
        return binding[sym]
    if sym.var not in env.values:
        raise RecantError(f"no active/baseline values supplied for {sym.var}")
    act, base = env.values[sym.var]
    return act if sym.kind == ACTIVE else base


def _assign(pairs, binding, env) -> dict[str, int]:
    return {v: _value(s, binding, env) for v, s in pairs}


def _eval(e: Expr, binding, env: Environment):
    if isinstance(e, Scalar):
        return e.value
    if isinstance(e, ObsTerm):
        if env.obs is None:
            raise RecantError("no observational table supplied")
        given = _assign(e.given, binding, env)
        den = env.obs.event(given) if given else Fraction(1)
        if den == 0:
            return _ZeroDiv(given)
        joint = env.obs.event({**given, **_assign(e.targets, binding, env)})
        return joint / den
    if isinstance(e, DoTerm):
        regime = _assign(e.regime, binding, env)
        table = env.interventional(regime)
        return table.event(_assign(e.targets, binding, env))
    if isinstance(e, ExpTerm):
        if env.obs is None:
            raise RecantError("no observational table supplied")
        given = _assign(e.given, binding, env)
        den = env.obs.event(given) if given else Fraction(1)
        if den == 0:
            return _ZeroDiv(given)
        num = Fraction(0)
        for val in env.domain(e.var):
            num += env.score(e.var, val) * env.obs.event({**given, e.var: val})
        return num / den
    if isinstance(e, Expectation):
        target_syms = [s for s in free_syms(e.dist) if s.var == e.var]
        if len(target_syms) != 1:
            raise RecantError(
                f"expectation of {e.var} needs exactly one free symbol, found {target_syms}"
            )
        s = target_syms[0]
        out = Fraction(0)
        for val in env.domain(e.var):
            inner = _eval(e.dist, {**binding, s: val}, env)
            if isinstance(inner, _ZeroDiv):
                raise PositivityError(f"zero-probability conditioning event {inner.event}")
            out += env.score(e.var, val) * inner
        return out
    if isinstance(e, Product):
        vals = [_eval(f, binding, env) for f in e.factors]
        if any(not isinstance(v, _ZeroDiv) and v == 0 for v in vals):
            return Fraction(0)
        bad = [v for v in vals if isinstance(v, _ZeroDiv)]
        if bad:
            raise PositivityError(
                f"zero-probability conditioning event {bad[0].event} "
                "not forced to zero by the enclosing product"
            )
        out = Fraction(1)
        for v in vals:
            out *= v
        return out
    if isinstance(e, Sum):
        out = Fraction(0)
        doms = [env.domain(s.var) for s in e.indices]
        import itertools

        for combo in itertools.product(*doms):
            inner = _eval(e.body, {**binding, **dict(zip(e.indices, combo))}, env)
            if isinstance(inner, _ZeroDiv):
                raise PositivityError(f"zero-probability conditioning event {inner.event}")
            out += inner
        return out
    if isinstance(e, Difference):
        l = _strict(_eval(e.left, binding, env))
        r = _strict(_eval(e.right, binding, env))
        return l - r
    if isinstance(e, Ratio):
        num = _strict(_eval(e.num, binding, env))
        den = _strict(_eval(e.den, binding, env))
        if den == 0:
            if num == 0:
                return Fraction(0)
            raise PositivityError("zero denominator in kernel conditional")
        return num / den
    if isinstance(e, LinearComb):
        out = Fraction(0)
        for c, t in e.terms:
            out += c * _strict(_eval(t, binding, env))
        return out
    raise TypeError(f"not an expression: {e!r}")


def _strict(v):
    if isinstance(v, _ZeroDiv):
        raise PositivityError(f"zero-probability conditioning event {v.event}")
    return v


def evaluate(e: Expr, env: Environment, order: tuple[str, ...] | None = None):
    """Exact value of an expression.

    Returns a Fraction when the expression is closed; when free index
    symbols remain it returns the DistTable they parameterise (one weight per
    assignment), with variables in ``order`` when given.
    """
    free = sorted(free_syms(e), key=lambda s: (s.var, s.tag))
    if not free:
        return _strict(_eval(e, {}, env))
    by_var = {}
    for s in free:
        if s.var in by_var:
            raise RecantError(f"two free symbols for {s.var}")
        by_var[s.var] = s
    names = tuple(order) if order else tuple(sorted(by_var))
    if set(names) != set(by_var):
        raise RecantError(f"free variables {sorted(by_var)} do not match order {names}")
    doms = tuple(env.domain(v) for v in names)
    import itertools

    probs = {}
    for combo in itertools.product(*doms):
        binding = {by_var[v]: val for v, val in zip(names, combo)}
        probs[combo] = _strict(_eval(e, binding, env))
    return DistTable.from_counts(names, doms, probs)


def total_effect(
    g: Admg,
    treatments,
    outcome: str,
    env: Environment,
) -> Fraction:
    """E[Y] under do(active) minus E[Y] under do(baseline), identified from
    the observed joint; integer-coded outcome scoring unless env rescores."""
    f_act = identify_total(g, treatments, (outcome,), ACTIVE)
    f_base = identify_total(g, treatments, (outcome,), BASELINE)
    e_act = evaluate(Expectation(outcome, f_act), env)
    e_base = evaluate(Expectation(outcome, f_base), env)
    return e_act - e_base


def decompose(
    g: Admg,
    bundle: PathBundle,
    env: Environment,
) -> tuple[Fraction, Fraction, Fraction]:
    """(total, effect along pi, effect not along pi); exact additivity holds
    by rational arithmetic."""
    y = bundle.outcomes[0]
    in_pi_expr, not_in_pi_expr = mediation_effects(g, bundle)
    in_pi = evaluate(in_pi_expr, env)
    not_in_pi = evaluate(not_in_pi_expr, env)
    total = total_effect(g, bundle.treatments, y, env)
    assert total == in_pi + not_in_pi
    return total, in_pi, not_in_pi
