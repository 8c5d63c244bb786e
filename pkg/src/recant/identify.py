"""Identification of path-specific effects.

Three layers:

* ``interventional_functional`` emits the district factorization of the
  pi-specific effect over interventional terms p(D | do(Pa(D) \\ D)), with
  active or baseline treatment bindings decided per district by edge colour.
* ``identify_interventional`` identifies a single interventional term from
  the observed joint via c-component (district) factorization with recursive
  ancestral pruning, returning either a sum-product of observed conditionals
  or a ``Hedge`` witness.
* ``identify_pse`` applies the per-term identification to every district
  term of the interventional functional.

Observed conditionals carry the Tian-reduced conditioning set (the district
of the vertex within its predecessors, plus that district's parents) widened
by all preceding treatments; the widening is sound because the reduced set
renders the vertex independent of the remaining predecessors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .admg import Admg
from .counterfactual import unroll  # noqa: F401  (re-exported convenience)
from .errors import NotIdentifiableError, RecantingDistrictError
from .formula import (
    ACTIVE,
    BASELINE,
    Difference,
    DoTerm,
    Expectation,
    Expr,
    ObsTerm,
    Ratio,
    Sym,
    active,
    baseline,
    idx,
    product,
    substitute_symbols,
    summation,
)
from .paths import PathBundle, find_recanting_districts, relevant_nodes


@dataclass(frozen=True)
class Hedge:
    """Witness of a non-identifiable interventional term: the ancestral
    closure of ``target`` inside the district ``within`` is the whole
    district, so two models agreeing on the observed joint disagree on the
    term."""

    target: tuple[str, ...]
    within: tuple[str, ...]

    def __str__(self):
        return (
            f"hedge: Q[{{{','.join(self.target)}}}] is not identifiable from p(V) "
            f"(ancestral closure fills the district {{{','.join(self.within)}}})"
        )


# ---------------------------------------------------------------------------
# the interventional functional (district factorization of the effect)


def _district_bindings(bundle: PathBundle, district) -> dict[str, str]:
    """Per-treatment value kind for one district of the relevant subgraph."""
    g = bundle.graph
    dset = set(district)
    colors: dict[str, set[bool]] = {}
    for a in bundle.treatments:
        for z in g.children_of(a):
            if z in dset:
                colors.setdefault(a, set()).add(bundle.is_green(a, z))
    if any(greens == {True, False} for greens in colors.values()):
        raise AssertionError("mixed edge colours into a district imply recanting")
    any_green = any(True in c for c in colors.values())
    any_blue = any(False in c for c in colors.values())
    default = ACTIVE if any_green or not any_blue else BASELINE
    out = {}
    for a in bundle.treatments:
        if a in colors:
            out[a] = ACTIVE if True in colors[a] else BASELINE
        else:
            out[a] = default
    return out


def interventional_functional(g: Admg, bundle: PathBundle) -> Expr:
    """Sum over the relevant non-outcome vertices of one interventional term
    per district of the relevant subgraph; requires no recanting district."""
    reports = find_recanting_districts(g, bundle)
    if reports:
        raise RecantingDistrictError(reports)
    vstar = relevant_nodes(g, bundle.treatments, bundle.outcomes)
    sub = g.subgraph(vstar)
    yset = set(bundle.outcomes)
    indices = tuple(idx(v) for v in vstar if v not in yset)
    factors = []
    for district in sub.districts():
        binding = _district_bindings(bundle, district)
        targets = tuple((v, idx(v)) for v in district)
        regime = []
        for w in g.parents(district):
            if w in district:
                continue
            if w in binding:
                regime.append((w, Sym(w, binding[w])))
            else:
                regime.append((w, idx(w)))
        factors.append(DoTerm(targets, tuple(regime)))
    return summation(indices, product(factors))


# ---------------------------------------------------------------------------
# Tian identification of a single interventional term

Resolver = Callable[[str], Sym | None]


class _RatioChain:
    """Chain atom for a kernel conditional q(v | pre) that does not reduce to
    an observed conditional; rendered as a ratio of kernel marginals."""

    def __init__(self, v, pre, base_chain, sum_out):
        self.v = v
        self.pre = tuple(pre)  # kernel coordinates conditioned on
        self.base_chain = base_chain  # list of _Atom for the base kernel
        self.sum_out = tuple(sum_out)  # base coordinates summed in the numerator

    @property
    def refs(self):
        out = set(self.pre)
        for atom in self.base_chain:
            out.update(atom.refs)
        out -= {a.v for a in self.base_chain}
        return out

    def make(self, env, fresh):
        def marginal(extra):
            local = dict(env)
            bound = []
            for w in self.sum_out + tuple(extra):
                s = Sym(w, "index", fresh())
                local[w] = s
                bound.append(s)
            return summation(bound, product([a.make(local, fresh) for a in self.base_chain]))

        return Ratio(marginal(()), marginal((self.v,)))


class _PrimAtom:
    """Chain atom for a plain observed conditional p(v | cond)."""

    def __init__(self, v, cond):
        self.v = v
        self.cond = tuple(cond)

    @property
    def refs(self):
        return set(self.cond)

    def make(self, env, fresh):
        return ObsTerm(((self.v, env[self.v]),), tuple((w, env[w]) for w in self.cond))


def _chain_cond(gh: Admg, v: str, retain: set[str]) -> tuple[str, ...]:
    """Reduced conditioning set for v within the hull's topological order."""
    order = gh.topological_order()
    pre = order[: order.index(v)]
    local = gh.subgraph(pre + (v,))
    dist = local.district_of(v)
    cond = set(dist) | set(gh.parents(dist))
    cond.discard(v)
    cond |= retain & set(pre)
    return gh.sorted(cond)


def _telescope(chain: list, keep: set[str]) -> list:
    """Drop trailing normalized conditionals whose targets nothing else uses."""
    chain = list(chain)
    changed = True
    while changed:
        changed = False
        refs = set()
        for atom in chain:
            refs |= atom.refs
        for i in range(len(chain) - 1, -1, -1):
            v = chain[i].v
            if v not in keep and v not in refs:
                chain.pop(i)
                changed = True
                break
    return chain


def _q_identify(gh: Admg, target, resolve: Resolver, retain: set[str], fresh):
    """Expression for Q[target] = p(target | do(rest)) from the observed
    joint of the hull graph, or a Hedge."""
    target = gh.sorted(target)
    dist = gh.district_of(target[0])
    if not set(target) <= set(dist):
        raise AssertionError("Q-target spans several districts")
    chain = [_PrimAtom(v, _chain_cond(gh, v, retain)) for v in dist]
    return _q_rec(gh, set(target), tuple(dist), chain, resolve, fresh)


def _q_rec(gh, cset, t, chain, resolve, fresh):
    tsub = gh.subgraph(t)
    a1 = set(tsub.ancestors(gh.sorted(cset)))
    if a1 == set(t):
        if cset != set(t):
            return Hedge(gh.sorted(cset), tuple(t))
        return _emit(gh, chain, cset, resolve, fresh)
    if a1 == cset:
        return _emit(gh, chain, cset, resolve, fresh)
    remaining = _telescope(chain, a1)
    leftover = [atom.v for atom in remaining if atom.v not in a1]
    order_a1 = tuple(v for v in gh.topological_order() if v in a1)
    if leftover:
        # the marginal kernel is not a product of primitives; re-express it as
        # kernel conditionals (ratios of its own marginals)
        new_chain = []
        for i, v in enumerate(order_a1):
            new_chain.append(
                _RatioChain(v, order_a1[:i], list(remaining), tuple(leftover) + order_a1[i + 1 :])
            )
        remaining = new_chain
    t2 = gh.subgraph(gh.sorted(a1)).district_of(next(iter(gh.sorted(cset))))
    chain2 = [atom for atom in remaining if atom.v in t2]
    return _q_rec(gh, cset, t2, chain2, resolve, fresh)


def _emit(gh, chain, cset, resolve, fresh):
    chain = _telescope(chain, cset)
    atoms = {atom.v: atom for atom in chain}
    # close over conditioning references that nothing binds
    while True:
        refs = set()
        for atom in atoms.values():
            refs |= atom.refs
        dangling = [
            w for w in gh.sorted(refs) if w not in atoms and resolve(w) is None
        ]
        if not dangling:
            break
        for w in dangling:
            atoms[w] = _PrimAtom(w, _chain_cond(gh, w, set()))
    env: dict[str, Sym] = {}
    bound = []
    for v in gh.sorted(atoms):
        if v in cset:
            s = resolve(v)
            if s is None:
                raise AssertionError(f"no symbol for target {v}")
            env[v] = s
        else:
            env[v] = Sym(v, "index", fresh())
            bound.append(env[v])
    refs = set()
    for atom in atoms.values():
        refs |= atom.refs
    for w in refs:
        if w not in env:
            env[w] = resolve(w)
    factors = [atoms[v].make(env, fresh) for v in gh.sorted(atoms)]
    return summation(bound, product(factors))


def identify_interventional(
    g: Admg,
    term: DoTerm,
    context: Mapping[str, Sym] | None = None,
) -> Expr | Hedge:
    """Observed-data functional for p(targets | do(regime)), or a Hedge.

    ``context`` maps treatment vertices to value symbols; those vertices are
    retained in every conditioning set they precede (sound, because the
    reduced conditioning set already separates the target from them) and the
    given symbols bind their occurrences.
    """
    context = dict(context or {})
    tsyms = dict(term.targets)
    rsyms = dict(term.regime)
    tverts = g.sorted(tsyms)
    if set(tverts) & set(rsyms):
        raise ValueError("target and regime sets overlap")
    hull = g.ancestors(tverts)
    gh = g.subgraph(hull)
    dstar = gh.subgraph([v for v in hull if v not in rsyms]).ancestors(tverts)
    outer = {v: idx(v) for v in dstar if v not in tsyms}

    def resolve(w: str) -> Sym | None:
        if w in tsyms:
            return tsyms[w]
        if w in rsyms:
            return rsyms[w]
        if w in outer:
            return outer[w]
        if w in context:
            return context[w]
        return None

    counter = [0]

    def fresh() -> int:
        counter[0] += 1
        return counter[0]

    factors = []
    for district in gh.subgraph(dstar).districts():
        out = _q_identify(gh, district, resolve, set(context) & set(hull), fresh)
        if isinstance(out, Hedge):
            return out
        factors.append(out)
    return summation(tuple(outer.values()), product(factors))


# ---------------------------------------------------------------------------
# end-to-end identification of the path-specific effect


def _pse_pieces(g: Admg, bundle: PathBundle):
    """(vstar, districts, bindings, outer indices) shared by the pse routes."""
    reports = find_recanting_districts(g, bundle)
    if reports:
        raise RecantingDistrictError(reports)
    vstar = relevant_nodes(g, bundle.treatments, bundle.outcomes)
    sub = g.subgraph(vstar)
    yset = set(bundle.outcomes)
    indices = tuple(idx(v) for v in vstar if v not in yset)
    return vstar, sub.districts(), yset, indices


def _identify_district_term(g, bundle, district, binding) -> Expr | Hedge:
    regime_verts = [w for w in g.parents(district) if w not in district]
    aset = set(bundle.treatments)
    targets = tuple((v, idx(v)) for v in district)
    regime = tuple(
        (w, Sym(w, binding[w]) if w in aset else idx(w)) for w in regime_verts
    )
    context = {a: Sym(a, binding[a]) for a in bundle.treatments}
    return identify_interventional(g, DoTerm(targets, regime), context=context)


def identify_pse(g: Admg, bundle: PathBundle) -> Expr:
    """Observed-data functional for the pi-specific effect.

    Raises RecantingDistrictError when the effect is not a functional of
    interventional densities, and NotIdentifiableError (carrying the Hedge)
    when some district term is not identifiable from the observed joint.
    """
    _, districts, _, indices = _pse_pieces(g, bundle)
    factors = []
    for district in districts:
        binding = _district_bindings(bundle, district)
        out = _identify_district_term(g, bundle, district, binding)
        if isinstance(out, Hedge):
            raise NotIdentifiableError(out)
        factors.append(out)
    return summation(indices, product(factors))


def identify_pse_by_substitution(g: Admg, bundle: PathBundle) -> Expr:
    """Alternative route: identify the all-active total-effect factorization,
    then substitute baseline symbols inside the terms of districts whose
    treatment arrows are all blue.  Canonically equal to identify_pse."""
    _, districts, _, indices = _pse_pieces(g, bundle)
    factors = []
    for district in districts:
        binding = _district_bindings(bundle, district)
        all_active = {a: ACTIVE for a in bundle.treatments}
        out = _identify_district_term(g, bundle, district, all_active)
        if isinstance(out, Hedge):
            raise NotIdentifiableError(out)
        swap = {
            active(a): baseline(a)
            for a, kind in binding.items()
            if kind == BASELINE
        }
        factors.append(substitute_symbols(out, swap))
    return summation(indices, product(factors))


def identify_total(g: Admg, treatments, outcomes, kind: str = ACTIVE) -> Expr:
    """Observed-data functional for p(outcomes | do(treatments)) with all
    treatments bound to one value kind."""
    A = g.sorted(treatments)
    Y = g.sorted(outcomes)
    term = DoTerm(
        tuple((y, idx(y)) for y in Y), tuple((a, Sym(a, kind)) for a in A)
    )
    out = identify_interventional(g, term, context={a: Sym(a, kind) for a in A})
    if isinstance(out, Hedge):
        raise NotIdentifiableError(out)
    return out


def mediation_effects(g: Admg, bundle: PathBundle) -> tuple[Expr, Expr]:
    """Mean-difference effects (along pi, not along pi) for a single outcome.

    effect_in_pi  = E[Y] under the pi functional - E[Y] under do(baseline)
    effect_not_pi = E[Y] under do(active) - E[Y] under the pi functional
    """
    if len(bundle.outcomes) != 1:
        raise ValueError("mediation effects need a single outcome")
    y = bundle.outcomes[0]
    f_pi = identify_pse(g, bundle)
    f_act = identify_total(g, bundle.treatments, bundle.outcomes, ACTIVE)
    f_base = identify_total(g, bundle.treatments, bundle.outcomes, BASELINE)
    in_pi = Difference(Expectation(y, f_pi), Expectation(y, f_base))
    not_in_pi = Difference(Expectation(y, f_act), Expectation(y, f_pi))
    return in_pi, not_in_pi
