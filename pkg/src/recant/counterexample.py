"""Bit-parity model pairs witnessing non-identifiability.

Two constructions: ``parity_models`` realises the core district argument on
the subgraph spanned by a recanting district and its treatment, and
``counterexample_models`` extends it to a full-graph pair that agrees on
every interventional distribution, has strictly positive observed joints,
and disagrees on the path-specific effect.

The without-loss-of-generality steps (one child per district node, the
treatment feeding only the two witness children) are realised by making the
other edges vacuous: mechanisms simply ignore them.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from itertools import product as iproduct

from .admg import Admg
from .counterfactual import unroll
from .errors import ConstructionError, GraphError
from .paths import PathBundle, RecantingReport, path_edges, relevant_nodes
from .scm import FAIR_COIN, TRIVIAL, DiscreteScm, Noise, coin, tabulate

Edge = tuple[str, str]


def _xor_scm(
    g: Admg,
    kept: set[Edge],
    own: dict[str, Noise],
    live_bidirected: set[Edge],
) -> DiscreteScm:
    """Binary SCM where every vertex is the XOR of its kept parents, its own
    noise and the fair noises of its live incident bidirected edges; all
    other inputs are vacuous."""
    domains = {v: (0, 1) for v in g.vertices}
    vertex_noise = {v: own.get(v, TRIVIAL) for v in g.vertices}
    edge_noise = {
        e: (FAIR_COIN if e in live_bidirected else TRIVIAL) for e in g.bidirected
    }
    mechanisms = {}
    for v in g.vertices:
        parents = g.parents_of(v)
        edges = tuple(e for e in g.bidirected if v in e)
        mask = [p in {t for t, h in kept if h == v} for p in parents]
        live = [e in live_bidirected for e in edges]
        spaces = [domains[p] for p in parents]
        spaces.append(range(vertex_noise[v].size))
        spaces.extend(range(edge_noise[e].size) for e in edges)

        def fn(*key, _mask=tuple(mask), _live=tuple(live), _np=len(parents)):
            out = 0
            for i in range(_np):
                if _mask[i]:
                    out ^= key[i]
            out ^= key[_np] & 1
            for j, bit in enumerate(key[_np + 1 :]):
                if _live[j]:
                    out ^= bit & 1
            return out

        mechanisms[v] = tabulate(spaces, fn)
    return DiscreteScm(g, domains, vertex_noise, edge_noise, mechanisms)


def _drop_a_edges(kept: set[Edge], a: str, children) -> set[Edge]:
    return {e for e in kept if not (e[0] == a and e[1] in children)}


def _district_chains(g: Admg, members) -> set[Edge]:
    """Keep one least-child directed edge per district member."""
    dset = set(members)
    kept = set()
    for v in members:
        inside = [c for c in g.children_of(v) if c in dset]
        if inside:
            kept.add((v, inside[0]))
    return kept


def parity_models(
    d_graph: Admg, a: str, green_child: str, blue_child: str
) -> tuple[DiscreteScm, DiscreteScm]:
    """Core pair on the district-plus-treatment subgraph.

    All variables binary; every bidirected edge a fair shared bit; every
    mechanism the parity of its kept inputs.  In the second model the two
    witness children ignore the treatment.  The pair agrees on every
    interventional distribution yet disagrees on the counterfactual that
    feeds the green child the active value and the blue child the baseline.
    """
    for v in (a, green_child, blue_child):
        if v not in d_graph:
            raise GraphError(f"unknown vertex {v}")
    members = tuple(v for v in d_graph.vertices if v != a)
    kept = _district_chains(d_graph, members)
    kept |= {(a, green_child), (a, blue_child)}
    own: dict[str, Noise] = {a: FAIR_COIN}
    if green_child == blue_child:
        # a single witness node needs its own fair bit to hide the treatment
        # parity inside single-world distributions
        own[green_child] = FAIR_COIN
    live = set(d_graph.bidirected)
    m1 = _xor_scm(d_graph, kept, own, live)
    m2 = _xor_scm(d_graph, _drop_a_edges(kept, a, {green_child, blue_child}), own, live)
    return m1, m2


def _shortest_directed_path(g: Admg, start: str, targets: set[str], allowed: set[str]):
    if start in targets:
        return (start,)
    queue = deque([(start,)])
    seen = {start}
    while queue:
        path = queue.popleft()
        for c in g.children_of(path[-1]):
            if c in seen or c not in allowed:
                continue
            if c in targets:
                return path + (c,)
            seen.add(c)
            queue.append(path + (c,))
    return None


def counterexample_models(
    g: Admg,
    bundle: PathBundle,
    report: RecantingReport,
    eps: Fraction = Fraction(1, 1000),
    verify: bool = True,
) -> tuple[DiscreteScm, DiscreteScm]:
    """Full-graph model pair certifying non-identifiability of the effect.

    Parity core on the recanting district, parity propagation along the
    district-sink-to-outcome paths (and, for a same-coloured witness, along
    the witness paths themselves), independent fair-coin padding elsewhere,
    and epsilon-noise on sinks and propagation nodes for positivity.

    With ``verify`` the pair is checked by exhaustive enumeration: exact
    agreement of every interventional distribution over observed vertices,
    strictly positive observational joints, and a positive total-variation
    gap between the two path-specific-effect distributions.
    """
    if not (0 < eps < Fraction(1, 2)):
        raise ValueError("epsilon must lie strictly between 0 and 1/2")
    a = report.treatment
    z_i, z_j = report.path_in_pi[1], report.path_not_in_pi[1]
    members = report.district
    dset = set(members)
    vstar = set(relevant_nodes(g, bundle.treatments, bundle.outcomes))
    yset = set(bundle.outcomes)

    shape1 = z_i != z_j and not bundle.is_green(a, z_j)

    kept = _district_chains(g, members)
    kept |= {(a, z_i), (a, z_j)}

    # propagate every district sink to an outcome (prefer routes that leave
    # the district immediately so chains stay acyclic in effect)
    prop_nodes: set[str] = set()
    sinks = g.subgraph(members).district_sinks(members)
    for r in sinks:
        allowed = (vstar - dset) | {r}
        path = _shortest_directed_path(g, r, yset, allowed) or _shortest_directed_path(
            g, r, yset, vstar
        )
        if path is None:
            raise ConstructionError(f"district sink {r} has no directed path to an outcome")
        kept |= set(path_edges(path))
        prop_nodes.update(path[1:])
    if not shape1:
        # the conflicting worlds must both reach the outcomes: keep the
        # witness paths as propagation routes
        for path in (report.path_in_pi, report.path_not_in_pi):
            kept |= set(path_edges(path))
            prop_nodes.update(path[2:])
    prop_nodes -= dset

    own: dict[str, Noise] = {}
    for t in bundle.treatments:
        own[t] = FAIR_COIN
    for v in g.vertices:
        if v in dset or v in prop_nodes or v in own:
            continue
        own[v] = FAIR_COIN  # padding: independent of everything
    if not shape1:
        own[z_i] = FAIR_COIN
        own[z_j] = FAIR_COIN
    eps_noise = coin(eps)
    for r in sinks:
        own[r] = FAIR_COIN if own.get(r) is FAIR_COIN else eps_noise
    for w in prop_nodes:
        own[w] = eps_noise

    # padding vertices keep no incoming edges at all
    core = dset | prop_nodes | {a}
    kept = {e for e in kept if e[1] in core}
    live = {e for e in g.bidirected if e[0] in dset and e[1] in dset}

    m1 = _xor_scm(g, kept, own, live)
    m2 = _xor_scm(g, _drop_a_edges(kept, a, {z_i, z_j}), own, live)
    if verify:
        verify_counterexample(g, bundle, m1, m2)
    return m1, m2


def all_regimes(g: Admg, domains):
    """Every do() regime over observed vertices, the empty one included."""
    options = [[(v, None)] + [(v, val) for val in domains[v]] for v in g.vertices]
    for combo in iproduct(*options):
        yield {v: val for v, val in combo if val is not None}


def verify_counterexample(
    g: Admg, bundle: PathBundle, m1: DiscreteScm, m2: DiscreteScm
) -> dict:
    """Exhaustively check the counterexample contract; raises
    ConstructionError on any violation.  Returns a summary with the
    path-specific total-variation distance."""
    for regime in all_regimes(g, m1.domains):
        t1 = m1.interventional_dist(regime)
        t2 = m2.interventional_dist(regime)
        if t1 != t2:
            raise ConstructionError(f"models disagree on do({regime})")
    for label, m in (("first", m1), ("second", m2)):
        if not m.observational_dist().is_strictly_positive():
            raise ConstructionError(f"{label} model has a non-positive observed joint")
    terms1 = unroll(g, bundle)
    tvd = m1.counterfactual_dist(terms1).total_variation(m2.counterfactual_dist(terms1))
    if tvd == 0:
        raise ConstructionError("models agree on the path-specific effect")
    return {"tvd": tvd, "regimes": "exact agreement", "positive": True}
