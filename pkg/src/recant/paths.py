"""Proper causal paths, path bundles, and the recanting-district criterion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .admg import Admg, District
from .errors import BundleError, GraphError

CausalPath = tuple[str, ...]
Edge = tuple[str, str]


def path_edges(path: CausalPath) -> tuple[Edge, ...]:
    return tuple(zip(path[:-1], path[1:]))


def is_proper_path(g: Admg, path: Sequence[str], treatments, outcomes) -> bool:
    """Directed path from a treatment to an outcome whose non-initial
    vertices avoid the treatment set."""
    path = tuple(path)
    if len(path) < 2 or len(set(path)) != len(path):
        return False
    a, y = path[0], path[-1]
    if a not in treatments or y not in outcomes:
        return False
    if any(v in treatments for v in path[1:]):
        return False
    return all(g.has_edge(t, h) for t, h in path_edges(path))


def proper_causal_paths(g: Admg, treatments: Iterable[str], outcomes: Iterable[str]) -> tuple[CausalPath, ...]:
    """All proper causal paths from ``treatments`` to ``outcomes``.

    Output is sorted by (length, vertex indices); beware the count is
    exponential in dense graphs.
    """
    A = g.sorted(treatments)
    Y = g.sorted(outcomes)
    if set(A) & set(Y):
        raise GraphError("treatments and outcomes overlap")
    yset, aset = set(Y), set(A)
    found: list[CausalPath] = []

    def walk(prefix: list[str]) -> None:
        v = prefix[-1]
        if v in yset and len(prefix) > 1:
            found.append(tuple(prefix))
            # a path may continue through an outcome vertex
        for c in g.children_of(v):
            if c in aset or c in prefix:
                continue
            prefix.append(c)
            walk(prefix)
            prefix.pop()

    for a in A:
        walk([a])
    found.sort(key=lambda p: (len(p), tuple(g.index(v) for v in p)))
    return tuple(found)


@dataclass(frozen=True)
class PathBundle:
    """A set pi of proper causal paths plus its derived green-edge set.

    An edge is green iff it lies on some path in the bundle.  Bundles are
    required to be edge-consistent: every proper causal path all of whose
    edges are green must itself be a member, otherwise the colouring and the
    path set would disagree about the effect.
    """

    graph: Admg
    treatments: tuple[str, ...]
    outcomes: tuple[str, ...]
    paths: tuple[CausalPath, ...]
    green_edges: frozenset[Edge]

    def is_green(self, tail: str, head: str) -> bool:
        return (tail, head) in self.green_edges

    def paths_from(self, a: str, z: str) -> tuple[CausalPath, ...]:
        """Members starting with the edge a -> z."""
        return tuple(p for p in self.paths if p[0] == a and p[1] == z)

    def __contains__(self, path) -> bool:
        return tuple(path) in set(self.paths)


def make_bundle(g: Admg, treatments, outcomes, paths: Iterable[Sequence[str]]) -> PathBundle:
    """Validate a path list and derive its green edges.

    Raises BundleError on a non-proper path or an edge-inconsistent set
    (some fully-green proper causal path is missing from the list).
    """
    A = g.sorted(treatments)
    Y = g.sorted(outcomes)
    if set(A) & set(Y):
        raise GraphError("treatments and outcomes overlap")
    pi = []
    for p in paths:
        p = tuple(p)
        if not is_proper_path(g, p, set(A), set(Y)):
            raise BundleError(f"not a proper causal path: {' -> '.join(p)}")
        pi.append(p)
    if len(set(pi)) != len(pi):
        raise BundleError("duplicate path in bundle")
    pi.sort(key=lambda p: (len(p), tuple(g.index(v) for v in p)))
    green = frozenset(e for p in pi for e in path_edges(p))

    bundle = PathBundle(g, A, Y, tuple(pi), green)
    missing = _find_fully_green_non_member(g, bundle)
    if missing is not None:
        raise BundleError(
            "edge-inconsistent bundle: fully green proper causal path "
            f"{' -> '.join(missing)} is not a member"
        )
    return bundle


def bundle_all(g: Admg, treatments, outcomes) -> PathBundle:
    """Total-effect bundle: every proper causal path."""
    return make_bundle(g, treatments, outcomes, proper_causal_paths(g, treatments, outcomes))


def bundle_none(g: Admg, treatments, outcomes) -> PathBundle:
    """Empty bundle: every edge blue."""
    return make_bundle(g, treatments, outcomes, ())


def relevant_nodes(g: Admg, treatments, outcomes) -> tuple[str, ...]:
    """Non-treatment vertices with a directed path to an outcome avoiding
    the treatment set (reflexive, so it contains the outcomes)."""
    A = set(g.sorted(treatments))
    Y = g.sorted(outcomes)
    sub = g.subgraph([v for v in g.vertices if v not in A])
    return sub.ancestors([y for y in Y if y not in A])


# -- path counting and witness search ---------------------------------------


def _count_paths_to(g: Admg, allowed: set[str], targets: set[str]) -> dict[str, int]:
    """Number of directed paths from each allowed vertex to a target, moving
    only through allowed vertices.  A target vertex counts its empty path and
    may extend through further targets."""
    counts: dict[str, int] = {}
    for v in reversed(g.topological_order()):
        if v not in allowed:
            continue
        n = 1 if v in targets else 0
        for c in g.children_of(v):
            if c in allowed:
                n += counts.get(c, 0)
        counts[v] = n
    return counts


def _find_fully_green_non_member(g: Admg, bundle: PathBundle):
    """First fully-green proper causal path absent from the bundle, if any."""
    members = set(bundle.paths)
    yset = set(bundle.outcomes)

    def walk(prefix: list[str]):
        v = prefix[-1]
        if v in yset and len(prefix) > 1 and tuple(prefix) not in members:
            return tuple(prefix)
        for c in g.children_of(v):
            if (v, c) in bundle.green_edges and c not in prefix:
                prefix.append(c)
                hit = walk(prefix)
                prefix.pop()
                if hit:
                    return hit
        return None

    for a in bundle.treatments:
        hit = walk([a])
        if hit:
            return hit
    return None


@dataclass(frozen=True)
class RecantingReport:
    """Witness that a district recants: two proper causal paths from the same
    treatment enter the district, one in pi and one outside it."""

    district: District
    treatment: str
    path_in_pi: CausalPath
    path_not_in_pi: CausalPath


def find_recanting_districts(g: Admg, bundle: PathBundle) -> list[RecantingReport]:
    """One report per recanting district of the relevant subgraph.

    Empty iff the pi-specific effect is expressible in interventional
    densities.  The search is polynomial: path existence is decided by
    counting (paths from z to the outcomes versus bundle members through z)
    rather than by enumerating paths.
    """
    A = bundle.treatments
    Y = set(bundle.outcomes)
    vstar = relevant_nodes(g, A, bundle.outcomes)
    vset = set(vstar)
    sub = g.subgraph(vstar)
    counts = _count_paths_to(g, vset, Y)

    reports = []
    for dist in sub.districts():
        dset = set(dist)
        hit = None
        for a in A:
            green_in, escapes = [], []
            for z in g.children_of(a):
                if z not in dset:
                    continue
                starters = bundle.paths_from(a, z)
                if bundle.is_green(a, z) and starters:
                    green_in.append(z)
                # a blue first edge escapes pi outright (starters is empty and
                # z reaches Y inside V*); a green one escapes iff z reaches Y
                # along more routes than the bundle uses
                if counts.get(z, 0) > len(starters):
                    escapes.append(z)
            if green_in and escapes:
                # prefer a blue-edged escape: it yields the classic witness shape
                blue = [z for z in escapes if not bundle.is_green(a, z)]
                z_j = blue[0] if blue else escapes[0]
                z_i = green_in[0]
                hit = RecantingReport(
                    district=dist,
                    treatment=a,
                    path_in_pi=bundle.paths_from(a, z_i)[0],
                    path_not_in_pi=_shortest_escape(g, bundle, vset, a, z_j),
                )
                break
        if hit:
            reports.append(hit)
    return reports


def _shortest_escape(g: Admg, bundle: PathBundle, allowed: set[str], a: str, z: str) -> CausalPath:
    """Shortest proper causal path starting a -> z that is not in the bundle.

    BFS over (vertex, visited-prefix) states; deterministic via child order.
    Prefixes are simple and stay inside the relevant set, so the frontier is
    small in practice.
    """
    from collections import deque

    members = set(bundle.paths)
    Y = set(bundle.outcomes)
    queue = deque([(z, (a, z))])
    while queue:
        v, prefix = queue.popleft()
        if v in Y and prefix not in members:
            return prefix
        for c in g.children_of(v):
            if c in allowed and c not in prefix:
                queue.append((c, prefix + (c,)))
    raise AssertionError(f"no escaping path from {a} -> {z}; recanting search is inconsistent")
