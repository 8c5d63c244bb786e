"""Acyclic directed mixed graphs and their district machinery.

Vertices are plain strings; declaration order is the canonical order used
for every deterministic tie-break in the package (district enumeration,
summation-index order, topological tie-breaks).
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

from .errors import GraphError

District = tuple[str, ...]


class Admg:
    """Mixed graph with directed and bidirected edges, acyclic in its
    directed part.  Immutable after construction; all query methods are pure.
    """

    __slots__ = (
        "vertices",
        "directed",
        "bidirected",
        "_index",
        "_parents",
        "_children",
        "_siblings",
        "_topo",
    )

    def __init__(
        self,
        vertices: Sequence[str],
        directed: Iterable[tuple[str, str]] = (),
        bidirected: Iterable[tuple[str, str]] = (),
    ):
        vs = tuple(vertices)
        if len(set(vs)) != len(vs):
            raise GraphError("duplicate vertex names")
        if any(not v for v in vs):
            raise GraphError("empty vertex name")
        self.vertices = vs
        self._index = {v: i for i, v in enumerate(vs)}

        seen = set()
        d_edges = []
        for t, h in directed:
            self._check_vertex(t)
            self._check_vertex(h)
            if t == h:
                raise GraphError(f"self loop {t} -> {h}")
            if (t, h) in seen:
                raise GraphError(f"duplicate edge {t} -> {h}")
            seen.add((t, h))
            d_edges.append((t, h))
        self.directed = tuple(d_edges)

        bseen = set()
        b_edges = []
        for a, b in bidirected:
            self._check_vertex(a)
            self._check_vertex(b)
            if a == b:
                raise GraphError(f"self loop {a} <-> {b}")
            key = frozenset((a, b))
            if key in bseen:
                raise GraphError(f"duplicate edge {a} <-> {b}")
            bseen.add(key)
            # canonical endpoint order: declaration order
            if self._index[a] > self._index[b]:
                a, b = b, a
            b_edges.append((a, b))
        self.bidirected = tuple(b_edges)

        self._parents = {v: [] for v in vs}
        self._children = {v: [] for v in vs}
        for t, h in self.directed:
            self._parents[h].append(t)
            self._children[t].append(h)
        for v in vs:
            self._parents[v] = tuple(sorted(self._parents[v], key=self._index.get))
            self._children[v] = tuple(sorted(self._children[v], key=self._index.get))

        self._siblings = {v: [] for v in vs}
        for a, b in self.bidirected:
            self._siblings[a].append(b)
            self._siblings[b].append(a)
        for v in vs:
            self._siblings[v] = tuple(sorted(self._siblings[v], key=self._index.get))

        self._topo = self._toposort()

    def _check_vertex(self, v: str) -> None:
        if v not in self._index:
            raise GraphError(f"unknown vertex {v!r}")

    def _check_subset(self, ws: Iterable[str]) -> tuple[str, ...]:
        ws = tuple(ws)
        for w in ws:
            self._check_vertex(w)
        return ws

    def _toposort(self) -> tuple[str, ...]:
        # Kahn's algorithm with a vertex-order heap keeps ties deterministic.
        import heapq

        indeg = {v: len(self._parents[v]) for v in self.vertices}
        heap = [self._index[v] for v in self.vertices if indeg[v] == 0]
        heapq.heapify(heap)
        out = []
        while heap:
            v = self.vertices[heapq.heappop(heap)]
            out.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, self._index[c])
        if len(out) != len(self.vertices):
            cyclic = sorted(set(self.vertices) - set(out), key=self._index.get)
            raise GraphError(f"directed cycle involving {{{', '.join(cyclic)}}}")
        return tuple(out)

    # -- ordering helpers -------------------------------------------------

    def index(self, v: str) -> int:
        return self._index[v]

    def sorted(self, ws: Iterable[str]) -> tuple[str, ...]:
        """Vertices in declaration order."""
        return tuple(sorted(set(self._check_subset(ws)), key=self._index.get))

    # -- genealogy ---------------------------------------------------------

    def parents_of(self, v: str) -> tuple[str, ...]:
        self._check_vertex(v)
        return self._parents[v]

    def children_of(self, v: str) -> tuple[str, ...]:
        self._check_vertex(v)
        return self._children[v]

    def siblings_of(self, v: str) -> tuple[str, ...]:
        self._check_vertex(v)
        return self._siblings[v]

    def parents(self, ws: Iterable[str]) -> tuple[str, ...]:
        """Union of directed-edge tails into ``ws`` (may intersect ``ws``)."""
        ws = self._check_subset(ws)
        out = set()
        for w in ws:
            out.update(self._parents[w])
        return self.sorted(out)

    def children(self, ws: Iterable[str]) -> tuple[str, ...]:
        ws = self._check_subset(ws)
        out = set()
        for w in ws:
            out.update(self._children[w])
        return self.sorted(out)

    def ancestors(self, ws: Iterable[str]) -> tuple[str, ...]:
        """Reflexive ancestral closure of ``ws``."""
        ws = self._check_subset(ws)
        seen = set(ws)
        stack = list(ws)
        while stack:
            v = stack.pop()
            for p in self._parents[v]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return self.sorted(seen)

    def descendants(self, ws: Iterable[str]) -> tuple[str, ...]:
        """Reflexive descendant closure of ``ws``."""
        ws = self._check_subset(ws)
        seen = set(ws)
        stack = list(ws)
        while stack:
            v = stack.pop()
            for c in self._children[v]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return self.sorted(seen)

    # -- structure ---------------------------------------------------------

    def has_edge(self, tail: str, head: str) -> bool:
        return head in self._children.get(tail, ())

    def subgraph(self, s: Iterable[str]) -> "Admg":
        """Induced subgraph: vertices ``s`` and every edge with both
        endpoints in ``s``; vertex order inherited."""
        keep = set(self._check_subset(s))
        vs = tuple(v for v in self.vertices if v in keep)
        d = tuple(e for e in self.directed if e[0] in keep and e[1] in keep)
        b = tuple(e for e in self.bidirected if e[0] in keep and e[1] in keep)
        return Admg(vs, d, b)

    def districts(self) -> list[District]:
        """Connected components of the bidirected skeleton, each ordered by
        declaration, the list ordered by least member."""
        seen: set[str] = set()
        out: list[District] = []
        for v in self.vertices:
            if v in seen:
                continue
            comp = {v}
            queue = deque([v])
            while queue:
                u = queue.popleft()
                for w in self._siblings[u]:
                    if w not in comp:
                        comp.add(w)
                        queue.append(w)
            seen |= comp
            out.append(self.sorted(comp))
        return out

    def district_of(self, v: str) -> District:
        self._check_vertex(v)
        for d in self.districts():
            if v in d:
                return d
        raise AssertionError("unreachable")

    def district_sinks(self, d: Iterable[str]) -> tuple[str, ...]:
        """Members of ``d`` with no directed child inside ``d``."""
        ds = set(self._check_subset(d))
        return self.sorted(v for v in ds if not (set(self._children[v]) & ds))

    def topological_order(self) -> tuple[str, ...]:
        return self._topo

    # -- dunder ------------------------------------------------------------

    def __contains__(self, v: str) -> bool:
        return v in self._index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Admg)
            and self.vertices == other.vertices
            and set(self.directed) == set(other.directed)
            and set(self.bidirected) == set(other.bidirected)
        )

    def __hash__(self):
        return hash((self.vertices, frozenset(self.directed), frozenset(self.bidirected)))

    def __repr__(self):
        return (
            f"Admg({list(self.vertices)}, directed={len(self.directed)} edges, "
            f"bidirected={len(self.bidirected)} edges)"
        )
