"""Exact discrete structural causal models and their distribution oracles.

Every probability is a ``fractions.Fraction``; distributions are exhaustive
tables, so equality checks in tests are exact.  Each vertex owns one
exogenous noise source (possibly trivial) and each bidirected edge owns one
source shared by its two endpoints.  Mechanisms are total lookup tables over
(parent values, own noise, incident edge noises).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd as _gcd
from typing import Iterable, Mapping, Sequence, Union

from .admg import Admg
from .counterfactual import CfTerm, Const
from .errors import EnumerationLimitError, ModelError

ENUMERATION_GUARD = 1 << 24

Assignment = tuple[int, ...]


@dataclass(frozen=True)
class DistTable:
    """Exact joint probability table over an ordered variable tuple."""

    variables: tuple[str, ...]
    domains: tuple[tuple[int, ...], ...]
    probs: Mapping[Assignment, Fraction]

    @staticmethod
    def from_counts(variables, domains, counts: Mapping[Assignment, Fraction]) -> "DistTable":
        variables = tuple(variables)
        domains = tuple(tuple(d) for d in domains)
        table = {}
        for assign in itertools.product(*domains):
            table[assign] = counts.get(assign, Fraction(0))
        total = sum(table.values())
        if total != 1:
            raise ModelError(f"probabilities sum to {total}, not 1")
        return DistTable(variables, domains, table)

    def p(self, assignment: Assignment) -> Fraction:
        return self.probs[tuple(assignment)]

    def event(self, partial: Mapping[str, int]) -> Fraction:
        """Probability of a partial assignment."""
        idx = {v: i for i, v in enumerate(self.variables)}
        for v in partial:
            if v not in idx:
                raise KeyError(f"{v} not in table")
        total = Fraction(0)
        for assign, pr in self.probs.items():
            if all(assign[idx[v]] == val for v, val in partial.items()):
                total += pr
        return total

    def marginal(self, variables: Sequence[str]) -> "DistTable":
        variables = tuple(variables)
        idx = {v: i for i, v in enumerate(self.variables)}
        doms = tuple(self.domains[idx[v]] for v in variables)
        counts: dict[Assignment, Fraction] = {}
        for assign, pr in self.probs.items():
            key = tuple(assign[idx[v]] for v in variables)
            counts[key] = counts.get(key, Fraction(0)) + pr
        return DistTable.from_counts(variables, doms, counts)

    def expectation(self, variable: str, scoring: Mapping[int, Fraction] | None = None) -> Fraction:
        i = self.variables.index(variable)
        out = Fraction(0)
        for assign, pr in self.probs.items():
            val = assign[i]
            out += (scoring[val] if scoring else Fraction(val)) * pr
        return out

    def total_variation(self, other: "DistTable") -> Fraction:
        if self.variables != other.variables or self.domains != other.domains:
            raise ValueError("tables are over different variables")
        return sum(abs(self.probs[a] - other.probs[a]) for a in self.probs) / 2

    def is_strictly_positive(self) -> bool:
        return all(pr > 0 for pr in self.probs.values())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DistTable)
            and self.variables == other.variables
            and self.domains == other.domains
            and all(self.probs[a] == other.probs[a] for a in self.probs)
        )

    def __hash__(self):
        return hash((self.variables, self.domains))


@dataclass(frozen=True)
class Noise:
    """Finite exogenous source: value i drawn with probability probs[i]."""

    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if any(p < 0 for p in self.probs) or sum(self.probs) != 1:
            raise ModelError(f"noise probabilities {self.probs} do not form a distribution")

    @property
    def size(self) -> int:
        return len(self.probs)


FAIR_COIN = Noise((Fraction(1, 2), Fraction(1, 2)))
TRIVIAL = Noise((Fraction(1),))


def coin(p_one: Fraction) -> Noise:
    return Noise((1 - Fraction(p_one), Fraction(p_one)))


Mechanism = Mapping[tuple, int]


class DiscreteScm:
    """Finite SCM over an ADMG with explicit exogenous noise.

    The mechanism of vertex v maps (parent values in graph order, own noise,
    incident bidirected-edge noises in edge declaration order) to a value in
    v's domain, and must be total over that product.
    """

    def __init__(
        self,
        graph: Admg,
        domains: Mapping[str, Sequence[int]],
        vertex_noise: Mapping[str, Noise],
        edge_noise: Mapping[tuple[str, str], Noise],
        mechanisms: Mapping[str, Mechanism],
    ):
        self.graph = graph
        self.domains = {v: tuple(domains[v]) for v in graph.vertices}
        self.vertex_noise = {v: vertex_noise.get(v, TRIVIAL) for v in graph.vertices}
        self.edge_noise = {}
        for e in graph.bidirected:
            if e not in edge_noise:
                raise ModelError(f"missing noise for bidirected edge {e}")
            self.edge_noise[e] = edge_noise[e]
        extra = set(edge_noise) - set(graph.bidirected)
        if extra:
            raise ModelError(f"noise for unknown bidirected edge(s) {sorted(extra)}")
        self.mechanisms = {v: dict(mechanisms[v]) for v in graph.vertices}
        self._edges_at = {
            v: tuple(e for e in graph.bidirected if v in e) for v in graph.vertices
        }
        self._validate()

    def input_signature(self, v: str):
        """(parents, incident bidirected edges) defining the mechanism key."""
        return self.graph.parents_of(v), self._edges_at[v]

    def _mech_key(self, v, parent_vals, own, edge_vals):
        return tuple(parent_vals) + (own,) + tuple(edge_vals)

    def _validate(self):
        for v in self.graph.vertices:
            parents, edges = self.input_signature(v)
            spaces = [self.domains[p] for p in parents]
            spaces.append(range(self.vertex_noise[v].size))
            spaces.extend(range(self.edge_noise[e].size) for e in edges)
            table = self.mechanisms[v]
            for key in itertools.product(*spaces):
                if key not in table:
                    raise ModelError(f"mechanism of {v} is not total: missing {key}")
                if table[key] not in self.domains[v]:
                    raise ModelError(f"mechanism of {v} maps {key} outside its domain")

    # -- world enumeration ---------------------------------------------------

    def noise_space(self):
        """Deterministic enumeration of complete exogenous configurations as
        (config dict, probability) pairs; vertex sources first, then edges.
        Materialised once and cached: the same worlds back every regime."""
        if getattr(self, "_worlds", None) is not None:
            return self._worlds
        names: list = list(self.graph.vertices) + list(self.graph.bidirected)
        sources = [self.vertex_noise[v] for v in self.graph.vertices] + [
            self.edge_noise[e] for e in self.graph.bidirected
        ]
        total = 1
        for s in sources:
            total *= s.size
        if total > ENUMERATION_GUARD:
            raise EnumerationLimitError(
                f"{total} exogenous configurations exceed the {ENUMERATION_GUARD} guard"
            )
        den = 1
        for s in sources:
            d = 1
            for p in s.probs:
                d = d * p.denominator // _gcd(d, p.denominator)
            den *= d
        worlds = []
        for values in itertools.product(*(range(s.size) for s in sources)):
            pr = Fraction(1)
            for s, val in zip(sources, values):
                pr *= s.probs[val]
            if pr == 0:
                continue
            worlds.append((dict(zip(names, values)), pr))
        self._worlds = tuple(worlds)
        # integer weights over a common denominator for fast accumulation
        self._world_den = den
        self._world_nums = tuple(int(pr * den) for _, pr in worlds)
        return self._worlds

    def evaluate_world(self, config: Mapping, regime: Mapping[str, int] | None = None) -> dict[str, int]:
        """Vertex values for one exogenous configuration, with intervened
        vertices clamped to the regime."""
        regime = regime or {}
        out: dict[str, int] = {}
        for v in self.graph.topological_order():
            if v in regime:
                out[v] = regime[v]
                continue
            parents, edges = self.input_signature(v)
            key = self._mech_key(
                v, (out[p] for p in parents), config[v], (config[e] for e in edges)
            )
            out[v] = self.mechanisms[v][key]
        return out

    # -- distributions ---------------------------------------------------------

    def observational_dist(self) -> DistTable:
        return self.interventional_dist({})

    def interventional_dist(self, regime: Mapping[str, int]) -> DistTable:
        """Joint over non-intervened vertices in the mutilated model."""
        for v, val in regime.items():
            if val not in self.domains[v]:
                raise ModelError(f"regime value {v}={val} outside domain")
        keep = tuple(v for v in self.graph.vertices if v not in regime)
        worlds = self.noise_space()
        nums: dict[Assignment, int] = {}
        order = self.graph.topological_order()
        plans = [(v, *self.input_signature(v)) for v in order]
        mechs = self.mechanisms
        for (config, _), num in zip(worlds, self._world_nums):
            out = dict(regime)
            for v, parents, edges in plans:
                if v in regime:
                    continue
                key = tuple(out[p] for p in parents) + (config[v],) + tuple(
                    config[e] for e in edges
                )
                out[v] = mechs[v][key]
            k = tuple(out[v] for v in keep)
            nums[k] = nums.get(k, 0) + num
        den = self._world_den
        counts = {k: Fraction(n, den) for k, n in nums.items()}
        return DistTable.from_counts(keep, tuple(self.domains[v] for v in keep), counts)

    def counterfactual_dist(self, terms: Union[CfTerm, Iterable[CfTerm]]) -> DistTable:
        """Exact joint law of one or more (possibly cross-world) terms.

        All terms are evaluated against the same exogenous draw, with shared
        subterms computed once per draw.
        """
        roots = (terms,) if isinstance(terms, CfTerm) else tuple(terms)
        names = tuple(t.target for t in roots)
        doms = tuple(self.domains[t.target] for t in roots)
        nums: dict[Assignment, int] = {}
        worlds = self.noise_space()
        for (config, _), num in zip(worlds, self._world_nums):
            memo: dict[CfTerm, int] = {}
            key = tuple(self._eval_term(t, config, memo) for t in roots)
            nums[key] = nums.get(key, 0) + num
        den = self._world_den
        counts = {k: Fraction(n, den) for k, n in nums.items()}
        return DistTable.from_counts(names, doms, counts)

    def _eval_term(self, term: CfTerm, config, memo) -> int:
        if term in memo:
            return memo[term]
        v = term.target
        given = dict(term.args)
        parents, edges = self.input_signature(v)
        if set(given) != set(parents):
            raise ModelError(
                f"term for {v} binds {sorted(given)} but its parents are {list(parents)}"
            )
        parent_vals = []
        for p in parents:
            arg = given[p]
            if isinstance(arg, Const):
                parent_vals.append(arg.value)
            else:
                parent_vals.append(self._eval_term(arg, config, memo))
        key = self._mech_key(v, parent_vals, config[v], (config[e] for e in edges))
        val = self.mechanisms[v][key]
        memo[term] = val
        return val


# -- independent evaluation routes -------------------------------------------


def truncated_factorization(g: Admg, obs: DistTable, regime: Mapping[str, int]) -> DistTable:
    """g-formula route for bidirected-free graphs: the product of observed
    conditionals of non-intervened vertices, with the regime clamped.

    Independent of the mutilation route, for cross-checking.
    """
    if g.bidirected:
        raise ModelError("truncated factorization applies to bidirected-free graphs")
    idx = {v: i for i, v in enumerate(obs.variables)}
    keep = tuple(v for v in g.vertices if v not in regime)
    doms = tuple(obs.domains[idx[v]] for v in keep)
    counts: dict[Assignment, Fraction] = {}
    for values in itertools.product(*doms):
        full = dict(regime)
        full.update(zip(keep, values))
        pr = Fraction(1)
        for v in g.vertices:
            if v in regime:
                continue
            pa = g.parents_of(v)
            num = obs.event({v: full[v], **{p: full[p] for p in pa}})
            den = obs.event({p: full[p] for p in pa}) if pa else Fraction(1)
            if den == 0:
                # unreachable parent configuration contributes nothing
                pr = Fraction(0)
                break
            pr *= num / den
        if pr:
            counts[values] = counts.get(values, Fraction(0)) + pr
    return DistTable.from_counts(keep, doms, counts)


def tabulate(input_spaces, fn) -> dict:
    """Tabulate fn over the product of input spaces; helper for model builders."""
    return {key: fn(*key) for key in itertools.product(*input_spaces)}
