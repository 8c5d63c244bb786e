"""Nested counterfactual term trees and the inductive path-specific unrolling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .admg import Admg
from .paths import PathBundle, relevant_nodes


@dataclass(frozen=True)
class Const:
    """Constant argument of a counterfactual term.

    ``value`` is the concrete domain value used by the oracle; ``label`` is
    the display form (for treatments: the treatment name, primed when it is a
    baseline value).
    """

    value: int
    label: str

    def render(self) -> str:
        return self.label


@dataclass(frozen=True)
class CfTerm:
    """One node of a counterfactual term tree: a target vertex with one
    argument per graph parent (restricted to the hosting subgraph)."""

    target: str
    args: tuple[tuple[str, Union[Const, "CfTerm"]], ...]

    def render(self) -> str:
        if not self.args:
            return f"{self.target}()"
        inner = ", ".join(
            f"{p}={a.render()}" if isinstance(a, Const) else a.render()
            for p, a in self.args
        )
        return f"{self.target}({inner})"

    def subterms(self):
        """All distinct CfTerm nodes of the tree, parents after children."""
        seen: dict[CfTerm, None] = {}

        def visit(t: CfTerm):
            if t in seen:
                return
            for _, a in t.args:
                if isinstance(a, CfTerm):
                    visit(a)
            seen[t] = None

        visit(self)
        return tuple(seen)


def active_const(a: str, value: int) -> Const:
    return Const(value, a)


def baseline_const(a: str, value: int) -> Const:
    return Const(value, a + "'")


def default_values(treatments) -> tuple[dict, dict]:
    """Active 1 / baseline 0 unless a problem supplies its own map."""
    return {a: 1 for a in treatments}, {a: 0 for a in treatments}


def unroll(
    g: Admg,
    bundle: PathBundle,
    active: Mapping[str, int] | None = None,
    baseline: Mapping[str, int] | None = None,
) -> tuple[CfTerm, ...]:
    """Counterfactual terms for the pi-specific effect, one per outcome.

    The inductive rule, applied to each vertex of the relevant set: a green
    parent edge from a treatment contributes the active value, a blue one the
    baseline value; a green edge from a non-treatment parent contributes that
    parent's own pi-specific term, a blue one its all-baseline term.  Shared
    subterms are memoised so the returned trees alias identical nodes, which
    is exactly the unit-level consistency the oracle relies on.
    """
    A = bundle.treatments
    if active is None or baseline is None:
        d_act, d_base = default_values(A)
        active = active if active is not None else d_act
        baseline = baseline if baseline is not None else d_base
    missing = [a for a in A if a not in active or a not in baseline]
    if missing:
        raise ValueError(f"no active/baseline value for treatment(s) {missing}")

    vstar = set(relevant_nodes(g, A, bundle.outcomes))
    aset = set(A)
    memo: dict[tuple[str, bool], CfTerm] = {}

    def term(v: str, in_pi_world: bool) -> CfTerm:
        key = (v, in_pi_world)
        if key in memo:
            return memo[key]
        args = []
        for p in g.parents_of(v):
            green = in_pi_world and bundle.is_green(p, v)
            if p in aset:
                arg = active_const(p, active[p]) if green else baseline_const(p, baseline[p])
            else:
                # parents of relevant vertices are treatments or relevant
                assert p in vstar, f"{p} outside the relevant set"
                arg = term(p, green)
            args.append((p, arg))
        t = CfTerm(v, tuple(args))
        memo[key] = t
        return t

    return tuple(term(y, True) for y in bundle.outcomes)
