"""Symbolic probability-expression IR with a canonical normal form.

Expressions are built from sums over finite value indices, products,
interventional terms p(T | do(R)), observed conditional terms p(T | C),
conditional expectations, expectation-of-a-functional nodes, differences and
rational scalars.  ``canonicalize`` puts an expression into a normal form
(linear combination of sorted sum-of-product terms with canonically renamed
indices and probability-identity merges applied); structural equality of
canonical forms is the comparison relation used throughout the tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

ACTIVE = "active"
BASELINE = "baseline"
INDEX = "index"
LIT = "lit"

_KIND_RANK = {INDEX: 0, ACTIVE: 1, BASELINE: 2, LIT: 3}


@dataclass(frozen=True, order=True)
class Sym:
    """Value symbol attached to a vertex.

    kind 'active'/'baseline' are the two treatment values, 'index' a
    summation-bound (or outcome-free) value, 'lit' a fixed constant.  ``tag``
    disambiguates several bound indices of one vertex.
    """

    var: str
    kind: str = INDEX
    tag: int = 0
    value: int | None = None


def idx(var: str, tag: int = 0) -> Sym:
    return Sym(var, INDEX, tag)


def active(var: str) -> Sym:
    return Sym(var, ACTIVE)


def baseline(var: str) -> Sym:
    return Sym(var, BASELINE)


def lit(var: str, value: int) -> Sym:
    return Sym(var, LIT, 0, value)


Entry = tuple[str, Sym]
Entries = tuple[Entry, ...]


def entries(pairs: Iterable[tuple[str, Sym]]) -> Entries:
    return tuple(pairs)


@dataclass(frozen=True)
class Scalar:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


ZERO = Scalar(Fraction(0))
ONE = Scalar(Fraction(1))


@dataclass(frozen=True)
class ObsTerm:
    """Observed conditional probability p(targets | given)."""

    targets: Entries
    given: Entries = ()


@dataclass(frozen=True)
class DoTerm:
    """Interventional probability p(targets | do(regime))."""

    targets: Entries
    regime: Entries = ()


@dataclass(frozen=True)
class ExpTerm:
    """Observed conditional expectation E[var | given], scored by domain index."""

    var: str
    given: Entries = ()


@dataclass(frozen=True)
class Expectation:
    """Expectation of ``var`` under the distribution denoted by ``dist``."""

    var: str
    dist: "Expr"


@dataclass(frozen=True)
class Product:
    factors: tuple["Expr", ...]


@dataclass(frozen=True)
class Sum:
    indices: tuple[Sym, ...]
    body: "Expr"


@dataclass(frozen=True)
class Difference:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Ratio:
    """Internal node for kernel conditionals that do not telescope to a
    primitive; eliminated by cancellation whenever possible."""

    num: "Expr"
    den: "Expr"


@dataclass(frozen=True)
class LinearComb:
    """Canonical top-level form: a signed rational combination of terms."""

    terms: tuple[tuple[Fraction, "Expr"], ...]


Expr = Union[
    Scalar, ObsTerm, DoTerm, ExpTerm, Expectation, Product, Sum, Difference, Ratio, LinearComb
]


def product(factors: Iterable[Expr]) -> Expr:
    fs = tuple(factors)
    if not fs:
        return ONE
    if len(fs) == 1:
        return fs[0]
    return Product(fs)


def summation(indices: Iterable[Sym], body: Expr) -> Expr:
    ix = tuple(indices)
    return Sum(ix, body) if ix else body


# ---------------------------------------------------------------------------
# symbol accounting


def _atom_syms(e: Expr):
    """Symbols appearing in one leaf term."""
    if isinstance(e, ObsTerm):
        return [s for _, s in e.targets] + [s for _, s in e.given]
    if isinstance(e, DoTerm):
        return [s for _, s in e.targets] + [s for _, s in e.regime]
    if isinstance(e, ExpTerm):
        return [s for _, s in e.given]
    return []


def free_syms(e: Expr) -> set[Sym]:
    """Index symbols not bound by any enclosing Sum."""
    if isinstance(e, (ObsTerm, DoTerm, ExpTerm)):
        return {s for s in _atom_syms(e) if s.kind == INDEX}
    if isinstance(e, Scalar):
        return set()
    if isinstance(e, Expectation):
        return free_syms(e.dist)
    if isinstance(e, Product):
        return set().union(*(free_syms(f) for f in e.factors)) if e.factors else set()
    if isinstance(e, Sum):
        return free_syms(e.body) - set(e.indices)
    if isinstance(e, Difference):
        return free_syms(e.left) | free_syms(e.right)
    if isinstance(e, Ratio):
        return free_syms(e.num) | free_syms(e.den)
    if isinstance(e, LinearComb):
        return set().union(*(free_syms(t) for _, t in e.terms)) if e.terms else set()
    raise TypeError(f"not an expression: {e!r}")


def _substitute(e: Expr, mapping: dict[Sym, Sym]) -> Expr:
    if not mapping:
        return e
    if isinstance(e, Scalar):
        return e
    if isinstance(e, ObsTerm):
        return ObsTerm(
            tuple((v, mapping.get(s, s)) for v, s in e.targets),
            tuple((v, mapping.get(s, s)) for v, s in e.given),
        )
    if isinstance(e, DoTerm):
        return DoTerm(
            tuple((v, mapping.get(s, s)) for v, s in e.targets),
            tuple((v, mapping.get(s, s)) for v, s in e.regime),
        )
    if isinstance(e, ExpTerm):
        return ExpTerm(e.var, tuple((v, mapping.get(s, s)) for v, s in e.given))
    if isinstance(e, Expectation):
        return Expectation(e.var, _substitute(e.dist, mapping))
    if isinstance(e, Product):
        return Product(tuple(_substitute(f, mapping) for f in e.factors))
    if isinstance(e, Sum):
        inner = {k: v for k, v in mapping.items() if k not in e.indices}
        return Sum(e.indices, _substitute(e.body, inner))
    if isinstance(e, Difference):
        return Difference(_substitute(e.left, mapping), _substitute(e.right, mapping))
    if isinstance(e, Ratio):
        return Ratio(_substitute(e.num, mapping), _substitute(e.den, mapping))
    if isinstance(e, LinearComb):
        return LinearComb(tuple((c, _substitute(t, mapping)) for c, t in e.terms))
    raise TypeError(f"not an expression: {e!r}")


def substitute_symbols(e: Expr, mapping: dict[Sym, Sym]) -> Expr:
    """Replace value symbols throughout (respecting Sum scoping)."""
    return _substitute(e, dict(mapping))


# ---------------------------------------------------------------------------
# canonicalization


def canonicalize(e: Expr) -> Expr:
    """Deterministic normal form; idempotent.

    Steps: distribute differences to a linear combination, flatten and hoist
    sums out of products, merge adjacent sums, apply probability-identity
    rewrites (chain-rule merge of same-world conditionals, tower collapse of
    conditional expectations, marginalisation of summed-out barren targets),
    rename bound indices canonically and sort everything.
    """
    terms = _linearize(e)
    normed: dict[Expr, Fraction] = {}
    for coeff, term in terms:
        t = _normalize_term(term)
        if isinstance(t, Scalar):
            coeff, t = coeff * t.value, ONE
        if coeff == 0:
            continue
        normed[t] = normed.get(t, Fraction(0)) + coeff
    items = sorted(
        ((c, t) for t, c in normed.items() if c != 0),
        key=lambda ct: _sort_key(ct[1]),
    )
    if not items:
        return ZERO
    if len(items) == 1:
        c, t = items[0]
        if t == ONE:
            return Scalar(c)
        if c == 1:
            return t
    return LinearComb(tuple(items))


def canonically_equal(a: Expr, b: Expr) -> bool:
    return canonicalize(a) == canonicalize(b)


def _linearize(e: Expr) -> list[tuple[Fraction, Expr]]:
    if isinstance(e, Scalar):
        return [(e.value, ONE)]
    if isinstance(e, (ObsTerm, DoTerm, ExpTerm)):
        return [(Fraction(1), e)]
    if isinstance(e, Difference):
        return _linearize(e.left) + [(-c, t) for c, t in _linearize(e.right)]
    if isinstance(e, LinearComb):
        return [(c * ci, ti) for c, t in e.terms for ci, ti in _linearize(t)]
    if isinstance(e, Product):
        out: list[tuple[Fraction, list[Expr]]] = [(Fraction(1), [])]
        for f in e.factors:
            lin = _linearize(f)
            out = [(c0 * c1, fs + [t]) for c0, fs in out for c1, t in lin]
        return [(c, product([f for f in fs if f is not ONE])) for c, fs in out]
    if isinstance(e, Sum):
        return [(c, Sum(e.indices, t)) for c, t in _linearize(e.body)]
    if isinstance(e, Expectation):
        return [(c, Expectation(e.var, t)) for c, t in _linearize(e.dist)]
    if isinstance(e, Ratio):
        # a difference below a ratio does not distribute; normalise children
        return [(Fraction(1), Ratio(canonicalize(e.num), canonicalize(e.den)))]
    raise TypeError(f"not an expression: {e!r}")


def _normalize_term(e: Expr) -> Expr:
    prev = None
    cur = e
    for _ in range(64):
        if cur == prev:
            break
        prev = cur
        cur = _flatten(cur)
        cur = _rewrite(cur)
    cur = _rename_bound(cur)
    return _sort(cur)


def _flatten(e: Expr) -> Expr:
    """Flatten products, hoist sums out of products, merge nested sums,
    normalise Expectation nodes into ExpTerm form where possible."""
    if isinstance(e, (Scalar, ObsTerm, DoTerm, ExpTerm)):
        return e
    if isinstance(e, Ratio):
        num, den = _flatten(e.num), _flatten(e.den)
        cancelled = _cancel_ratio(num, den)
        return cancelled if cancelled is not None else Ratio(num, den)
    if isinstance(e, Expectation):
        return _normalize_expectation(e)
    if isinstance(e, Sum):
        body = _flatten(e.body)
        indices = list(e.indices)
        while isinstance(body, Sum):
            indices.extend(body.indices)
            body = body.body
        if isinstance(body, Scalar) and body.value == 0:
            return ZERO
        return summation(indices, body)
    if isinstance(e, Product):
        parts = [_flatten(f) for f in e.factors]
        flat0: list[Expr] = []
        coeff = Fraction(1)
        for f in parts:
            if isinstance(f, Product):
                flat0.extend(f.factors)
            elif isinstance(f, Scalar):
                coeff *= f.value
            else:
                flat0.append(f)
        if coeff == 0:
            return ZERO
        taken: set[Sym] = set()
        for f in flat0:
            taken |= free_syms(f)
        flat: list[Expr] = []
        hoisted: list[Sym] = []
        for f in flat0:
            if not isinstance(f, Sum):
                flat.append(f)
                continue
            # hoist with capture-avoiding renaming
            avoid = taken | free_syms(f.body)
            ren = {}
            for s in f.indices:
                s2 = s
                if s in taken:
                    t = s.tag + 1
                    while Sym(s.var, s.kind, t) in avoid:
                        t += 1
                    s2 = Sym(s.var, s.kind, t)
                    ren[s] = s2
                taken.add(s2)
                avoid.add(s2)
                hoisted.append(s2)
            flat.append(_substitute(f.body, ren) if ren else f.body)
        body = product(([Scalar(coeff)] if coeff != 1 else []) + flat)
        return summation(hoisted, body)
    if isinstance(e, (Difference, LinearComb)):
        raise AssertionError("differences are removed before term normalisation")
    raise TypeError(f"not an expression: {e!r}")


def _normalize_expectation(e: Expectation) -> Expr:
    inner = canonicalize(e.dist)
    if isinstance(inner, LinearComb):
        # expectation is linear in the functional
        return LinearComb(tuple((c, _normalize_expectation(Expectation(e.var, t))) for c, t in inner.terms))
    indices: tuple[Sym, ...] = ()
    body = inner
    if isinstance(body, Sum):
        indices, body = body.indices, body.body
    factors = list(body.factors) if isinstance(body, Product) else [body]
    carriers = [
        i
        for i, f in enumerate(factors)
        if isinstance(f, (ObsTerm, DoTerm)) and any(v == e.var for v, _ in f.targets)
    ]
    if len(carriers) == 1:
        f = factors[carriers[0]]
        if isinstance(f, ObsTerm) and len(f.targets) == 1:
            (v, s) = f.targets[0]
            others = [g for j, g in enumerate(factors) if j != carriers[0]]
            if all(s not in _atom_syms(g) for g in others if isinstance(g, (ObsTerm, DoTerm, ExpTerm))):
                factors[carriers[0]] = ExpTerm(e.var, f.given)
                return summation(indices, product(factors))
    return Expectation(e.var, inner)


def _cancel_ratio(num: Expr, den: Expr):
    if isinstance(den, Scalar) and den.value == 1:
        return num
    nf = list(num.factors) if isinstance(num, Product) else [num]
    df = list(den.factors) if isinstance(den, Product) else [den]
    for f in df:
        if f in nf:
            nf.remove(f)
        else:
            return None
    return product(nf)


def _rewrite(e: Expr) -> Expr:
    """Apply probability-identity merges inside a flattened term."""
    if isinstance(e, Sum):
        return _rewrite_product(e.body, e.indices)
    if isinstance(e, Product):
        return _rewrite_product(e, ())
    return e


def _rewrite_product(e: Expr, indices: tuple[Sym, ...]) -> Expr:
    factors = list(e.factors) if isinstance(e, Product) else [e]
    indices = list(indices)
    changed = True
    while changed:
        changed = False
        # chain-rule merge: p(T1 | C union T2) p(T2 | C) -> p(T1 T2 | C)
        for i, j in itertools.permutations(range(len(factors)), 2):
            a, b = factors[i], factors[j]
            if isinstance(a, ObsTerm) and isinstance(b, ObsTerm):
                if set(a.given) == set(b.given) | set(b.targets):
                    merged = ObsTerm(b.targets + a.targets, b.given)
                    factors = [f for k, f in enumerate(factors) if k not in (i, j)]
                    factors.append(merged)
                    changed = True
                    break
            if isinstance(a, ExpTerm) and isinstance(b, ObsTerm):
                # tower collapse needs the inner variables summed out here
                if set(a.given) == set(b.given) | set(b.targets):
                    tsyms = [s for _, s in b.targets]
                    if all(s in indices for s in tsyms) and all(
                        s not in _atom_syms(f)
                        for k, f in enumerate(factors)
                        if k not in (i, j)
                        for s in tsyms
                    ):
                        factors = [f for k, f in enumerate(factors) if k not in (i, j)]
                        factors.append(ExpTerm(a.var, b.given))
                        indices = [s for s in indices if s not in tsyms]
                        changed = True
                        break
        if changed:
            continue
        # marginalise barren summed targets: an index appearing only as one
        # term's target is summed out of that term
        sym_sites: dict[Sym, list[tuple[int, str]]] = {}
        for k, f in enumerate(factors):
            if isinstance(f, (ObsTerm, DoTerm)):
                tgt, cond = f.targets, (f.given if isinstance(f, ObsTerm) else f.regime)
            elif isinstance(f, ExpTerm):
                tgt, cond = (), f.given
            else:
                tgt, cond = (), ()
                for s in free_syms(f):
                    sym_sites.setdefault(s, []).append((k, "opaque"))
            for _, s in tgt:
                sym_sites.setdefault(s, []).append((k, "target"))
            for _, s in cond:
                sym_sites.setdefault(s, []).append((k, "cond"))
        for s in list(indices):
            sites = sym_sites.get(s, [])
            if len(sites) == 1 and sites[0][1] == "target":
                k = sites[0][0]
                f = factors[k]
                tgts = tuple(en for en in f.targets if en[1] != s)
                if isinstance(f, ObsTerm):
                    factors[k] = ObsTerm(tgts, f.given)
                else:
                    factors[k] = DoTerm(tgts, f.regime)
                indices.remove(s)
                changed = True
                break
        if changed:
            continue
        # normalised conditionals with no targets are unity
        drop = [
            k
            for k, f in enumerate(factors)
            if isinstance(f, (ObsTerm, DoTerm)) and not f.targets
        ]
        if drop:
            factors = [f for k, f in enumerate(factors) if k not in drop]
            changed = True
    if not factors:
        return ONE if not indices else summation(tuple(indices), ONE)
    return summation(tuple(indices), product(factors))


def _rename_bound(e: Expr) -> Expr:
    """Canonical per-scope index renaming: within each Sum, the bound indices
    of one vertex get tags 0.. ranked by their usage signature, so the result
    does not depend on the order subexpressions were assembled in."""
    if isinstance(e, Sum):
        groups: dict[str, list[Sym]] = {}
        for s in e.indices:
            groups.setdefault(s.var, []).append(s)
        outer_free = free_syms(e.body) - set(e.indices)
        ren = {}
        for var, syms in groups.items():
            forbidden = {s.tag for s in outer_free if s.var == var}
            fresh = [t for t in range(len(syms) + len(forbidden)) if t not in forbidden]
            ranked = sorted(syms, key=lambda s: (_usage_signature(e.body, s, syms), s.tag))
            for newtag, s in zip(fresh, ranked):
                if s.tag != newtag:
                    ren[s] = Sym(var, s.kind, newtag)
        body = _substitute(e.body, ren) if ren else e.body
        return Sum(tuple(ren.get(s, s) for s in e.indices), _rename_bound(body))
    if isinstance(e, Product):
        return Product(tuple(_rename_bound(f) for f in e.factors))
    if isinstance(e, Expectation):
        return Expectation(e.var, _rename_bound(e.dist))
    if isinstance(e, Ratio):
        return Ratio(_rename_bound(e.num), _rename_bound(e.den))
    return e


def _usage_signature(body: Expr, s: Sym, group: list[Sym]):
    """Order-free fingerprint of how one bound index is used, with its
    same-vertex siblings wildcarded."""
    marker = Sym(s.var, s.kind, -1)
    sub = {t: Sym(t.var, t.kind, -2) for t in group if t != s}
    sub[s] = marker
    marked = _substitute(body, sub)
    factors = marked.factors if isinstance(marked, Product) else (marked,)
    keys = [_sort_key(_sort(f)) for f in factors if marker in free_syms(f)]
    return tuple(sorted(keys))


def _entry_key(en: Entry):
    v, s = en
    return (v, _KIND_RANK.get(s.kind, 9), s.tag, s.value if s.value is not None else -1)


def _sort(e: Expr) -> Expr:
    if isinstance(e, ObsTerm):
        return ObsTerm(
            tuple(sorted(e.targets, key=_entry_key)), tuple(sorted(e.given, key=_entry_key))
        )
    if isinstance(e, DoTerm):
        return DoTerm(
            tuple(sorted(e.targets, key=_entry_key)), tuple(sorted(e.regime, key=_entry_key))
        )
    if isinstance(e, ExpTerm):
        return ExpTerm(e.var, tuple(sorted(e.given, key=_entry_key)))
    if isinstance(e, Product):
        return Product(tuple(sorted((_sort(f) for f in e.factors), key=_sort_key)))
    if isinstance(e, Sum):
        return Sum(tuple(sorted(e.indices)), _sort(e.body))
    if isinstance(e, Expectation):
        return Expectation(e.var, _sort(e.dist))
    if isinstance(e, Ratio):
        return Ratio(_sort(e.num), _sort(e.den))
    return e


def _sort_key(e: Expr):
    if isinstance(e, Scalar):
        return (0, str(e.value))
    if isinstance(e, ObsTerm):
        return (1, tuple(map(_entry_key, e.targets)), tuple(map(_entry_key, e.given)))
    if isinstance(e, DoTerm):
        return (2, tuple(map(_entry_key, e.targets)), tuple(map(_entry_key, e.regime)))
    if isinstance(e, ExpTerm):
        return (3, e.var, tuple(map(_entry_key, e.given)))
    if isinstance(e, Expectation):
        return (4, e.var, _sort_key(e.dist))
    if isinstance(e, Product):
        return (5, tuple(_sort_key(f) for f in e.factors))
    if isinstance(e, Sum):
        return (6, tuple((s.var, s.tag) for s in e.indices), _sort_key(e.body))
    if isinstance(e, Ratio):
        return (7, _sort_key(e.num), _sort_key(e.den))
    if isinstance(e, LinearComb):
        return (8, tuple((str(c), _sort_key(t)) for c, t in e.terms))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# rendering


def _render_sym(s: Sym, values, style) -> str:
    if s.kind == LIT:
        return f"{s.var}={s.value}"
    if s.kind == INDEX:
        base = s.var if style == "text" else _tex_name(s.var)
        return base + "'" * s.tag
    if values and s.var in values:
        act, base = values[s.var]
        val = act if s.kind == ACTIVE else base
        name = s.var if style == "text" else _tex_name(s.var)
        return f"{name}={val}"
    name = s.var if style == "text" else _tex_name(s.var)
    return name if s.kind == ACTIVE else name + ("*" if style == "text" else "^*")


def _tex_name(v: str) -> str:
    head = v.rstrip("0123456789")
    tail = v[len(head):]
    return f"{head}_{{{tail}}}" if tail else head


def render(e: Expr, style: str = "text", values: dict | None = None) -> str:
    """Deterministic human-readable rendering; ``values`` maps a treatment to
    its (active, baseline) pair so symbols print as explicit bindings."""
    if style not in ("text", "latex"):
        raise ValueError(f"unknown style {style!r}")
    sym = lambda s: _render_sym(s, values, style)
    ent = lambda ens: ", ".join(sym(s) for _, s in ens)
    cdot = " · " if style == "text" else " \\cdot "

    def par(x: Expr) -> str:
        txt = go(x)
        if isinstance(x, (Difference, LinearComb, Sum)):
            return f"({txt})" if style == "text" else f"\\left({txt}\\right)"
        return txt

    def go(x: Expr) -> str:
        if isinstance(x, Scalar):
            return str(x.value)
        if isinstance(x, ObsTerm):
            bar = " | " if style == "text" else " \\mid "
            inner = ent(x.targets) + (bar + ent(x.given) if x.given else "")
            return f"p({inner})"
        if isinstance(x, DoTerm):
            bar = " | " if style == "text" else " \\mid "
            do = f"do({ent(x.regime)})" if style == "text" else f"\\text{{do}}({ent(x.regime)})"
            return f"p({ent(x.targets)}{bar}{do})"
        if isinstance(x, ExpTerm):
            v = x.var if style == "text" else _tex_name(x.var)
            bar = " | " if style == "text" else " \\mid "
            return f"E[{v}{bar + ent(x.given) if x.given else ''}]"
        if isinstance(x, Expectation):
            v = x.var if style == "text" else _tex_name(x.var)
            return f"E[{v}]_{{{go(x.dist)}}}"
        if isinstance(x, Product):
            return cdot.join(par(f) for f in x.factors)
        if isinstance(x, Sum):
            ix = ",".join(sym(s) for s in x.indices)
            head = f"Σ_{{{ix}}}" if style == "text" else f"\\sum_{{{ix}}}"
            body = par(x.body) if isinstance(x.body, (Difference, LinearComb)) else go(x.body)
            return f"{head} {body}"
        if isinstance(x, Difference):
            return f"{par(x.left)} - {par(x.right)}"
        if isinstance(x, Ratio):
            if style == "latex":
                return f"\\frac{{{go(x.num)}}}{{{go(x.den)}}}"
            return f"[{go(x.num)}] / [{go(x.den)}]"
        if isinstance(x, LinearComb):
            parts = []
            for i, (c, t) in enumerate(x.terms):
                sign = "-" if c < 0 else ("+" if i else "")
                mag = abs(c)
                body = par(t) if not isinstance(t, Scalar) else str(mag)
                if isinstance(t, Scalar):
                    piece = str(mag * t.value)
                elif mag == 1:
                    piece = body
                else:
                    piece = f"{mag}{cdot}{body}"
                parts.append(f"{sign} {piece}".strip() if sign else piece)
            return " ".join(parts)
        raise TypeError(f"not an expression: {x!r}")

    return go(e)
