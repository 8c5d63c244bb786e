"""Text formats: problem files, model files, distribution tables, formulas.

Every renderer emits a canonical form and every parser accepts it back; the
round trip is byte-stable (parse(render(x)) == x and render is a fixpoint).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .admg import Admg
from .counterfactual import default_values
from .errors import ParseError
from .formula import (
    ACTIVE,
    BASELINE,
    Difference,
    DoTerm,
    Expectation,
    ExpTerm,
    Expr,
    LinearComb,
    ObsTerm,
    Product,
    Scalar,
    Sum,
    Sym,
    render,
)
from .paths import PathBundle, bundle_all, bundle_none, make_bundle
from .scm import DiscreteScm, DistTable, Noise

# ---------------------------------------------------------------------------
# problem files


@dataclass(frozen=True)
class ProblemSpec:
    """Parsed problem: a graph, treatment/outcome sets, a bundle description
    ('all', 'none', or an explicit path list) and treatment value maps."""

    graph: Admg
    treatments: tuple[str, ...]
    outcomes: tuple[str, ...]
    path_spec: object  # "all" | "none" | tuple of paths
    values: dict[str, tuple[int, int]]

    def bundle(self) -> PathBundle:
        if self.path_spec == "all":
            return bundle_all(self.graph, self.treatments, self.outcomes)
        if self.path_spec == "none":
            return bundle_none(self.graph, self.treatments, self.outcomes)
        return make_bundle(self.graph, self.treatments, self.outcomes, self.path_spec)

    def active_map(self) -> dict[str, int]:
        return {a: self.values[a][0] for a in self.treatments}

    def baseline_map(self) -> dict[str, int]:
        return {a: self.values[a][1] for a in self.treatments}


_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")


def parse_problem(text: str) -> ProblemSpec:
    nodes: list[str] = []
    directed: list[tuple[str, str]] = []
    bidirected: list[tuple[str, str]] = []
    treatments: list[str] = []
    outcomes: list[str] = []
    paths: list[tuple[str, ...]] = []
    keyword: str | None = None
    values: dict[str, tuple[int, int]] = {}

    def check_name(tok: str, ln: int) -> str:
        if not _NAME.match(tok):
            raise ParseError(f"bad vertex name {tok!r}", ln)
        return tok

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        if head == "node" and len(toks) == 2:
            nodes.append(check_name(toks[1], ln))
        elif head == "treatment" and len(toks) == 2:
            treatments.append(check_name(toks[1], ln))
        elif head == "outcome" and len(toks) == 2:
            outcomes.append(check_name(toks[1], ln))
        elif head == "path":
            seq = [t for t in toks[1:] if t != "->"]
            if len(seq) < 2 or (len(toks) - 1) != 2 * len(seq) - 1:
                raise ParseError("path must look like: path v0 -> v1 -> ... -> vk", ln)
            paths.append(tuple(check_name(t, ln) for t in seq))
        elif head == "paths" and len(toks) == 2 and toks[1] in ("all", "none"):
            keyword = toks[1]
        elif head == "value" and len(toks) == 4:
            var = check_name(toks[1], ln)
            m_act = re.match(r"active=(-?\d+)$", toks[2])
            m_base = re.match(r"baseline=(-?\d+)$", toks[3])
            if not (m_act and m_base):
                raise ParseError("value line must be: value v active=<int> baseline=<int>", ln)
            values[var] = (int(m_act.group(1)), int(m_base.group(1)))
        elif len(toks) == 3 and toks[1] == "->":
            directed.append((check_name(toks[0], ln), check_name(toks[2], ln)))
        elif len(toks) == 3 and toks[1] == "<->":
            bidirected.append((check_name(toks[0], ln), check_name(toks[2], ln)))
        else:
            raise ParseError(f"cannot parse line {raw!r}", ln)

    try:
        graph = Admg(nodes, directed, bidirected)
    except Exception as exc:
        raise ParseError(str(exc), None, code="graph") from exc
    for v in treatments + outcomes + list(values):
        if v not in graph:
            raise ParseError(f"unknown vertex {v!r}", None, code="unknown-vertex")
    if keyword is not None and paths:
        raise ParseError("use either explicit path lines or a paths keyword, not both", None)
    if keyword is None and not paths:
        raise ParseError("no bundle given: add path lines or `paths all` / `paths none`", None)
    spec = ProblemSpec(
        graph,
        graph.sorted(treatments),
        graph.sorted(outcomes),
        keyword or tuple(paths),
        values,
    )
    for a in spec.treatments:
        values.setdefault(a, (1, 0))
    # surface bundle problems now, with their own error codes
    try:
        spec.bundle()
    except Exception as exc:
        code = "improper-path" if "proper" in str(exc) else "edge-inconsistent"
        raise ParseError(str(exc), None, code=code) from exc
    return spec


def render_problem(spec: ProblemSpec) -> str:
    g = spec.graph
    lines = [f"node {v}" for v in g.vertices]
    lines += [f"{t} -> {h}" for t, h in g.directed]
    lines += [f"{x} <-> {y}" for x, y in g.bidirected]
    lines += [f"treatment {a}" for a in spec.treatments]
    lines += [f"outcome {y}" for y in spec.outcomes]
    lines += [
        f"value {a} active={spec.values[a][0]} baseline={spec.values[a][1]}"
        for a in spec.treatments
    ]
    if spec.path_spec in ("all", "none"):
        lines.append(f"paths {spec.path_spec}")
    else:
        bundle = spec.bundle()
        lines += [f"path {' -> '.join(p)}" for p in bundle.paths]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# model files


def _edge_name(e: tuple[str, str]) -> str:
    return f"u({e[0]},{e[1]})"


def render_model(m: DiscreteScm) -> str:
    g = m.graph
    lines = []
    for v in g.vertices:
        lines.append(f"domain {v} {' '.join(str(x) for x in m.domains[v])}")
    for v in g.vertices:
        lines.append(f"noise {v} {' '.join(str(p) for p in m.vertex_noise[v].probs)}")
    for e in g.bidirected:
        lines.append(f"noise {_edge_name(e)} {' '.join(str(p) for p in m.edge_noise[e].probs)}")
    for v in g.vertices:
        for key in sorted(m.mechanisms[v]):
            ins = " ".join(str(x) for x in key)
            lines.append(f"mech {v} {ins} -> {m.mechanisms[v][key]}")
    return "\n".join(lines) + "\n"


def parse_model(text: str, graph: Admg) -> DiscreteScm:
    domains: dict[str, tuple[int, ...]] = {}
    noises: dict[str, Noise] = {}
    edge_noises: dict[tuple[str, str], Noise] = {}
    mech_rows: dict[str, dict[tuple, int]] = {}
    edge_by_name = {_edge_name(e): e for e in graph.bidirected}

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "domain" and len(toks) >= 3:
            if toks[1] not in graph:
                raise ParseError(f"unknown vertex {toks[1]!r}", ln, code="unknown-vertex")
            domains[toks[1]] = tuple(int(t) for t in toks[2:])
        elif toks[0] == "noise" and len(toks) >= 3:
            try:
                probs = tuple(Fraction(t) for t in toks[2:])
            except ValueError as exc:
                raise ParseError(f"bad probability in noise line: {exc}", ln) from exc
            if toks[1] in edge_by_name:
                edge_noises[edge_by_name[toks[1]]] = Noise(probs)
            elif toks[1] in graph:
                noises[toks[1]] = Noise(probs)
            else:
                raise ParseError(f"unknown noise source {toks[1]!r}", ln, code="unknown-vertex")
        elif toks[0] == "mech" and "->" in toks:
            arrow = toks.index("->")
            if arrow != len(toks) - 2 or toks[1] not in graph:
                raise ParseError("mech line must be: mech v <inputs...> -> <value>", ln)
            key = tuple(int(t) for t in toks[2:arrow])
            mech_rows.setdefault(toks[1], {})[key] = int(toks[-1])
        else:
            raise ParseError(f"cannot parse line {raw!r}", ln)

    missing = [v for v in graph.vertices if v not in domains]
    if missing:
        raise ParseError(f"no domain for {missing}", None)
    return DiscreteScm(graph, domains, noises, edge_noises, mech_rows)


# ---------------------------------------------------------------------------
# distribution tables


def render_table(t: DistTable) -> str:
    lines = [" ".join(t.variables) + " p"]
    for assign in sorted(t.probs):
        lines.append(" ".join(str(x) for x in assign) + " " + str(t.probs[assign]))
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> DistTable:
    lines = [l for l in (raw.split("#", 1)[0].strip() for raw in text.splitlines()) if l]
    if not lines:
        raise ParseError("empty table", 1)
    header = lines[0].split()
    if not header or header[-1] != "p":
        raise ParseError("table header must end with column p", 1)
    variables = tuple(header[:-1])
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        toks = line.split()
        if len(toks) != len(header):
            raise ParseError(f"expected {len(header)} columns", ln)
        try:
            assign = tuple(int(t) for t in toks[:-1])
            pr = Fraction(toks[-1])
        except ValueError as exc:
            raise ParseError(str(exc), ln) from exc
        rows.append((assign, pr))
    if rows != sorted(rows, key=lambda r: r[0]):
        raise ParseError("table rows must be in lexicographic order", None)
    domains = tuple(
        tuple(sorted({assign[i] for assign, _ in rows})) for i in range(len(variables))
    )
    return DistTable.from_counts(variables, domains, dict(rows))


# ---------------------------------------------------------------------------
# formula text


_TOKEN = re.compile(
    r"\s*(Σ_\{|\]_\{|E\[|do\(|p\(|[()\[\]{}|·+,\-]|[A-Za-z_][A-Za-z_0-9]*'*\*?(?:=-?\d+)?|\d+/\d+|\d+)"
)


def _tokenize_formula(text: str) -> list[str]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ParseError(f"bad formula text near {text[pos:pos+20]!r}", None)
            break
        out.append(m.group(1))
        pos = m.end()
    return out


class _FormulaParser:
    """Recursive-descent parser for the text rendering of expressions."""

    def __init__(self, tokens: list[str], values: dict[str, tuple[int, int]]):
        self.toks = tokens
        self.pos = 0
        self.values = values

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self, expect=None):
        tok = self.peek()
        if tok is None or (expect is not None and tok != expect):
            raise ParseError(f"expected {expect!r}, found {tok!r} in formula", None)
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek() is not None:
            raise ParseError(f"trailing tokens in formula: {self.toks[self.pos:]}", None)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek() in ("-", "+"):
            op = self.take()
            right = self.term()
            left = Difference(left, right) if op == "-" else _plus(left, right)
        return left

    def term(self) -> Expr:
        if self.peek() == "Σ_{":
            self.take()
            syms = []
            while self.peek() != "}":
                syms.append(self.sym(self.take()))
                if self.peek() == ",":
                    self.take()
            self.take("}")
            return Sum(tuple(syms), self.term())
        return self.prod()

    def prod(self) -> Expr:
        factors = [self.atom()]
        while self.peek() == "·":
            self.take()
            factors.append(self.atom())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def atom(self) -> Expr:
        tok = self.peek()
        if tok == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if tok == "p(":
            return self.prob()
        if tok == "E[":
            return self.exp()
        if tok is not None and re.match(r"-?\d+(/\d+)?$", tok):
            self.take()
            return Scalar(Fraction(tok))
        raise ParseError(f"unexpected token {tok!r} in formula", None)

    def entries(self, closers) -> tuple:
        out = []
        while self.peek() not in closers:
            out.append(self.entry(self.take()))
            if self.peek() == ",":
                self.take()
        return tuple(out)

    def prob(self) -> Expr:
        self.take("p(")
        targets = self.entries(("|", ")"))
        if self.peek() == ")":
            self.take()
            return ObsTerm(targets, ())
        self.take("|")
        if self.peek() == "do(":
            self.take()
            regime = self.entries((")",))
            self.take(")")
            self.take(")")
            return DoTerm(targets, regime)
        given = self.entries((")",))
        self.take(")")
        return ObsTerm(targets, given)

    def exp(self) -> Expr:
        self.take("E[")
        var_tok = self.take()
        var = re.match(r"[A-Za-z_][A-Za-z_0-9]*", var_tok).group(0)
        if self.peek() == "|":
            self.take()
            given = self.entries(("]",))
            self.take("]")
            return ExpTerm(var, given)
        if self.peek() == "]_{":
            self.take()
            inner = self.expr()
            self.take("}")
            return Expectation(var, inner)
        self.take("]")
        return ExpTerm(var, ())

    def sym(self, tok: str) -> Sym:
        var, primes, star, value = _split_symbol(tok)
        if value is not None and var in self.values:
            act, base = self.values[var]
            if value == act:
                return Sym(var, ACTIVE)
            if value == base:
                return Sym(var, BASELINE)
            return Sym(var, "lit", 0, value)
        if star:
            return Sym(var, BASELINE)
        if var in self.values and not primes:
            # bare treatment name renders the active symbol
            return Sym(var, ACTIVE)
        return Sym(var, "index", primes)

    def entry(self, tok: str):
        s = self.sym(tok)
        return (s.var, s)


def _split_symbol(tok: str):
    m = re.match(r"([A-Za-z_][A-Za-z_0-9]*)('*)(\*?)(?:=(-?\d+))?$", tok)
    if not m:
        raise ParseError(f"bad symbol {tok!r}", None)
    var, primes, star, val = m.groups()
    return var, len(primes), bool(star), (int(val) if val is not None else None)


def _plus(left: Expr, right: Expr) -> Expr:
    return LinearComb(((Fraction(1), left), (Fraction(1), right)))


def parse_formula(text: str, values: dict[str, tuple[int, int]] | None = None) -> Expr:
    """Inverse of formula.render(style='text', values=values).

    The value map tells treatment bindings apart; without it, a bare name is
    an index and a starred name a baseline symbol.
    """
    toks = _tokenize_formula(text)
    # the E[v]_{...} form arrives tokenized as E[ v ] _ { ... }; normalise
    return _FormulaParser(toks, dict(values or {})).parse()


def render_formula(e: Expr, values=None, style: str = "text") -> str:
    return render(e, style=style, values=values)
