"""Command-line surface.

Exit codes: 0 success, 1 domain failure (recanting district, hedge, missing
counterexample precondition), 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from .counterexample import counterexample_models, verify_counterexample
from .counterfactual import unroll
from .errors import (
    NotIdentifiableError,
    ParseError,
    RecantError,
    RecantingDistrictError,
)
from .evaluate import Environment, decompose, evaluate, total_effect
from .formula import Expectation, canonicalize
from .identify import identify_pse, interventional_functional
from .paths import find_recanting_districts
from .textio import (
    parse_model,
    parse_problem,
    parse_table,
    render_formula,
    render_model,
    render_table,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _load_problem(path: str):
    return parse_problem(Path(path).read_text())


def _print_reports(reports, out):
    for r in reports:
        print(
            "recanting district={%s} treatment=%s in_pi=%s not_in_pi=%s"
            % (
                ",".join(r.district),
                r.treatment,
                "->".join(r.path_in_pi),
                "->".join(r.path_not_in_pi),
            ),
            file=out,
        )


def cmd_check(args) -> int:
    spec = _load_problem(args.spec)
    reports = find_recanting_districts(spec.graph, spec.bundle())
    if not reports:
        print("no recanting district; effect is a functional of interventional densities")
        return EXIT_OK
    _print_reports(reports, sys.stdout)
    return EXIT_DOMAIN


def cmd_unroll(args) -> int:
    spec = _load_problem(args.spec)
    terms = unroll(spec.graph, spec.bundle(), spec.active_map(), spec.baseline_map())
    for y, t in zip(spec.outcomes, terms):
        print(f"{y} = {t.render()}")
    return EXIT_OK


def cmd_identify(args) -> int:
    spec = _load_problem(args.spec)
    bundle = spec.bundle()
    style = "latex" if args.latex else "text"
    try:
        if args.interventional:
            expr = interventional_functional(spec.graph, bundle)
        else:
            expr = identify_pse(spec.graph, bundle)
    except RecantingDistrictError as exc:
        _print_reports(exc.reports, sys.stdout)
        return EXIT_DOMAIN
    except NotIdentifiableError as exc:
        print(str(exc.hedge))
        return EXIT_DOMAIN
    print(render_formula(canonicalize(expr), values=spec.values, style=style))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    spec = _load_problem(args.spec)
    bundle = spec.bundle()
    table = parse_table(Path(args.table).read_text())
    try:
        expr = identify_pse(spec.graph, bundle)
    except RecantingDistrictError as exc:
        _print_reports(exc.reports, sys.stdout)
        return EXIT_DOMAIN
    except NotIdentifiableError as exc:
        print(str(exc.hedge))
        return EXIT_DOMAIN
    env = Environment(obs=table, values=spec.values)
    result = evaluate(expr, env, order=spec.outcomes)
    print(render_table(result), end="")
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = _load_problem(args.spec)
    model = parse_model(Path(args.model).read_text(), spec.graph)
    what = args.what
    if what == "obs":
        print(render_table(model.observational_dist()), end="")
    elif what.startswith("do:") or what == "do":
        regime = {}
        body = what[3:] if what.startswith("do:") else ""
        for item in filter(None, body.split(",")):
            var, _, val = item.partition("=")
            if not val:
                raise ParseError(f"bad regime item {item!r}")
            regime[var] = int(val)
        print(render_table(model.interventional_dist(regime)), end="")
    elif what == "pse":
        terms = unroll(spec.graph, spec.bundle(), spec.active_map(), spec.baseline_map())
        print(render_table(model.counterfactual_dist(terms)), end="")
    elif what == "total":
        y = spec.outcomes[0]
        act = model.interventional_dist(spec.active_map()).expectation(y)
        base = model.interventional_dist(spec.baseline_map()).expectation(y)
        print(act - base)
    else:
        raise ParseError(f"unknown oracle query {what!r}")
    return EXIT_OK


def cmd_counterexample(args) -> int:
    spec = _load_problem(args.spec)
    bundle = spec.bundle()
    reports = find_recanting_districts(spec.graph, bundle)
    if not reports:
        print("no recanting district: the effect is identifiable, nothing to refute")
        return EXIT_DOMAIN
    report = reports[0]
    eps = Fraction(args.epsilon)
    m1, m2 = counterexample_models(spec.graph, bundle, report, eps, verify=False)
    summary = verify_counterexample(spec.graph, bundle, m1, m2)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "model1.scm").write_text(render_model(m1))
    (outdir / "model2.scm").write_text(render_model(m2))
    _print_reports([report], sys.stdout)
    print("interventional agreement: exact over all regimes")
    print("observational joints: strictly positive")
    print(f"pse total variation distance: {summary['tvd']}")
    print(f"wrote {outdir / 'model1.scm'} and {outdir / 'model2.scm'}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    spec = _load_problem(args.spec)
    bundle = spec.bundle()
    table = parse_table(Path(args.table).read_text())
    env = Environment(obs=table, values=spec.values)
    try:
        tot, in_pi, not_in_pi = decompose(spec.graph, bundle, env)
    except RecantingDistrictError as exc:
        _print_reports(exc.reports, sys.stdout)
        return EXIT_DOMAIN
    except NotIdentifiableError as exc:
        print(str(exc.hedge))
        return EXIT_DOMAIN
    print(f"total {tot}")
    print(f"in_pi {in_pi}")
    print(f"not_in_pi {not_in_pi}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="recant",
        description="path-specific effect identification via recanting districts",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="recanting-district verdict")
    p.add_argument("spec")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("unroll", help="nested counterfactual for the effect")
    p.add_argument("spec")
    p.set_defaults(fn=cmd_unroll)

    p = sub.add_parser("identify", help="identification formula")
    p.add_argument("spec")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--interventional", action="store_true")
    mode.add_argument("--observational", action="store_true")
    p.add_argument("--latex", action="store_true")
    p.set_defaults(fn=cmd_identify)

    p = sub.add_parser("evaluate", help="evaluate the identified effect on a table")
    p.add_argument("spec")
    p.add_argument("--table", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("oracle", help="exact SCM oracle queries")
    p.add_argument("spec")
    p.add_argument("--model", required=True)
    p.add_argument("--what", default="pse")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("counterexample", help="write a refuting model pair")
    p.add_argument("spec")
    p.add_argument("--epsilon", default="1/1000")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_counterexample)

    p = sub.add_parser("decompose", help="total / in-pi / not-in-pi effects")
    p.add_argument("spec")
    p.add_argument("--table", required=True)
    p.set_defaults(fn=cmd_decompose)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RecantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
