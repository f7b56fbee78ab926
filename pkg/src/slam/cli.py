"""Command-line frontend.

Subcommands: check, infer, eval, productivity, solve, gen-hard.  Exit
codes are the success signal: 0 for yes/valid/PASS, 1 for no/invalid/FAIL
or untypable, 2 for parse or validation errors (diagnostics on stderr).
With --porcelain the output is line-oriented `key: value` text with keys
`type`, `verdict`, `witness.<var>`, `report.<n>`.
"""

from __future__ import annotations

import argparse
import sys

from .constraints import (
    SizeConstraint, encode_3cnf, format_constraint, is_valid,
    parse_cnf_dimacs, parse_constraint_file,
)
from .parser import ParseError, SlamFile, parse_slam, parse_term, parse_type
from .printer import print_type
from .rewrite import (
    Approximant, Bottom, Constr, EvalBudget, NonObservableType, Opaque,
    approximant, erase, productivity_check,
)
from .sizes import INF
from .syntax import (
    INFTY, Arrow, Coind, DefRegistry, Forall, PLam, RegistryError, Succ,
    Term, check_term_wf, check_type_wf, subst_term, tv, validate_registry,
)
from .typecheck import check, minimal_type


class CliError(Exception):
    pass


def _load_slam(path: str) -> SlamFile:
    try:
        with open(path) as f:
            src = f.read()
    except OSError as e:
        raise CliError(str(e))
    sf = parse_slam(src)
    diags = validate_registry(sf.registry)
    if diags:
        raise CliError("\n".join(f"{path}: {d}" for d in diags))
    return sf


def _resolve_term(sf: SlamFile, src: str) -> Term:
    t = parse_term(src, sf.registry)
    for name, body in sf.bindings.items():
        t = subst_term(t, body, name)
    diags = check_term_wf(t, sf.registry)
    if diags:
        raise CliError("\n".join(map(str, diags)))
    return t


def _parse_checked_type(sf: SlamFile, src: str):
    ty = parse_type(src, sf.registry)
    diags = check_type_wf(ty, sf.registry)
    if diags or tv(ty):
        raise CliError("type is not well-formed: " + src)
    return ty


# ---------------------------------------------------------------------------
# Approximant rendering

def render_approximant(a: Approximant, reg: DefRegistry) -> str:
    sugar_nat = reg.constructor("zero") is not None \
        and reg.constructor("succ") is not None
    sugar_cons = reg.constructor("cons") is not None

    def numeral(a: Approximant):
        n = 0
        while isinstance(a, Constr) and a.con == "succ" and len(a.children) == 1:
            n += 1
            a = a.children[0]
        if isinstance(a, Constr) and a.con == "zero" and not a.children:
            return n
        return None

    def go(a: Approximant, atom: bool) -> str:
        if isinstance(a, Bottom):
            return "_|_"
        if isinstance(a, Opaque):
            return "<fun>" if isinstance(a.term, PLam) else "<stuck>"
        if sugar_nat:
            n = numeral(a)
            if n is not None:
                return str(n)
        if sugar_cons and a.con == "cons" and len(a.children) == 2:
            s = f"{go(a.children[0], True)} :: {go(a.children[1], False)}"
            return f"({s})" if atom else s
        if not a.children:
            return a.con
        s = a.con + " " + " ".join(go(k, True) for k in a.children)
        return f"({s})" if atom else s

    return go(a, False)


def _contains_fuel_limited(a: Approximant) -> bool:
    if isinstance(a, Bottom):
        return a.fuel_limited
    if isinstance(a, Constr):
        return any(_contains_fuel_limited(k) for k in a.children)
    return False


# ---------------------------------------------------------------------------
# Subcommands

def _cmd_check(args) -> int:
    sf = _load_slam(args.file)
    if args.colon != ":":
        raise CliError("usage: check FILE TERM : TYPE")
    t = _resolve_term(sf, args.term)
    ty = _parse_checked_type(sf, args.type)
    ok = check(sf.registry, {}, t, ty)
    if args.porcelain:
        print(f"verdict: {'ok' if ok else 'fail'}")
    else:
        print("yes" if ok else "no")
    return 0 if ok else 1


def _cmd_infer(args) -> int:
    sf = _load_slam(args.file)
    t = _resolve_term(sf, args.term)
    ty = minimal_type(sf.registry, {}, t)
    if ty is None:
        print("verdict: untypable" if args.porcelain else "untypable")
        return 1
    rendered = _render_type(ty)
    print(f"type: {rendered}" if args.porcelain else rendered)
    return 0


def _render_type(ty) -> str:
    # the least type of a constructor that ignores a parameter contains
    # the internal least-type marker; render it distinctly (unparseable)
    from .subtyping import Bot

    def go(t):
        if isinstance(t, Bot):
            return Coind("_|_", INFTY, ())
        if isinstance(t, Coind):
            return Coind(t.defname, t.size, tuple(go(p) for p in t.params))
        if isinstance(t, Arrow):
            return Arrow(go(t.dom), go(t.cod))
        if isinstance(t, Forall):
            return Forall(t.var, go(t.body))
        return t

    return print_type(go(ty))


def _cmd_eval(args) -> int:
    sf = _load_slam(args.file)
    t = _resolve_term(sf, args.term)
    a = approximant(erase(t), EvalBudget(fuel=args.fuel, depth=args.depth),
                    sf.registry)
    rendered = render_approximant(a, sf.registry)
    if args.porcelain:
        print(f"report.0: {rendered}")
    else:
        print(rendered)
        if _contains_fuel_limited(a):
            print("note: some branches were cut by the fuel limit "
                  "(fuel-limited)")
    return 0


def _cmd_productivity(args) -> int:
    sf = _load_slam(args.file)
    t = _resolve_term(sf, args.term)
    ty = _parse_checked_type(sf, args.type)
    if not isinstance(ty, Coind):
        raise CliError("--type must name a coinductive type")
    try:
        report = productivity_check(
            erase(t), ty, sf.registry, max_depth=args.depth,
            budget=EvalBudget(fuel=args.fuel, depth=args.depth))
    except NonObservableType as e:
        raise CliError(str(e))
    if args.porcelain:
        for d in report.verdicts:
            print(f"report.{d.depth}: {'ok' if d.ok else 'fail'}")
        print(f"verdict: {'PASS' if report.passed else 'FAIL'}")
    else:
        print(report.render())
    return 0 if report.passed else 1


def _cmd_solve(args) -> int:
    try:
        with open(args.constraints) as f:
            src = f.read()
    except OSError as e:
        raise CliError(str(e))
    c = parse_constraint_file(src)
    res = is_valid(c)
    if res.valid:
        print("verdict: valid" if args.porcelain else "valid")
        return 0
    print("verdict: invalid" if args.porcelain else "invalid")
    witness = res.witness.mapping if res.witness else {}
    for name in sorted(witness):
        value = witness[name]
        shown = "oo" if value == INF else int(value)
        if args.porcelain:
            print(f"witness.{name}: {shown}")
        else:
            print(f"{name} = {shown}")
    return 1


def _cmd_gen_hard(args) -> int:
    try:
        with open(args.cnffile) as f:
            src = f.read()
    except OSError as e:
        raise CliError(str(e))
    clauses = parse_cnf_dimacs(src)
    if not clauses:
        raise CliError("no clauses in CNF input")
    s1, s2 = encode_3cnf(clauses)
    # the formula is unsatisfiable exactly when s1 >= s2+1 is valid
    sys.stdout.write(format_constraint(SizeConstraint({}, [(Succ(s2), s1)])))
    return 0


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="slam",
        description="sized (co)inductive lambda calculus tools")
    ap.add_argument("--porcelain", action="store_true",
                    help="machine-readable line-oriented output")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("check", help="check a term against a type")
    p.add_argument("file")
    p.add_argument("term")
    p.add_argument("colon", metavar=":")
    p.add_argument("type")
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("infer", help="print the minimal type of a term")
    p.add_argument("file")
    p.add_argument("term")
    p.set_defaults(fn=_cmd_infer)

    p = sub.add_parser("eval", help="print a depth-bounded approximant")
    p.add_argument("file")
    p.add_argument("term")
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--fuel", type=int, default=10000)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("productivity",
                       help="depth-by-depth productivity report")
    p.add_argument("file")
    p.add_argument("term")
    p.add_argument("--type", required=True)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--fuel", type=int, default=10000)
    p.set_defaults(fn=_cmd_productivity)

    p = sub.add_parser("solve", help="decide a size-constraint file")
    p.add_argument("constraints")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("gen-hard",
                       help="encode a DIMACS CNF as a size constraint")
    p.add_argument("cnffile")
    p.set_defaults(fn=_cmd_gen_hard)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, RegistryError, CliError, NonObservableType) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


run_cli = main


if __name__ == "__main__":
    sys.exit(main())
