"""Pretty-printers for sizes, types, and terms.

Printing round-trips: `parse(print(x))` returns a tree equal to `x` (up to
the `^oo` sugar, which both sides treat as absent).  Successor chains over
0 print as plain numerals.
"""

from __future__ import annotations

from .syntax import (
    INFTY, App, Arrow, Branch, Case, Coind, Cofix, Fix, Forall, Lam, PApp,
    PCase, PCon, PLam, PVar, PlainTerm, SizeApp, SizeExpr, SizeLam, SMax,
    SMin, Succ, SVar, Term, TyVar, Type, Var, Con, Zero, Infty,
)

__all__ = ["print_size", "print_type", "print_term", "print_plain"]


def print_size(s: SizeExpr) -> str:
    if isinstance(s, Succ):
        n = 0
        base = s
        while isinstance(base, Succ):
            n += 1
            base = base.arg
        if isinstance(base, Zero):
            return str(n)
        return f"{_size_atom(base)}+{n}"
    if isinstance(s, Zero):
        return "0"
    if isinstance(s, Infty):
        return "oo"
    if isinstance(s, SVar):
        return s.name
    if isinstance(s, SMin):
        return f"min({print_size(s.left)}, {print_size(s.right)})"
    if isinstance(s, SMax):
        return f"max({print_size(s.left)}, {print_size(s.right)})"
    raise TypeError(s)


def _size_atom(s: SizeExpr) -> str:
    # atoms may follow '^' or precede '+n' without parentheses
    if isinstance(s, (Zero, Infty, SVar, SMin, SMax)):
        return print_size(s)
    if isinstance(s, Succ):
        p = print_size(s)
        return p if p.isdigit() else f"({p})"
    raise TypeError(s)


def _caret(s: SizeExpr) -> str:
    if s == INFTY:
        return ""
    if isinstance(s, (Zero, SVar)):
        return f"^{print_size(s)}"
    p = print_size(s)
    if p.isdigit():
        return f"^{p}"
    return f"^({p})"


def print_type(t: Type) -> str:
    if isinstance(t, Forall):
        return f"forall {t.var}. {print_type(t.body)}"
    if isinstance(t, Arrow):
        return f"{_type_atomish(t.dom)} -> {print_type(t.cod)}"
    return _type_atomish(t)


def _type_atomish(t: Type) -> str:
    if isinstance(t, TyVar):
        return t.name
    if isinstance(t, Coind):
        head = t.defname + _caret(t.size)
        if t.params:
            return head + "(" + ", ".join(print_type(p) for p in t.params) + ")"
        return head
    if isinstance(t, (Arrow, Forall)):
        return f"({print_type(t)})"
    raise TypeError(f"not a printable type: {t!r}")


def print_term(t: Term) -> str:
    if isinstance(t, Lam):
        return f"\\{t.var} : {print_type(t.ty)}. {print_term(t.body)}"
    if isinstance(t, SizeLam):
        return f"/\\{t.var}. {print_term(t.body)}"
    if isinstance(t, Fix):
        return f"fix {t.var} : {print_type(t.ty)} . {print_term(t.body)}"
    if isinstance(t, Cofix):
        return (f"cofix[{t.size_var}] {t.var} : {print_type(t.ty)} . "
                f"{print_term(t.body)}")
    if isinstance(t, Case):
        brs = "; ".join(_print_branch(b) for b in t.branches)
        return f"case {_term_app(t.scrutinee)} of {{ {brs} }}"
    return _term_app(t)


def _print_branch(b: Branch) -> str:
    head = " ".join((b.con,) + b.binders)
    return f"{head} => {print_term(b.body)}"


def _term_app(t: Term) -> str:
    if isinstance(t, App):
        return f"{_term_app(t.fun)} {_term_atom(t.arg)}"
    if isinstance(t, SizeApp):
        return f"{_term_app(t.fun)} [{print_size(t.size)}]"
    return _term_atom(t)


def _term_atom(t: Term) -> str:
    if isinstance(t, (Var, Con)):
        return t.name
    return f"({print_term(t)})"


def print_plain(t: PlainTerm) -> str:
    if isinstance(t, PLam):
        return f"\\{t.var}. {_plain_app(t.body)}" \
            if isinstance(t.body, (PVar, PCon, PApp)) \
            else f"\\{t.var}. {print_plain(t.body)}"
    if isinstance(t, PCase):
        brs = "; ".join(
            " ".join((b.con,) + b.binders) + " => " + print_plain(b.body)
            for b in t.branches)
        return f"case {_plain_atom(t.scrutinee)} of {{ {brs} }}"
    return _plain_app(t)


def _plain_app(t: PlainTerm) -> str:
    if isinstance(t, PApp):
        return f"{_plain_app(t.fun)} {_plain_atom(t.arg)}"
    return _plain_atom(t)


def _plain_atom(t: PlainTerm) -> str:
    if isinstance(t, (PVar, PCon)):
        return t.name
    return f"({print_plain(t)})"
