"""Subtyping: constraint generation, the decided order, join/meet, targets.

Inductive types are covariant in their size, coinductive ones
contravariant; parameters are always covariant, arrows contravariant in
the domain, and foralls relate bodies under a common binder.  Instead of
deciding sizes inline, `gen_sub_constraints` collects the size
inequalities a subtyping requires; `subtype` hands them to the validity
solver.

Binder alignment: types produced by inference may reference shared size
definitions, so renaming their forall binder syntactically would be
wrong.  Callers that own a definition map pass a `BinderEnv`; binders
registered as linear (single-consumer) are then aliased through the map
rather than renamed.  Without an environment both binders are renamed to
a fresh common name, which is correct for self-contained types.
"""

from __future__ import annotations

import itertools
from typing import Optional, Protocol

from .syntax import (
    BOT, Arrow, Bot, Coind, DefRegistry, Forall, SMax, SMin, SVar, SizeExpr,
    TyVar, Type, subst_type_size,
)

__all__ = [
    "Bot", "BOT", "BinderEnv", "gen_sub_constraints", "subtype",
    "join", "meet", "tgt", "chgtgt",
]

Pair = tuple[SizeExpr, SizeExpr]





class BinderEnv(Protocol):
    u: dict[str, SizeExpr]
    linear: set[str]

    def fresh_binder(self) -> str: ...


_pure_counter = itertools.count(1)


def _align(b1: str, body1: Type, b2: str, body2: Type,
           env: Optional[BinderEnv]) -> Optional[tuple[str, Type, Type]]:
    """A common binder for two forall bodies, or None when impossible.

    Linear binders are aliased through the definition map so occurrences
    hidden inside shared definitions stay correct; a pair of plain
    binders is renamed to a fresh common name.  A linear binder that was
    already consumed cannot be aligned again.
    """
    if b1 == b2:
        return b1, body1, body2
    if env is not None:
        if b2 in env.linear:
            if b2 in env.u:
                return None
            env.linear.discard(b2)
            env.u[b2] = SVar(b1)
            return b1, body1, body2
        if b1 in env.linear:
            if b1 in env.u:
                return None
            env.linear.discard(b1)
            env.u[b1] = SVar(b2)
            return b2, body1, body2
        f = env.fresh_binder()
    else:
        f = f"$a{next(_pure_counter)}"
    return (f, subst_type_size(body1, SVar(f), b1),
            subst_type_size(body2, SVar(f), b2))


def gen_sub_constraints(t1, t2, reg: DefRegistry,
                        env: Optional[BinderEnv] = None
                        ) -> Optional[list[Pair]]:
    """Size inequalities equivalent to t1 <= t2, or None when the shapes
    are incompatible (no forall instantiation, no structural mismatch)."""
    out: dict[Pair, None] = {}

    def go(a, b) -> bool:
        if isinstance(a, Bot):
            return True
        if isinstance(a, TyVar) and isinstance(b, TyVar):
            return a.name == b.name
        if isinstance(a, Coind) and isinstance(b, Coind):
            if a.defname != b.defname or len(a.params) != len(b.params):
                return False
            if reg.definition(a.defname).coinductive:
                out[(b.size, a.size)] = None
            else:
                out[(a.size, b.size)] = None
            return all(go(p, q) for p, q in zip(a.params, b.params))
        if isinstance(a, Arrow) and isinstance(b, Arrow):
            return go(b.dom, a.dom) and go(a.cod, b.cod)
        if isinstance(a, Forall) and isinstance(b, Forall):
            aligned = _align(a.var, a.body, b.var, b.body, env)
            if aligned is None:
                return False
            _, abody, bbody = aligned
            return go(abody, bbody)
        return False

    return list(out) if go(t1, t2) else None


def subtype(t1, t2, reg: DefRegistry,
            u: Optional[dict[str, SizeExpr]] = None) -> bool:
    """Decide t1 <= t2 under a definition map (empty by default)."""
    from .constraints import SizeConstraint, is_valid

    pairs = gen_sub_constraints(t1, t2, reg)
    if pairs is None:
        return False
    return is_valid(SizeConstraint(dict(u or {}), pairs)).valid


def join(t1, t2, reg: DefRegistry, env: Optional[BinderEnv] = None):
    """Least upper bound, or None when undefined."""
    return _lattice(t1, t2, reg, env, up=True)


def meet(t1, t2, reg: DefRegistry, env: Optional[BinderEnv] = None):
    """Greatest lower bound, or None when undefined."""
    return _lattice(t1, t2, reg, env, up=False)


def _lattice(a, b, reg, env, up: bool):
    if isinstance(a, Bot):
        return b if up else BOT
    if isinstance(b, Bot):
        return a if up else BOT
    if isinstance(a, TyVar) and isinstance(b, TyVar):
        return a if a.name == b.name else None
    if isinstance(a, Coind) and isinstance(b, Coind):
        if a.defname != b.defname or len(a.params) != len(b.params):
            return None
        params = []
        for p, q in zip(a.params, b.params):
            r = _lattice(p, q, reg, env, up)
            if r is None:
                return None
            params.append(r)
        coind = reg.definition(a.defname).coinductive
        if up == coind:
            size: SizeExpr = SMin(a.size, b.size)
        else:
            size = SMax(a.size, b.size)
        return Coind(a.defname, size, tuple(params))
    if isinstance(a, Arrow) and isinstance(b, Arrow):
        dom = _lattice(a.dom, b.dom, reg, env, not up)
        cod = _lattice(a.cod, b.cod, reg, env, up)
        if dom is None or cod is None:
            return None
        return Arrow(dom, cod)
    if isinstance(a, Forall) and isinstance(b, Forall):
        aligned = _align(a.var, a.body, b.var, b.body, env)
        if aligned is None:
            return None
        v, abody, bbody = aligned
        body = _lattice(abody, bbody, reg, env, up)
        if body is None:
            return None
        return Forall(v, body)
    return None


def tgt(t: Type) -> Type:
    """The target of a type: what remains after all arrows and foralls."""
    if isinstance(t, Arrow):
        return tgt(t.cod)
    if isinstance(t, Forall):
        return tgt(t.body)
    return t


def chgtgt(t: Type, alpha: Type) -> Type:
    """The type with its target exchanged for alpha.

    Free size variables of alpha may intentionally be captured by foralls
    of t; that is the point of the operation.
    """
    if isinstance(t, Arrow):
        return Arrow(t.dom, chgtgt(t.cod, alpha))
    if isinstance(t, Forall):
        return Forall(t.var, chgtgt(t.body, alpha))
    return alpha
