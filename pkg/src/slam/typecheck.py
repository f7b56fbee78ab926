"""Minimal-type inference and type checking.

Inference computes a triple (U, S, tau): an acyclic map of size-variable
definitions, a set of size inequalities, and a type.  The triple's
constraints are valid exactly when the term has a minimal type, which is
then obtained by expanding U inside tau.  Checking a candidate type
reduces to inferring the minimal type and deciding one subtyping.

U exists to share size expressions: substituting them eagerly into types
and inequalities can blow up exponentially (instantiate a quantified type
whose body mentions its variable twice, and repeat).  The price of
sharing is that a quantified inferred type may reference U-entries that
mention its own binder.  Such binders are tracked as "linear": they are
consumed at most once, and consuming one either binds it directly in U
(when no recorded inequality mentions it, so nothing universal is lost)
or copies the slice of U that depends on it (keeping the inequalities
universally quantified while the returned type gets the instantiated
copy).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

from .constraints import SizeConstraint, expand_type, is_valid
from .printer import print_term, print_type
from .sizes import SizeError, overline, size_ge_const, underline
from .subtyping import (
    BOT, Bot, chgtgt, gen_sub_constraints, join, subtype, tgt,
)
from .syntax import (
    INFTY, ONE, ZERO, App, Arrow, Case, Coind, Cofix, DefRegistry, Fix,
    Forall, Lam, SMax, SMin, SVar, SizeApp, SizeExpr, SizeLam, Succ, Term,
    TyVar, Type, Var, Con, fsv, smax, smin, subst_size, subst_type_multi,
    subst_type_size, sv, tv, uniquify_size_binders,
)

__all__ = [
    "InferenceTriple", "Judgement", "infer", "minimal_type", "check",
    "decompose_constructor_arg", "Decomposed",
]

Pair = tuple[SizeExpr, SizeExpr]
Context = Mapping[str, Type]

_FALSE_PAIR: Pair = (ONE, ZERO)


@dataclass
class InferenceTriple:
    u: dict[str, SizeExpr]
    pairs: list[Pair]
    tau: Optional[Type]
    failed: bool
    trail: tuple[str, ...] = ()

    @property
    def constraint(self) -> SizeConstraint:
        return SizeConstraint(self.u, self.pairs)


@dataclass
class Decomposed:
    """A constructor-argument type matched against its declared shape."""
    size: Optional[SizeExpr]          # joined size of the recursive instances
    rec_params: Optional[tuple]       # their joined parameters
    param_insts: dict[str, Type]      # joined instance per parameter variable
    sigma_prime: Type                 # the matched shape with holes kept


@dataclass(frozen=True)
class Judgement:
    """A typing judgement: context, term, candidate type."""
    gamma: tuple[tuple[str, Type], ...]
    term: Term
    tau: Type

    def holds(self, reg: DefRegistry) -> bool:
        return check(reg, dict(self.gamma), self.term, self.tau)


class _Infer:
    """One inference run; also serves as the binder environment for
    subtyping alignment (attributes `u`, `linear`, `fresh_binder`)."""

    def __init__(self, reg: DefRegistry, u0: Mapping[str, SizeExpr]):
        self.reg = reg
        self.u: dict[str, SizeExpr] = dict(u0)
        self.pairs: list[Pair] = []
        self.linear: set[str] = set()
        self._counter = itertools.count(1)
        self.trail: list[str] = []

    # -- fresh names ----------------------------------------------------

    def fresh_size(self) -> str:
        return f"$s{next(self._counter)}"

    def fresh_binder(self) -> str:
        return f"$b{next(self._counter)}"

    def fail(self, rule: str, t: Term, why: str) -> None:
        at = print_term(t)
        if len(at) > 60:
            at = at[:57] + "..."
        self.trail.append(f"({rule}) {why}, at: {at}")
        return None

    @staticmethod
    def show(ty: Type) -> str:
        try:
            return print_type(ty)
        except TypeError:
            return repr(ty)

    # -- constraint helpers ----------------------------------------------

    def add_sub(self, a: Type, b: Type) -> None:
        ps = gen_sub_constraints(a, b, self.reg, env=self)
        if ps is None:
            self.pairs.append(_FALSE_PAIR)
        else:
            self.pairs.extend(ps)

    def _u_mentions(self, name: str) -> bool:
        return any(name in sv(s) for s in self.u.values())

    def _dependents(self, name: str) -> list[str]:
        """U-variables whose expansion mentions `name`."""
        memo: dict[str, bool] = {}

        def dep(v: str) -> bool:
            if v in memo:
                return memo[v]
            memo[v] = False
            hit = False
            for w in sv(self.u[v]):
                if w == name or (w in self.u and dep(w)):
                    hit = True
            memo[v] = hit
            return hit

        return [v for v in self.u if dep(v)]

    def _fsv_u(self, x) -> set[str]:
        """Free size variables of x after expansion through u."""
        out: set[str] = set()
        memo: dict[str, frozenset[str]] = {}

        def of_var(v: str) -> frozenset[str]:
            if v not in self.u:
                return frozenset({v})
            if v in memo:
                return memo[v]
            memo[v] = frozenset()
            acc: frozenset[str] = frozenset()
            for w in sv(self.u[v]):
                acc |= of_var(w)
            memo[v] = acc
            return acc

        for v in fsv(x):
            out |= of_var(v)
        return out

    def _fsv_u_context(self, gamma: Context) -> set[str]:
        out: set[str] = set()
        for ty in gamma.values():
            out |= self._fsv_u(ty)
        return out

    # -- linear binder management ----------------------------------------

    def store_type(self, ty: Type) -> None:
        """Called when a type is put into the context.

        Context types may be looked up many times, which breaks the
        one-consumer assumption for linear binders.  Binders without
        hidden U-references are simply demoted to plain (renameable)
        binders; the rare binder with hidden references stays linear and
        a second consumption fails the inference rather than guess.
        """
        if isinstance(ty, Forall):
            if ty.var in self.linear and not self._u_mentions(ty.var):
                self.linear.discard(ty.var)
            self.store_type(ty.body)
        elif isinstance(ty, Arrow):
            self.store_type(ty.dom)
            self.store_type(ty.cod)
        elif isinstance(ty, Coind):
            for p in ty.params:
                self.store_type(p)

    def instantiate(self, binder: str, body: Type, s: SizeExpr) -> Optional[Type]:
        """Consume a quantifier: the returned body sees binder = s, while
        inequalities recorded under the quantifier stay universal."""
        if binder not in self.linear:
            r = self.fresh_size()
            self.u[r] = s
            return subst_type_size(body, SVar(r), binder)
        if binder in self.u:
            return None  # consumed before; cannot instantiate again soundly
        self.linear.discard(binder)
        dep = self._dependents(binder)
        touched = set(dep) | {binder}
        if not any((sv(a) | sv(b)) & touched for a, b in self.pairs):
            self.u[binder] = s
            return body
        # inequalities quantify over the binder: instantiate a copy instead
        ren: dict[str, str] = {binder: self.fresh_size()}
        for d in dep:
            ren[d] = self.fresh_size()

        def rn_size(e: SizeExpr) -> SizeExpr:
            for old, new in ren.items():
                e = subst_size(e, SVar(new), old)
            return e

        for d in dep:
            self.u[ren[d]] = rn_size(self.u[d])
        self.u[ren[binder]] = s
        out = body
        for old, new in ren.items():
            out = subst_type_size(out, SVar(new), old)
        return out

    # -- constructor decomposition ----------------------------------------

    def decompose(self, theta: Type, sigma: Type, dname: str) -> Optional[Decomposed]:
        d = self.reg.definition(dname)
        rec = d.rec_var
        params = set(d.params)
        a_insts: list[Coind] = []
        b_insts: dict[str, list[Type]] = {}

        def go(th, sg):
            if isinstance(sg, TyVar) and sg.name == rec:
                if isinstance(th, Bot):
                    return sg  # least instance: imposes nothing
                if isinstance(th, Coind) and th.defname == dname:
                    a_insts.append(th)
                    return sg
                return None
            if isinstance(sg, TyVar) and sg.name in params:
                if not isinstance(th, Bot):
                    b_insts.setdefault(sg.name, []).append(th)
                return sg
            if not tv(sg):
                return th  # closed position: the final subtyping covers it
            if isinstance(sg, Arrow):
                if not isinstance(th, Arrow):
                    return None
                cod = go(th.cod, sg.cod)
                return None if cod is None else Arrow(th.dom, cod)
            if isinstance(sg, Forall):
                if not isinstance(th, Forall):
                    return None
                from .subtyping import _align
                aligned = _align(th.var, th.body, sg.var, sg.body, self)
                if aligned is None:
                    return None
                v, thb, sgb = aligned
                body = go(thb, sgb)
                return None if body is None else Forall(v, body)
            if isinstance(sg, Coind):
                if not (isinstance(th, Coind) and th.defname == sg.defname
                        and len(th.params) == len(sg.params)):
                    return None
                ps = []
                for tp, sp in zip(th.params, sg.params):
                    r = go(tp, sp)
                    if r is None:
                        return None
                    ps.append(r)
                return Coind(sg.defname, th.size, tuple(ps))
            return None

        sigma_prime = go(theta, sigma)
        if sigma_prime is None:
            return None
        size = rec_params = None
        if a_insts:
            acc: Type = a_insts[0]
            for x in a_insts[1:]:
                acc = join(acc, x, self.reg, env=self)
                if acc is None:
                    return None
            assert isinstance(acc, Coind)
            size, rec_params = acc.size, acc.params
        joined: dict[str, Type] = {}
        for bname, lst in b_insts.items():
            acc = lst[0]
            for x in lst[1:]:
                acc = join(acc, x, self.reg, env=self)
                if acc is None:
                    return None
            joined[bname] = acc
        return Decomposed(size, rec_params, joined, sigma_prime)

    # -- peeled sizes -------------------------------------------------------

    def _overline_u(self, s: SizeExpr) -> Optional[SizeExpr]:
        try:
            return overline(s)
        except SizeError:
            pass
        try:
            return overline(self._expand_superfluous(s, False))
        except SizeError:
            return None

    def _expand_superfluous(self, s: SizeExpr, under: bool) -> SizeExpr:
        """Substitute U-definitions at occurrences not under a successor."""
        if isinstance(s, SVar) and not under and s.name in self.u:
            return self._expand_superfluous(self.u[s.name], False)
        if isinstance(s, Succ):
            return Succ(self._expand_superfluous(s.arg, True))
        if isinstance(s, SMin):
            return SMin(self._expand_superfluous(s.left, under),
                        self._expand_superfluous(s.right, under))
        if isinstance(s, SMax):
            return SMax(self._expand_superfluous(s.left, under),
                        self._expand_superfluous(s.right, under))
        return s

    # -- the algorithm -----------------------------------------------------

    def infer(self, t: Term, gamma: dict[str, Type]) -> Optional[Type]:
        if isinstance(t, Var):
            ty = gamma.get(t.name)
            if ty is None:
                return self.fail("ax", t, f"unbound variable {t.name}")
            return ty
        if isinstance(t, Con):
            sig = self.reg.constructor(t.name)
            if sig is None:
                return self.fail("con", t, f"unknown constructor {t.name}")
            if sig.arg_types:
                return self.fail("con", t,
                                 f"constructor {t.name} is not fully applied")
            return self.con_rule(t.name, [], gamma, t)
        if isinstance(t, App):
            head = t
            spine: list[Term] = []
            while isinstance(head, App):
                spine.append(head.arg)
                head = head.fun
            spine.reverse()
            if isinstance(head, Con):
                sig = self.reg.constructor(head.name)
                if sig is None:
                    return self.fail("con", t,
                                     f"unknown constructor {head.name}")
                ar = len(sig.arg_types)
                if len(spine) < ar:
                    return self.fail(
                        "con", t, f"constructor {head.name} expects {ar} "
                        f"argument(s), got {len(spine)}")
                res = self.con_rule(head.name, spine[:ar], gamma, t)
                rest = spine[ar:]
            else:
                res = self.infer(head, gamma)
                rest = spine
            for arg in rest:
                if res is None:
                    return None
                res = self.app_rule(res, arg, gamma, t)
            return res
        if isinstance(t, Lam):
            body = self.infer(t.body, {**gamma, t.var: t.ty})
            return None if body is None else Arrow(t.ty, body)
        if isinstance(t, SizeApp):
            fun = self.infer(t.fun, gamma)
            if fun is None:
                return None
            if not isinstance(fun, Forall):
                return self.fail("inst", t, "size application needs a "
                                 "quantified type, got " + self.show(fun))
            out = self.instantiate(fun.var, fun.body, t.size)
            if out is None:
                return self.fail("inst", t,
                                 "quantifier was already instantiated")
            return out
        if isinstance(t, SizeLam):
            if t.var in self._fsv_u_context(gamma):
                return self.fail("gen", t,
                                 f"size variable {t.var} occurs in the context")
            body = self.infer(t.body, gamma)
            if body is None:
                return None
            self.linear.add(t.var)
            return Forall(t.var, body)
        if isinstance(t, Case):
            return self.case_rule(t, gamma)
        if isinstance(t, Fix):
            return self.fix_rule(t, gamma)
        if isinstance(t, Cofix):
            return self.cofix_rule(t, gamma)
        raise TypeError(t)

    def app_rule(self, fun_ty: Type, arg: Term, gamma: dict[str, Type],
                 at: Term) -> Optional[Type]:
        if not isinstance(fun_ty, Arrow):
            return self.fail("app", at,
                             "application of a non-arrow type "
                             + self.show(fun_ty))
        arg_ty = self.infer(arg, gamma)
        if arg_ty is None:
            return None
        self.add_sub(arg_ty, fun_ty.dom)
        return fun_ty.cod

    def con_rule(self, cname: str, args: list[Term],
                 gamma: dict[str, Type], at: Term) -> Optional[Type]:
        d = self.reg.def_of_constructor(cname)
        sig = self.reg.constructor(cname)
        assert d is not None and sig is not None
        neutral: SizeExpr = INFTY if d.coinductive else ZERO
        sizes: list[SizeExpr] = []
        per_arg: list[Decomposed] = []
        for arg, sigma in zip(args, sig.arg_types):
            theta = self.infer(arg, gamma)
            if theta is None:
                return None
            dec = self.decompose(theta, sigma, d.name)
            if dec is None:
                return self.fail(
                    "con", at, f"argument of {cname} does not match its "
                    f"declared shape (got {self.show(theta)})")
            per_arg.append(dec)
            sizes.append(dec.size if dec.size is not None else neutral)
            self.add_sub(dec.sigma_prime, sigma)
        taus: list[Type] = []
        for j, bname in enumerate(d.params):
            acc: Type = BOT
            for dec in per_arg:
                for cand in ([dec.rec_params[j]] if dec.rec_params else []) \
                        + ([dec.param_insts[bname]]
                           if bname in dec.param_insts else []):
                    acc = join(acc, cand, self.reg, env=self)
                    if acc is None:
                        return self.fail("con", at,
                                         "parameter instances have no join")
            taus.append(acc)
        agg = (smin(*sizes) if d.coinductive else smax(*sizes)) \
            if sizes else neutral
        return Coind(d.name, Succ(agg), tuple(taus))

    def case_rule(self, t: Case, gamma: dict[str, Type]) -> Optional[Type]:
        scrut = self.infer(t.scrutinee, gamma)
        if scrut is None:
            return None
        if not isinstance(scrut, Coind):
            return self.fail("case", t, "scrutinee has non-data type "
                             + self.show(scrut))
        d = self.reg.definition(scrut.defname)
        if not t.branches:
            return self.fail("case", t, "empty case")
        seen: set[str] = set()
        for b in t.branches:
            sig = self.reg.constructor(b.con)
            if sig is None or self.reg.def_of_constructor(b.con).name != d.name:
                return self.fail("case", t,
                                 f"branch {b.con} is not a constructor of {d.name}")
            if b.con in seen or len(sig.arg_types) != len(b.binders):
                return self.fail("case", t, f"malformed branch for {b.con}")
            seen.add(b.con)
        if d.coinductive:
            if not size_ge_const(self.u, scrut.size, 1):
                return self.fail("case", t,
                                 "coinductive scrutinee size is not >= 1")
            peeled = self._overline_u(scrut.size)
            if peeled is None:
                return self.fail("case", t,
                                 "cannot peel the scrutinee size")
        else:
            peeled = underline(scrut.size)
        iv = self.fresh_size()
        self.u[iv] = peeled
        rec_inst = Coind(d.name, SVar(iv), scrut.params)
        subst_map: dict[str, Type] = {d.rec_var: rec_inst}
        subst_map.update({bn: p for bn, p in zip(d.params, scrut.params)})
        result: Optional[Type] = None
        for b in t.branches:
            sig = self.reg.constructor(b.con)
            g2 = dict(gamma)
            for x, sigma in zip(b.binders, sig.arg_types):
                delta = subst_type_multi(sigma, subst_map)
                self.store_type(delta)
                g2[x] = delta
            tk = self.infer(b.body, g2)
            if tk is None:
                return None
            if result is None:
                result = tk
            else:
                result = join(result, tk, self.reg, env=self)
                if result is None:
                    return self.fail("case", t, "branch types have no join")
        return result

    def fix_rule(self, t: Fix, gamma: dict[str, Type]) -> Optional[Type]:
        js: list[str] = []
        core = t.ty
        while isinstance(core, Forall):
            js.append(core.var)
            core = core.body
        if not isinstance(core, Arrow) or not isinstance(core.dom, Coind):
            return self.fail("fix", t, "annotation must have shape "
                             "forall js. mu -> tau with mu inductive")
        dom, cod = core.dom, core.cod
        if self.reg.definition(dom.defname).coinductive:
            return self.fail("fix", t, f"{dom.defname} is not inductive")
        if dom.size != INFTY:
            return self.fail("fix", t,
                             "the recursive domain must be undecorated")
        iv = self.fresh_size()

        def wrap(dom_size: SizeExpr) -> Type:
            ty: Type = Arrow(Coind(dom.defname, dom_size, dom.params), cod)
            for j in reversed(js):
                ty = Forall(j, ty)
            return ty

        prem = wrap(SVar(iv))
        self.store_type(prem)
        theta = self.infer(t.body, {**gamma, t.var: prem})
        if theta is None:
            return None
        k = self._premise_var(theta, len(js), dom.defname, gamma, t.ty)
        if k is not None:
            self.u[iv] = SVar(k)
        self.add_sub(theta, wrap(Succ(SVar(iv))))
        return t.ty

    def _premise_var(self, theta: Type, n_foralls: int, dname: str,
                     gamma: dict[str, Type], ann: Type) -> Optional[str]:
        """The size variable the body actually recursed on, when its
        inferred domain has the literal shape d^(k+1) for a suitable k."""
        core = theta
        for _ in range(n_foralls):
            if not isinstance(core, Forall):
                return None
            core = core.body
        if not (isinstance(core, Arrow) and isinstance(core.dom, Coind)
                and core.dom.defname == dname):
            return None
        s = core.dom.size
        if not (isinstance(s, Succ) and isinstance(s.arg, SVar)):
            return None
        k = s.arg.name
        if k.startswith(("$", "?")) or k in self.u or k in sv(ann):
            return None
        if k in self._fsv_u_context(gamma):
            return None
        return k

    def cofix_rule(self, t: Cofix, gamma: dict[str, Type]) -> Optional[Type]:
        target = tgt(t.ty)
        if not isinstance(target, Coind) or \
                not self.reg.definition(target.defname).coinductive:
            return self.fail("cofix", t,
                             "annotation target must be coinductive")
        j = t.size_var
        if j in self._fsv_u_context(gamma):
            return self.fail("cofix", t,
                             f"size variable {j} occurs in the context")
        if j in sv(t.ty):
            return self.fail("cofix", t,
                             f"size variable {j} occurs in the annotation")
        s = target.size
        prem = chgtgt(t.ty, Coind(target.defname, SMin(s, SVar(j)),
                                  target.params))
        self.store_type(prem)
        theta = self.infer(t.body, {**gamma, t.var: prem})
        if theta is None:
            return None
        self.add_sub(theta, chgtgt(t.ty, Coind(
            target.defname, SMin(s, Succ(SVar(j))), target.params)))
        return t.ty


# ---------------------------------------------------------------------------
# Public interface

def infer(reg: DefRegistry, gamma: Context, t: Term,
          u0: Mapping[str, SizeExpr] | None = None) -> InferenceTriple:
    """Compute the inference triple (U, S, tau) for a term in a context.

    Failure to apply any rule yields the sentinel triple with an
    unsatisfiable inequality and a diagnostic trail.
    """
    ambient: set[str] = set()
    for ty in gamma.values():
        ambient |= fsv(ty)
    for s in (u0 or {}).values():
        ambient |= sv(s)
    t = uniquify_size_binders(t, ambient)
    st = _Infer(reg, u0 or {})
    g = dict(gamma)
    tau = st.infer(t, g)
    pairs = list(dict.fromkeys(st.pairs))
    if tau is None:
        pairs.append(_FALSE_PAIR)
        return InferenceTriple(st.u, pairs, None, True, tuple(st.trail))
    return InferenceTriple(st.u, pairs, tau, False, tuple(st.trail))


def minimal_type(reg: DefRegistry, gamma: Context, t: Term) -> Optional[Type]:
    """The least type of the term, or None when untypable.

    The result is unique up to renaming of quantified size variables;
    machine-generated binder names are prettified.
    """
    trip = infer(reg, gamma, t)
    if trip.failed or trip.tau is None:
        return None
    if not is_valid(trip.constraint).valid:
        return None
    out = expand_type(trip.u, trip.tau)
    return _prettify(out)


def check(reg: DefRegistry, gamma: Context, t: Term, tau: Type) -> bool:
    """Whether the term can be assigned the (closed) type tau."""
    m = minimal_type(reg, gamma, t)
    return m is not None and subtype(m, tau, reg)


def decompose_constructor_arg(reg: DefRegistry, theta: Type, sigma: Type,
                              dname: str) -> Optional[Decomposed]:
    """Match an inferred argument type against a constructor's declared
    argument shape, reading off instances of the recursive and parameter
    variables (multiple occurrences are joined)."""
    return _Infer(reg, {}).decompose(theta, sigma, dname)


_NICE = ["i", "j", "k", "l", "m", "n"]


def _prettify(t: Type) -> Type:
    used = set(sv(t))
    supply = (nm for nm in _NICE + [f"i{k}" for k in range(1, 100)]
              if nm not in used)

    def go(t: Type) -> Type:
        if isinstance(t, Forall):
            if t.var.startswith(("$", "?")):
                nv = next(supply)
                return Forall(nv, go(subst_type_size(t.body, SVar(nv), t.var)))
            return Forall(t.var, go(t.body))
        if isinstance(t, Arrow):
            return Arrow(go(t.dom), go(t.cod))
        if isinstance(t, Coind):
            return Coind(t.defname, _fold_size(t.size),
                         tuple(go(p) for p in t.params))
        return t

    return go(t)


def _fold_size(s: SizeExpr) -> SizeExpr:
    """Evaluation-preserving cosmetic folding for displayed sizes."""
    from .sizes import INF, const_value
    from .syntax import size_const

    c = const_value(s)
    if c is not None:
        return INFTY if c == INF else size_const(int(c))
    if isinstance(s, Succ):
        return Succ(_fold_size(s.arg))
    if isinstance(s, SMin):
        l, r = _fold_size(s.left), _fold_size(s.right)
        if l == r:
            return l
        if l == INFTY or r == ZERO:
            return r
        if r == INFTY or l == ZERO:
            return l
        return SMin(l, r)
    if isinstance(s, SMax):
        l, r = _fold_size(s.left), _fold_size(s.right)
        if l == r:
            return l
        if l == INFTY or r == ZERO:
            return l
        if r == INFTY or l == ZERO:
            return r
        return SMax(l, r)
    return s
