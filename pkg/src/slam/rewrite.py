"""Erasure and the untyped rewrite system.

Decorated terms erase to plain lambda terms with case; fix and cofix
become applications of the Turing fixpoint combinator.  Reduction is
normal order (leftmost-outermost beta and iota).  Possibly infinite
results are observed through finite approximants: constructor trees cut
off with bottom leaves, where bottom stands for divergence and fuel
exhaustion is its computable surrogate.  Membership of approximants in
the finite approximations of observable (co)inductive types gives the
empirical productivity harness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .sizes import INF, ExtNat, SizeValuation, eval_size
from .syntax import (
    App, Case, Coind, Cofix, DefRegistry, Fix, Lam, PApp, PBranch, PCase,
    PCon, PLam, PVar, PlainTerm, SizeApp, SizeLam, SVar, Term, TyVar, Type,
    Var, Con, alpha_eq_plain, fresh_name,
)

__all__ = [
    "Y_COMBINATOR", "OMEGA", "erase", "plain_free_vars", "psubst",
    "step", "StepResult", "whnf", "WhnfResult",
    "Approximant", "Constr", "Bottom", "Opaque", "EvalBudget",
    "approximant", "refines", "member", "NonObservableType", "observable",
    "productivity_check", "ProductivityReport", "DepthVerdict",
]


def _turing() -> PlainTerm:
    # (\x. \f. f (x x f)) applied to itself
    half = PLam("x", PLam("f", PApp(
        PVar("f"), PApp(PApp(PVar("x"), PVar("x")), PVar("f")))))
    return PApp(half, half)


Y_COMBINATOR: PlainTerm = _turing()
OMEGA: PlainTerm = PApp(PLam("x", PApp(PVar("x"), PVar("x"))),
                        PLam("x", PApp(PVar("x"), PVar("x"))))


# ---------------------------------------------------------------------------
# Erasure

def erase(t: Term) -> PlainTerm:
    """Drop types and size operations; fix/cofix become Y applications."""
    if isinstance(t, Var):
        return PVar(t.name)
    if isinstance(t, Con):
        return PCon(t.name)
    if isinstance(t, Lam):
        return PLam(t.var, erase(t.body))
    if isinstance(t, App):
        return PApp(erase(t.fun), erase(t.arg))
    if isinstance(t, SizeApp):
        return erase(t.fun)
    if isinstance(t, SizeLam):
        return erase(t.body)
    if isinstance(t, Case):
        return PCase(erase(t.scrutinee),
                     tuple(PBranch(b.con, b.binders, erase(b.body))
                           for b in t.branches))
    if isinstance(t, (Fix, Cofix)):
        return PApp(Y_COMBINATOR, PLam(t.var, erase(t.body)))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Substitution on plain terms

def plain_free_vars(t: PlainTerm) -> frozenset[str]:
    if isinstance(t, PVar):
        return frozenset({t.name})
    if isinstance(t, PCon):
        return frozenset()
    if isinstance(t, PLam):
        return frozenset(plain_free_vars(t.body) - {t.var})
    if isinstance(t, PApp):
        return plain_free_vars(t.fun) | plain_free_vars(t.arg)
    if isinstance(t, PCase):
        acc = plain_free_vars(t.scrutinee)
        for b in t.branches:
            acc |= plain_free_vars(b.body) - set(b.binders)
        return acc
    raise TypeError(t)


def psubst(t: PlainTerm, var: str, value: PlainTerm) -> PlainTerm:
    free = plain_free_vars(value)

    def go(t: PlainTerm) -> PlainTerm:
        if isinstance(t, PVar):
            return value if t.name == var else t
        if isinstance(t, PCon):
            return t
        if isinstance(t, PLam):
            if t.var == var:
                return t
            if t.var in free:
                nv = fresh_name(t.var, free | plain_free_vars(t.body) | {var})
                return PLam(nv, go(_prename(t.body, t.var, nv)))
            return PLam(t.var, go(t.body))
        if isinstance(t, PApp):
            return PApp(go(t.fun), go(t.arg))
        if isinstance(t, PCase):
            brs = []
            for b in t.branches:
                if var in b.binders:
                    brs.append(b)
                    continue
                binders = list(b.binders)
                body = b.body
                for i, x in enumerate(binders):
                    if x in free:
                        nv = fresh_name(
                            x, free | plain_free_vars(body) | set(binders) | {var})
                        body = _prename(body, x, nv)
                        binders[i] = nv
                brs.append(PBranch(b.con, tuple(binders), go(body)))
            return PCase(go(t.scrutinee), tuple(brs))
        raise TypeError(t)

    return go(t)


def _prename(t: PlainTerm, old: str, new: str) -> PlainTerm:
    return psubst(t, old, PVar(new))


# ---------------------------------------------------------------------------
# Reduction

def _spine(t: PlainTerm) -> tuple[PlainTerm, list[PlainTerm]]:
    args: list[PlainTerm] = []
    while isinstance(t, PApp):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def _apply(t: PlainTerm, args: list[PlainTerm]) -> PlainTerm:
    for a in args:
        t = PApp(t, a)
    return t


def _iota_branch(t: PCase) -> Optional[tuple[PBranch, list[PlainTerm]]]:
    """The branch an iota step would take, if any.

    Requires a constructor-headed scrutinee, pairwise distinct branch
    constructors, a branch for the head constructor, and matching arity.
    """
    names = [b.con for b in t.branches]
    if len(set(names)) != len(names):
        return None
    head, args = _spine(t.scrutinee)
    if not isinstance(head, PCon):
        return None
    for b in t.branches:
        if b.con == head.name:
            if len(b.binders) == len(args):
                return b, args
            return None
    return None


@dataclass
class StepResult:
    term: Optional[PlainTerm]  # None when in normal form
    stuck: bool = False        # some case subterm can never fire


def step(t: PlainTerm) -> StepResult:
    """Contract the leftmost-outermost beta or iota redex."""
    reduced = _step1(t)
    if reduced is not None:
        return StepResult(reduced, False)
    return StepResult(None, _has_stuck_case(t))


def _step1(t: PlainTerm) -> Optional[PlainTerm]:
    if isinstance(t, PApp):
        if isinstance(t.fun, PLam):
            return psubst(t.fun.body, t.fun.var, t.arg)
        r = _step1(t.fun)
        if r is not None:
            return PApp(r, t.arg)
        r = _step1(t.arg)
        return None if r is None else PApp(t.fun, r)
    if isinstance(t, PCase):
        hit = _iota_branch(t)
        if hit is not None:
            b, args = hit
            body = b.body
            for x, a in zip(b.binders, args):
                body = psubst(body, x, a)
            return body
        r = _step1(t.scrutinee)
        if r is not None:
            return PCase(r, t.branches)
        for i, b in enumerate(t.branches):
            r = _step1(b.body)
            if r is not None:
                brs = list(t.branches)
                brs[i] = PBranch(b.con, b.binders, r)
                return PCase(t.scrutinee, tuple(brs))
        return None
    if isinstance(t, PLam):
        r = _step1(t.body)
        return None if r is None else PLam(t.var, r)
    return None


def _has_stuck_case(t: PlainTerm) -> bool:
    if isinstance(t, PCase):
        head, _args = _spine(t.scrutinee)
        if isinstance(head, (PCon, PLam)) and _iota_branch(t) is None:
            return True
        return _has_stuck_case(t.scrutinee) or \
            any(_has_stuck_case(b.body) for b in t.branches)
    if isinstance(t, PApp):
        return _has_stuck_case(t.fun) or _has_stuck_case(t.arg)
    if isinstance(t, PLam):
        return _has_stuck_case(t.body)
    return False


@dataclass
class WhnfResult:
    kind: str                  # "head" | "value" | "fuel"
    term: PlainTerm            # the reduced term
    head: Optional[str] = None
    args: tuple[PlainTerm, ...] = ()
    stuck: bool = False
    steps: int = 0


def whnf(t: PlainTerm, fuel: int) -> WhnfResult:
    """Head-reduce until a constructor application, a value, or fuel runs
    out.  Values are abstractions, variable-headed spines, and stuck
    cases."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    steps = 0
    while True:
        head, args = _spine(t)
        if isinstance(head, PCon):
            return WhnfResult("head", t, head.name, tuple(args), False, steps)
        if isinstance(head, PLam):
            if not args:
                return WhnfResult("value", t, steps=steps)
            if steps >= fuel:
                return WhnfResult("fuel", t, steps=steps)
            steps += 1
            t = _apply(psubst(head.body, head.var, args[0]), args[1:])
            continue
        if isinstance(head, PVar):
            return WhnfResult("value", t, steps=steps)
        assert isinstance(head, PCase)
        remaining = fuel - steps
        if remaining <= 0:
            return WhnfResult("fuel", t, steps=steps)
        inner = whnf(head.scrutinee, remaining)
        steps += inner.steps
        rebuilt = _apply(PCase(inner.term, head.branches), args)
        if inner.kind == "fuel":
            return WhnfResult("fuel", rebuilt, steps=steps)
        case2 = PCase(inner.term, head.branches)
        hit = _iota_branch(case2)
        if hit is None:
            stuck = inner.kind == "head" or isinstance(inner.term, PLam) \
                or (inner.kind == "value" and inner.stuck)
            return WhnfResult("value", rebuilt, stuck=stuck, steps=steps)
        if steps >= fuel:
            return WhnfResult("fuel", rebuilt, steps=steps)
        steps += 1
        b, cargs = hit
        body = b.body
        for x, a in zip(b.binders, cargs):
            body = psubst(body, x, a)
        t = _apply(body, args)


# ---------------------------------------------------------------------------
# Approximants

@dataclass(frozen=True)
class Constr:
    con: str
    children: tuple["Approximant", ...] = ()


@dataclass(frozen=True)
class Bottom:
    fuel_limited: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Opaque:
    term: PlainTerm


Approximant = Union[Constr, Bottom, Opaque]


@dataclass(frozen=True)
class EvalBudget:
    """Reduction fuel per weak-head normalization, and observation depth."""
    fuel: int = 10000
    depth: int = 5

    def __post_init__(self) -> None:
        if self.fuel <= 0 or self.depth < 0:
            raise ValueError("fuel must be positive and depth non-negative")


def approximant(t: PlainTerm, budget: EvalBudget,
                reg: Optional[DefRegistry] = None) -> Approximant:
    """Observe a term to the given depth.

    Depth zero is bottom; otherwise head-normalize, descend under
    constructors, and wrap non-constructor values opaquely.  Fuel
    exhaustion becomes a bottom leaf marked fuel-limited.

    With a registry, the depth budget is spent on the recursive chain of
    coinductive constructors while other components are computed in full
    (that is what the finite approximations of a coinductive type ask
    for: n correct layers whose non-recursive parts are complete).
    Without one, every constructor level costs one unit of depth.  A
    global gas tank of fuel*(depth+2) reduction steps bounds the full
    descents.
    """
    gas = [budget.fuel * (budget.depth + 2)]
    a, _steps, _lim = _approx(t, budget.depth, budget.fuel, reg, gas)
    return a


_FULL_DEPTH = float("inf")


def _approx(t: PlainTerm, depth, fuel: int, reg: Optional[DefRegistry],
            gas: list[int]) -> tuple[Approximant, int, bool]:
    if reg is None and depth <= 0:
        return Bottom(), 0, False
    if gas[0] <= 0:
        return Bottom(fuel_limited=True), 0, True
    r = whnf(t, min(fuel, gas[0]))
    gas[0] -= r.steps
    if r.kind == "fuel":
        return Bottom(fuel_limited=True), r.steps, True
    if r.kind == "head":
        depths = _child_depths(r.head, len(r.args), depth, reg)
        if depths is None:  # a coinductive (or unknown) layer at depth 0
            return Bottom(), r.steps, False
        kids = []
        total = r.steps
        limited = False
        for arg, d in zip(r.args, depths):
            k, st, lim = _approx(arg, d, fuel, reg, gas)
            kids.append(k)
            total += st
            limited = limited or lim
        return Constr(r.head, tuple(kids)), total, limited
    return Opaque(r.term), r.steps, False


def _child_depths(con: str, n: int, depth,
                  reg: Optional[DefRegistry]) -> Optional[list]:
    """Per-child depth budgets, or None when the node itself is cut.

    Only coinductive constructors consume depth (that is what the
    approximation levels of a coinductive type count); inductive spines
    pass it through and closed components are computed in full.
    """
    if reg is None:
        return [depth - 1] * n
    d = reg.def_of_constructor(con)
    sig = reg.constructor(con)
    if d is None or sig is None or len(sig.arg_types) != n:
        return None if depth <= 0 else [depth - 1] * n
    from .syntax import tv

    if d.coinductive and depth <= 0:
        return None
    out = []
    for sigma in sig.arg_types:
        if not tv(sigma):
            out.append(_FULL_DEPTH)
        elif d.coinductive:
            out.append(depth - 1)
        else:
            out.append(depth)
    return out


def refines(a1: Approximant, a2: Approximant) -> bool:
    """Whether a2 is a1 with some subtrees replaced by bottom."""
    if isinstance(a2, Bottom):
        return True
    if isinstance(a1, Constr) and isinstance(a2, Constr):
        return (a1.con == a2.con
                and len(a1.children) == len(a2.children)
                and all(refines(x, y)
                        for x, y in zip(a1.children, a2.children)))
    if isinstance(a1, Opaque) and isinstance(a2, Opaque):
        return alpha_eq_plain(a1.term, a2.term)
    return False


def approximant_nodes(a: Approximant) -> int:
    if isinstance(a, Constr):
        return 1 + sum(approximant_nodes(k) for k in a.children)
    return 1


# ---------------------------------------------------------------------------
# Membership in valuation approximations

class NonObservableType(Exception):
    pass


def observable(tau: Type, reg: DefRegistry) -> bool:
    """Whether the type and all reachable constructor argument types are
    free of arrows and quantifiers."""
    seen: set[str] = set()

    def ok_type(t: Type) -> bool:
        if isinstance(t, TyVar):
            return True
        if isinstance(t, Coind):
            return all(ok_type(p) for p in t.params) and ok_def(t.defname)
        return False

    def ok_def(dn: str) -> bool:
        if dn in seen:
            return True
        seen.add(dn)
        return all(ok_type(a) for c in reg.constructors(dn)
                   for a in c.arg_types)

    return ok_type(tau)


def member(a: Approximant, tau: Type, reg: DefRegistry,
           v: SizeValuation | Mapping[str, ExtNat] | None = None,
           strict: bool = False) -> bool:
    """Membership of an approximant in the valuation approximation of an
    observable type.

    For a coinductive type at finite level n, non-strict membership asks
    for at least n correct constructor layers (level 0 accepts
    everything); strict membership asks for exactly n layers ending in
    bottom (level 0 accepts only bottom).  For an inductive type, level n
    bounds the constructor depth from above and bottoms never belong.
    Parameters are checked at their own (full) interpretations; only the
    main recursive chain is approximated.
    """
    if not observable(tau, reg):
        raise NonObservableType(f"type is not observable: {tau!r}")
    if v is None:
        v = SizeValuation({})
    elif not isinstance(v, SizeValuation):
        v = SizeValuation(v)
    if not isinstance(tau, Coind):
        raise NonObservableType("membership needs a (co)inductive type")
    level = eval_size(v, tau.size)
    return _member_def(a, tau.defname,
                       [_closure(p, {}, reg, v) for p in tau.params],
                       level, strict, reg, v)


def _closure(t: Type, env: dict, reg: DefRegistry, v):
    def pred(a: Approximant) -> bool:
        return _member_type(a, t, env, reg, v)
    return pred


def _member_type(a: Approximant, t: Type, env: dict, reg: DefRegistry, v) -> bool:
    if isinstance(t, TyVar):
        return env[t.name](a)
    if isinstance(t, Coind):
        level = eval_size(v, t.size)
        preds = [_closure(p, env, reg, v) for p in t.params]
        return _member_def(a, t.defname, preds, level, False, reg, v)
    raise NonObservableType(f"non-observable position: {t!r}")


def _member_def(a: Approximant, dn: str, preds: list, level: ExtNat,
                strict: bool, reg: DefRegistry, v) -> bool:
    d = reg.definition(dn)
    if d.coinductive:
        if strict and level == INF:
            raise ValueError("strict membership needs a finite level")
        if level <= 0:
            return isinstance(a, Bottom) if strict else True
    else:
        if level <= 0:
            return False
    if not isinstance(a, Constr):
        return False
    owner = reg.def_of_constructor(a.con)
    if owner is None or owner.name != dn:
        return False
    sig = reg.constructor(a.con)
    if len(sig.arg_types) != len(a.children):
        return False
    child_level = level - 1 if level != INF else INF

    def rec_pred(k: Approximant) -> bool:
        return _member_def(k, dn, preds, child_level, strict, reg, v)

    env = {d.rec_var: rec_pred}
    env.update({bn: p for bn, p in zip(d.params, preds)})
    return all(_member_type(k, sigma, env, reg, v)
               for k, sigma in zip(a.children, sig.arg_types))


# ---------------------------------------------------------------------------
# Productivity harness

@dataclass
class DepthVerdict:
    depth: int
    ok: bool
    nodes: int
    fuel_used: int
    fuel_limited: bool
    approx: Approximant


@dataclass
class ProductivityReport:
    verdicts: list[DepthVerdict]
    chain_ok: bool
    passed: bool
    fail_at: Optional[int]

    def render(self) -> str:
        lines = []
        for d in self.verdicts:
            extra = " fuel-limited" if d.fuel_limited else ""
            lines.append(f"{d.depth}: {'ok' if d.ok else 'fail'} "
                         f"(nodes={d.nodes}, fuelUsed={d.fuel_used}){extra}")
        lines.append("PASS" if self.passed else f"FAIL at n={self.fail_at}")
        return "\n".join(lines)


def productivity_check(t: PlainTerm, tau: Type, reg: DefRegistry,
                       max_depth: int = 5,
                       budget: EvalBudget | None = None) -> ProductivityReport:
    """Check approximants of increasing depth against the corresponding
    valuation approximations of an observable coinductive type, and that
    deeper approximants refine shallower ones."""
    if budget is None:
        budget = EvalBudget()
    if not (isinstance(tau, Coind) and reg.definition(tau.defname).coinductive):
        raise NonObservableType("productivity needs a coinductive type")
    if not observable(tau, reg):
        raise NonObservableType(f"type is not observable: {tau!r}")
    level_var = "$depth"
    tau_n = Coind(tau.defname, SVar(level_var), tau.params)
    verdicts: list[DepthVerdict] = []
    chain_ok = True
    fail_at: Optional[int] = None
    prev: Optional[Approximant] = None
    for n in range(max_depth + 1):
        gas = [budget.fuel * (n + 2)]
        a, steps, limited = _approx(t, n, budget.fuel, reg, gas)
        ok = member(a, tau_n, reg, SizeValuation({level_var: n}))
        verdicts.append(DepthVerdict(n, ok, approximant_nodes(a), steps,
                                     limited, a))
        if prev is not None and not refines(a, prev):
            chain_ok = False
            if fail_at is None:
                fail_at = n
        if not ok and fail_at is None:
            fail_at = n
        prev = a
    passed = chain_ok and all(d.ok for d in verdicts)
    return ProductivityReport(verdicts, chain_ok, passed,
                              None if passed else fail_at)
