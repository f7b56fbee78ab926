"""Size constraints (U, S) and the validity decision procedure.

A constraint is an acyclic definition map U (size variable -> size
expression) together with inequalities S; it is valid when every valuation
respecting U satisfies every inequality.  Validity is decided by
eliminating infinity, then refuting each inequality separately: the
conjunction of the U-equalities with the negated inequality is tested for
satisfiability over the naturals by pushing +1 below min/max, splitting
min/max away through fresh existential variables, and deciding the
remaining difference atoms on a shortest-path graph.  A brute-force
enumeration oracle and the 3-CNF hardness encoder live here too.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .sizes import (
    INF, ExtNat, SizeValuation, eval_size, normalize_succ, simplify_infty,
)
from .syntax import (
    INFTY, ONE, Arrow, Coind, Forall, Infty, SMax, SMin, SVar, Succ,
    SizeExpr, Type, TyVar, Zero, smax, smin, subst_size, sv,
)

__all__ = [
    "SizeConstraint", "Validity", "CyclicDefMap", "check_acyclic", "expand",
    "expand_type", "is_valid", "VarVar", "VarConst", "DifferenceAtom",
    "sat_atoms", "brute_force_valid", "completeness_bound", "encode_3cnf",
    "parse_cnf_dimacs", "parse_constraint_file", "format_constraint",
]

Pair = tuple[SizeExpr, SizeExpr]


@dataclass
class SizeConstraint:
    """The pair (U, S); U maps size variables to size expressions."""

    u: dict[str, SizeExpr]
    pairs: list[Pair]

    def __init__(self, u: Mapping[str, SizeExpr] | None = None,
                 pairs: Iterable[Pair] | None = None):
        self.u = dict(u or {})
        self.pairs = list(pairs or [])


class CyclicDefMap(Exception):
    pass


def check_acyclic(u: Mapping[str, SizeExpr]) -> bool:
    """No cycle in the graph with an edge from i to each variable of u[i]."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {i: WHITE for i in u}

    def visit(i: str) -> bool:
        color[i] = GRAY
        for j in sv(u[i]):
            if j not in color:
                continue
            if color[j] == GRAY:
                return False
            if color[j] == WHITE and not visit(j):
                return False
        color[i] = BLACK
        return True

    return all(visit(i) for i in u if color[i] == WHITE)


def _topo_order(u: Mapping[str, SizeExpr]) -> list[str]:
    """Definition map keys with dependencies first."""
    out: list[str] = []
    seen: set[str] = set()

    def visit(i: str) -> None:
        if i in seen:
            return
        seen.add(i)
        for j in sv(u[i]):
            if j in u:
                visit(j)
        out.append(i)

    for i in u:
        visit(i)
    return out


def expand(u: Mapping[str, SizeExpr], s: SizeExpr) -> SizeExpr:
    """Substitute away every variable of dom(u), recursively."""
    memo: dict[str, SizeExpr] = {}

    def var_value(name: str) -> SizeExpr:
        if name not in memo:
            memo[name] = go(u[name])
        return memo[name]

    def go(s: SizeExpr) -> SizeExpr:
        if isinstance(s, SVar):
            return var_value(s.name) if s.name in u else s
        if isinstance(s, Succ):
            return Succ(go(s.arg))
        if isinstance(s, SMin):
            return SMin(go(s.left), go(s.right))
        if isinstance(s, SMax):
            return SMax(go(s.left), go(s.right))
        return s

    return go(s)


def expand_type(u: Mapping[str, SizeExpr], t: Type) -> Type:
    """Expand u inside a type.

    Substitution is deliberately not capture-avoiding: an expansion that
    mentions a size variable bound by an enclosing forall refers to that
    binder (the binding was recorded while the quantifier was open).
    """
    if isinstance(t, TyVar):
        return t
    if isinstance(t, Coind):
        return Coind(t.defname, expand(u, t.size),
                     tuple(expand_type(u, p) for p in t.params))
    if isinstance(t, Arrow):
        return Arrow(expand_type(u, t.dom), expand_type(u, t.cod))
    if isinstance(t, Forall):
        return Forall(t.var, expand_type(u, t.body))
    return t


# ---------------------------------------------------------------------------
# Difference atoms and their satisfiability

@dataclass(frozen=True)
class VarVar:
    """x + c <= y (c may be negative)."""
    x: str
    c: int
    y: str


@dataclass(frozen=True)
class VarConst:
    """x <= k or x >= k for a natural k."""
    x: str
    op: str  # "<=" or ">="
    k: int


DifferenceAtom = Union[VarVar, VarConst]

_ZERO_NODE = "$zero"


def sat_atoms(atoms: Sequence[DifferenceAtom]) -> Optional[dict[str, int]]:
    """Solve difference atoms over the naturals.

    Encoded as a shortest-path problem with a zero node; satisfiable iff
    the graph has no negative cycle, in which case a minimal-style model
    is read off the distances.
    """
    nodes: list[str] = [_ZERO_NODE]
    seen = {_ZERO_NODE}
    edges: list[tuple[str, str, int]] = []  # (w, u, b) meaning u - w <= b

    def node(x: str) -> str:
        if x not in seen:
            seen.add(x)
            nodes.append(x)
            edges.append((x, _ZERO_NODE, 0))  # 0 - x <= 0, i.e. x >= 0
        return x

    for a in atoms:
        if isinstance(a, VarVar):
            edges.append((node(a.y), node(a.x), -a.c))
        elif a.op == "<=":
            edges.append((_ZERO_NODE, node(a.x), a.k))
        else:
            edges.append((node(a.x), _ZERO_NODE, -a.k))

    dist = {n: 0 for n in nodes}  # virtual source at distance 0 to all
    for _ in range(len(nodes)):
        changed = False
        for w, u, b in edges:
            if dist[w] + b < dist[u]:
                dist[u] = dist[w] + b
                changed = True
        if not changed:
            break
    else:
        for w, u, b in edges:
            if dist[w] + b < dist[u]:
                return None  # negative cycle
    base = dist[_ZERO_NODE]
    return {n: dist[n] - base for n in nodes if n != _ZERO_NODE}


# ---------------------------------------------------------------------------
# Refutation of a single inequality

_fresh_counter = itertools.count(1)


def _fresh_existential() -> str:
    return f"?e{next(_fresh_counter)}"


def _leaf(lhs: SizeExpr, rhs: SizeExpr) -> Optional[DifferenceAtom] | bool:
    """Convert x+a <= y+b into a difference atom.

    Returns True for a trivially true atom, False for a trivially false
    one, and a DifferenceAtom otherwise.
    """
    x, a = _split(lhs)
    y, b = _split(rhs)
    if x is None and y is None:
        return a <= b
    if x is not None and y is not None:
        if x == y:
            return a <= b
        return VarVar(x, a - b, y)
    if x is not None:  # x + a <= b
        k = b - a
        return VarConst(x, "<=", k) if k >= 0 else False
    k = a - b  # a <= y + b
    return VarConst(y, ">=", k) if k > 0 else True


def _split(s: SizeExpr) -> tuple[Optional[str], int]:
    n = 0
    while isinstance(s, Succ):
        n += 1
        s = s.arg
    if isinstance(s, Zero):
        return None, n
    if isinstance(s, SVar):
        return s.name, n
    raise TypeError(f"not a successor chain: {s!r}")


@dataclass
class _Disj:
    """One disjunctive split: some arm must relate to the existential.

    kind "le" means arm <= n (from min(arms) <= c, with n <= c already
    recorded); kind "ge" means n <= arm (from c <= max(arms)).  Each
    arm's absorbed atom/split deltas are cached for reuse.
    """
    kind: str
    n: str
    arms: tuple[SizeExpr, ...]
    deltas: list

    def delta(self, i: int):
        if self.deltas[i] == ():
            pend = [(self.arms[i], SVar(self.n))] if self.kind == "le" \
                else [(SVar(self.n), self.arms[i])]
            self.deltas[i] = _absorb(pend)
        return self.deltas[i]


def _flatten(s: SizeExpr, cls) -> list[SizeExpr]:
    if isinstance(s, cls):
        return _flatten(s.left, cls) + _flatten(s.right, cls)
    return [s]


def _absorb(pending: list[Pair]):
    """Absorb the conjunctive structure of inequalities.

    Returns (atoms, disjs) or None on a trivially false leaf.  Max on
    the left and min on the right decompose conjunctively through a
    fresh existential; min on the left and max on the right become
    disjunctive splits over their flattened arms.
    """
    from collections import deque

    work = deque(pending)
    atoms: list[DifferenceAtom] = []
    disjs: list[_Disj] = []
    while work:
        lhs, rhs = work.popleft()
        if isinstance(lhs, SMax):
            n = SVar(_fresh_existential())
            work.extendleft([(n, rhs), (lhs.right, n), (lhs.left, n)])
        elif isinstance(rhs, SMin):
            n = SVar(_fresh_existential())
            work.extendleft([(n, rhs.right), (n, rhs.left), (lhs, n)])
        elif isinstance(lhs, SMin):
            n = _fresh_existential()
            work.appendleft((SVar(n), rhs))
            arms = tuple(_flatten(lhs, SMin))
            disjs.append(_Disj("le", n, arms, [()] * len(arms)))
        elif isinstance(rhs, SMax):
            n = _fresh_existential()
            work.appendleft((lhs, SVar(n)))
            arms = tuple(_flatten(rhs, SMax))
            disjs.append(_Disj("ge", n, arms, [()] * len(arms)))
        else:
            atom = _leaf(lhs, rhs)
            if atom is False:
                return None
            if atom is not True:
                atoms.append(atom)
    return atoms, disjs


def _sat_conjunction(ineqs: list[Pair]) -> Optional[dict[str, int]]:
    """Satisfiability over the naturals of a conjunction s1 <= s2 of
    oo-free inequalities.

    Min/max are split away through fresh existential variables.  The
    search over disjuncts prunes arms whose atoms are already infeasible
    against the committed ones, commits forced (single-arm) splits to a
    fixpoint, and only then branches, smallest split first.
    """
    normalized = [(normalize_succ(a), normalize_succ(b)) for a, b in ineqs]
    state = _absorb(normalized)
    if state is None:
        return None
    atoms, disjs = state
    return _solve(atoms, disjs)


def _solve(atoms: list[DifferenceAtom],
           disjs: list[_Disj]) -> Optional[dict[str, int]]:
    model = sat_atoms(atoms)
    if model is None:
        return None
    # propagate: drop infeasible arms, commit forced arms, to a fixpoint
    while True:
        changed = False
        remaining: list[tuple[_Disj, list[int]]] = []
        for d in disjs:
            feasible: list[int] = []
            for i in range(len(d.arms)):
                delta = d.delta(i)
                if delta is None:
                    continue
                da, _dd = delta
                if sat_atoms(atoms + da) is not None:
                    feasible.append(i)
            if not feasible:
                return None
            if len(feasible) == 1:
                da, dd = d.delta(feasible[0])
                atoms = atoms + da
                disjs = [x for x in disjs if x is not d] + dd
                changed = True
                break
            remaining.append((d, feasible))
        if not changed:
            break
    if not disjs:
        return sat_atoms(atoms)
    # branch on the smallest remaining split, arms in order
    remaining.sort(key=lambda df: len(df[1]))
    d, feasible = remaining[0]
    rest = [x for x in disjs if x is not d]
    for i in feasible:
        delta = d.delta(i)
        if delta is None:
            continue
        da, dd = delta
        model = _solve(atoms + da, rest + dd)
        if model is not None:
            return model
    return None


# ---------------------------------------------------------------------------
# Validity

@dataclass
class Validity:
    valid: bool
    witness: Optional[SizeValuation] = None
    violated: Optional[Pair] = None

    def __bool__(self) -> bool:
        return self.valid


def is_valid(c: SizeConstraint) -> Validity:
    """Decide validity of (U, S); an Invalid result carries a witness
    valuation that respects U and violates `violated`."""
    if not check_acyclic(c.u):
        raise CyclicDefMap(f"cyclic definition map: {sorted(c.u)}")

    u = {i: simplify_infty(s) for i, s in c.u.items()}
    pairs: list[tuple[Pair, Pair]] = [
        ((simplify_infty(a), simplify_infty(b)), (a, b)) for a, b in c.pairs]
    inf_vars: set[str] = set()
    while True:
        now = [i for i, s in u.items() if s == INFTY]
        if not now:
            break
        inf_vars.update(now)
        for i in now:
            del u[i]

        def drop(s: SizeExpr) -> SizeExpr:
            for j in now:
                s = subst_size(s, INFTY, j)
            return simplify_infty(s)

        u = {i: drop(s) for i, s in u.items()}
        pairs = [((drop(a), drop(b)), orig) for (a, b), orig in pairs]

    kept: list[tuple[Pair, Pair]] = []
    for (a, b), orig in pairs:
        if b == INFTY:
            continue  # s <= oo always holds
        if a == INFTY:
            # every valuation keeps b finite, so the pair fails at once
            witness = _assemble_witness(c, {}, inf_vars)
            return Validity(False, witness, orig)
        kept.append(((a, b), orig))

    for (a, b), orig in kept:
        eqs = _relevant_equalities(u, sv(a) | sv(b))
        conj = eqs + [(Succ(b), a)]  # negation: a >= b + 1
        model = _sat_conjunction(conj)
        if model is not None:
            witness = _assemble_witness(c, model, inf_vars)
            return Validity(False, witness, orig)
    return Validity(True)


def _relevant_equalities(u: Mapping[str, SizeExpr],
                         start: frozenset[str]) -> list[Pair]:
    """Equalities i = u(i) for variables reachable from `start` through u.

    Unreachable entries cannot affect satisfiability (the map is acyclic,
    so any model extends to them) and would only slow the search down.
    """
    reach: set[str] = set()
    work = [v for v in start if v in u]
    while work:
        i = work.pop()
        if i in reach:
            continue
        reach.add(i)
        work.extend(j for j in sv(u[i]) if j in u and j not in reach)
    eqs: list[Pair] = []
    for i in u:
        if i in reach:
            eqs.append((SVar(i), u[i]))
            eqs.append((u[i], SVar(i)))
    return eqs


def _assemble_witness(c: SizeConstraint, model: dict[str, int],
                      inf_vars: set[str]) -> SizeValuation:
    values: dict[str, ExtNat] = {}
    for name, v in model.items():
        if not name.startswith("?e"):
            values[name] = v
    for name in inf_vars:
        values[name] = INF
    mentioned: set[str] = set()
    for a, b in c.pairs:
        mentioned |= sv(a) | sv(b)
    for s in c.u.values():
        mentioned |= sv(s)
    for name in sorted(mentioned):
        values.setdefault(name, 0)
    # force exact agreement with the original definition map
    for i in _topo_order(c.u):
        values[i] = eval_size(SizeValuation(values), c.u[i])
    return SizeValuation(values)


# ---------------------------------------------------------------------------
# Brute-force oracle

def completeness_bound(c: SizeConstraint) -> int:
    """Testing bound: variable count times (max constant + 1) over the
    expanded, +1-normalized inequalities."""
    vs: set[str] = set()
    max_c = 0
    for a, b in c.pairs:
        for s in (expand(c.u, a), expand(c.u, b)):
            s = simplify_infty(s)
            if s == INFTY:
                continue
            s = normalize_succ(s)
            vs |= sv(s)
            max_c = max(max_c, _max_constant(s))
    return max(1, len(vs)) * (max_c + 1)


def _max_constant(s: SizeExpr) -> int:
    if isinstance(s, (SMin, SMax)):
        return max(_max_constant(s.left), _max_constant(s.right))
    _x, n = _split(s)
    return n


def brute_force_valid(c: SizeConstraint, bound: int) -> bool:
    """Exhaustively check validity over valuations into {0..bound, oo}.

    Testing oracle only; complete when the bound is at least
    `completeness_bound(c)`.  Evaluation is vectorised over the whole
    grid of valuations.
    """
    import numpy as np

    if not check_acyclic(c.u):
        raise CyclicDefMap(f"cyclic definition map: {sorted(c.u)}")
    pairs = [(expand(c.u, a), expand(c.u, b)) for a, b in c.pairs]
    vs = sorted(set().union(*[sv(a) | sv(b) for a, b in pairs]) if pairs else set())
    if not vs:
        v0 = SizeValuation({})
        return all(eval_size(v0, a) <= eval_size(v0, b) for a, b in pairs)
    values = np.array(list(range(bound + 1)) + [np.inf])
    grids = np.meshgrid(*[values] * len(vs), indexing="ij")
    env = dict(zip(vs, grids))

    def ev(s: SizeExpr):
        if isinstance(s, Zero):
            return 0.0
        if isinstance(s, Infty):
            return np.inf
        if isinstance(s, SVar):
            return env[s.name]
        if isinstance(s, Succ):
            return ev(s.arg) + 1
        if isinstance(s, SMin):
            return np.minimum(ev(s.left), ev(s.right))
        if isinstance(s, SMax):
            return np.maximum(ev(s.left), ev(s.right))
        raise TypeError(s)

    return all(bool(np.all(ev(a) <= ev(b))) for a, b in pairs)


# ---------------------------------------------------------------------------
# 3-CNF hardness encoder

Literal = tuple[str, bool]
Clause = Sequence[Literal]


def _negvar(x: str) -> str:
    return x + "'"


def encode_3cnf(clauses: Sequence[Clause]) -> tuple[SizeExpr, SizeExpr]:
    """Encode a CNF formula as a pair (s1, s2) of size expressions.

    The formula is satisfiable exactly when s1 <= s2 holds under some
    valuation; equivalently it is unsatisfiable exactly when s1 >= s2 + 1
    is valid.  Negated literals use primed copies of the variables.
    """
    if not clauses:
        raise ValueError("empty formula")
    variables: list[str] = []
    for cl in clauses:
        for x, _pos in cl:
            if x not in variables:
                variables.append(x)

    def lit(l: Literal) -> SizeExpr:
        x, pos = l
        return SVar(x) if pos else SVar(_negvar(x))

    s1_parts: list[SizeExpr] = []
    for cl in clauses:
        if not cl:
            raise ValueError("empty clause")
        s1_parts.append(Succ(smin(*(lit(l) for l in cl))) if len(cl) > 1
                        else Succ(lit(cl[0])))
    s1_parts.append(ONE)
    for x in variables:
        s1_parts.append(Succ(SMin(SVar(x), SVar(_negvar(x)))))
    s2_parts: list[SizeExpr] = [ONE]
    for x in variables:
        s2_parts.append(SMax(SVar(x), SVar(_negvar(x))))
    return smax(*s1_parts), smin(*s2_parts)


def parse_cnf_dimacs(src: str) -> list[list[Literal]]:
    """Parse DIMACS cnf; variable k becomes name 'xk'."""
    clauses: list[list[Literal]] = []
    current: list[Literal] = []
    for line in src.splitlines():
        line = line.strip()
        if not line or line.startswith(("c", "p", "%")):
            continue
        for tok in line.split():
            n = int(tok)
            if n == 0:
                if current:
                    clauses.append(current)
                    current = []
            else:
                current.append((f"x{abs(n)}", n > 0))
    if current:
        clauses.append(current)
    return clauses


# ---------------------------------------------------------------------------
# Constraint files

def parse_constraint_file(src: str) -> SizeConstraint:
    """Parse `let i = s;` and `assert s1 <= s2;` lines."""
    from .parser import ParseError, _P, tokenize

    p = _P(tokenize(src))
    c = SizeConstraint()
    while p.peek().kind != "eof":
        if p.at_word("let"):
            p.next()
            name = p.eat_ident("size variable").text
            if name in c.u:
                raise ParseError(f"duplicate let for {name}",
                                 p.peek().line, p.peek().col)
            p.eat_sym("=")
            c.u[name] = p.size()
            p.eat_sym(";")
        elif p.at_word("assert"):
            p.next()
            a = p.size()
            p.eat_sym("<=")
            b = p.size()
            p.eat_sym(";")
            c.pairs.append((a, b))
        else:
            raise p.fail("expected 'let' or 'assert'")
    return c


def format_constraint(c: SizeConstraint) -> str:
    from .printer import print_size

    lines = [f"let {i} = {print_size(s)};" for i, s in c.u.items()]
    lines += [f"assert {print_size(a)} <= {print_size(b)};"
              for a, b in c.pairs]
    return "\n".join(lines) + "\n"
