"""Shared test utilities: corpus loading, random generators, oracles."""

from __future__ import annotations

import itertools
import random
from pathlib import Path

from slam import (
    App, Arrow, Coind, Forall, INFTY, SMax, SMin, SVar, SizeExpr, Succ,
    Type, Var, ZERO, parse_slam, parse_term, parse_type, validate_registry,
)
from slam.parser import SlamFile
from slam.sizes import INF, SizeValuation

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"

_cache: dict[str, SlamFile] = {}


def load(name: str) -> SlamFile:
    if name not in _cache:
        sf = parse_slam((CORPUS_DIR / f"{name}.slam").read_text())
        diags = validate_registry(sf.registry)
        assert not diags, diags
        _cache[name] = sf
    return _cache[name]


# ---------------------------------------------------------------------------
# Random size expressions

DEFAULT_VARS = ("i", "j", "k", "l")


def rand_size(rng: random.Random, depth: int = 3,
              vars: tuple[str, ...] = DEFAULT_VARS,
              allow_inf: bool = True, max_const: int = 3) -> SizeExpr:
    r = rng.random()
    if depth <= 0 or r < 0.35:
        leaves = [ZERO, SVar(rng.choice(vars)),
                  Succ(SVar(rng.choice(vars)))]
        for _ in range(rng.randint(0, max_const)):
            pass
        leaf = rng.choice(leaves + ([INFTY] if allow_inf else []))
        for _ in range(rng.randint(0, max_const - 1)):
            leaf = Succ(leaf)
        return leaf
    if r < 0.55:
        return Succ(rand_size(rng, depth - 1, vars, allow_inf, max_const))
    if r < 0.78:
        return SMin(rand_size(rng, depth - 1, vars, allow_inf, max_const),
                    rand_size(rng, depth - 1, vars, allow_inf, max_const))
    return SMax(rand_size(rng, depth - 1, vars, allow_inf, max_const),
                rand_size(rng, depth - 1, vars, allow_inf, max_const))


def rand_size_ge1(rng: random.Random, depth: int = 3,
                  vars: tuple[str, ...] = DEFAULT_VARS) -> SizeExpr:
    """A size expression that is >= 1 under every valuation."""
    r = rng.random()
    if depth <= 0 or r < 0.4:
        return Succ(rand_size(rng, depth - 1, vars))
    if r < 0.6:
        return SMin(rand_size_ge1(rng, depth - 1, vars),
                    rand_size_ge1(rng, depth - 1, vars))
    if r < 0.8:
        return SMax(rand_size_ge1(rng, depth - 1, vars),
                    rand_size(rng, depth - 1, vars))
    return INFTY


def rand_valuation(rng: random.Random,
                   vars: tuple[str, ...] = DEFAULT_VARS,
                   bound: int = 5, with_inf: bool = True) -> SizeValuation:
    vals = {}
    for v in vars:
        if with_inf and rng.random() < 0.15:
            vals[v] = INF
        else:
            vals[v] = rng.randint(0, bound)
    return SizeValuation(vals)


# ---------------------------------------------------------------------------
# Random types (over the streams registry unless stated otherwise)

def rand_type(rng: random.Random, reg, depth: int = 3,
              vars: tuple[str, ...] = DEFAULT_VARS) -> Type:
    r = rng.random()
    if depth <= 0 or r < 0.45:
        name = rng.choice([d for d in reg.defs if not reg.defs[d].params])
        return Coind(name, rand_size(rng, 2, vars), ())
    if r < 0.7:
        return Arrow(rand_type(rng, reg, depth - 1, vars),
                     rand_type(rng, reg, depth - 1, vars))
    if r < 0.85:
        v = rng.choice(vars)
        return Forall(v, rand_type(rng, reg, depth - 1, vars))
    name = rng.choice(list(reg.defs))
    d = reg.defs[name]
    params = tuple(rand_type(rng, reg, depth - 1, vars)
                   for _ in d.params)
    return Coind(name, rand_size(rng, 2, vars), params)


def reshape_sizes(rng: random.Random, t: Type,
                  vars: tuple[str, ...] = DEFAULT_VARS) -> Type:
    """Same skeleton, fresh random sizes: yields a join/meet-compatible pair."""
    if isinstance(t, Coind):
        return Coind(t.defname, rand_size(rng, 2, vars),
                     tuple(reshape_sizes(rng, p, vars) for p in t.params))
    if isinstance(t, Arrow):
        return Arrow(reshape_sizes(rng, t.dom, vars),
                     reshape_sizes(rng, t.cod, vars))
    if isinstance(t, Forall):
        return Forall(t.var, reshape_sizes(rng, t.body, vars))
    return t


def supertype_of(rng: random.Random, t: Type, reg) -> Type:
    """A type that the input is a subtype of, by variance-correct mutation."""
    if isinstance(t, Coind):
        coind = reg.definition(t.defname).coinductive
        s = t.size
        if rng.random() < 0.6:
            if coind:
                s = SMin(s, rand_size(rng, 1))  # smaller guarantee
            else:
                s = rng.choice([Succ(s), SMax(s, rand_size(rng, 1))])
        return Coind(t.defname, s,
                     tuple(supertype_of(rng, p, reg) for p in t.params))
    if isinstance(t, Arrow):
        return Arrow(subtype_of(rng, t.dom, reg),
                     supertype_of(rng, t.cod, reg))
    if isinstance(t, Forall):
        return Forall(t.var, supertype_of(rng, t.body, reg))
    return t


def subtype_of(rng: random.Random, t: Type, reg) -> Type:
    """A type that is a subtype of the input."""
    if isinstance(t, Coind):
        coind = reg.definition(t.defname).coinductive
        s = t.size
        if rng.random() < 0.6:
            if coind:
                s = rng.choice([Succ(s), SMax(s, rand_size(rng, 1))])
            else:
                s = SMin(s, rand_size(rng, 1))
        return Coind(t.defname, s,
                     tuple(subtype_of(rng, p, reg) for p in t.params))
    if isinstance(t, Arrow):
        return Arrow(supertype_of(rng, t.dom, reg),
                     subtype_of(rng, t.cod, reg))
    if isinstance(t, Forall):
        return Forall(t.var, subtype_of(rng, t.body, reg))
    return t


_TERM_VARS = ("x", "y", "z", "w", "f", "g")


def rand_term(rng: random.Random, reg, depth: int = 3, bound: tuple = ()):
    """A well-scoped, arity-correct (not necessarily typable) term."""
    from slam import (
        Branch, Case, Cofix, Con, Fix, Lam, SizeApp, SizeLam, Var,
    )

    r = rng.random()
    if depth <= 0 or r < 0.25:
        atoms = [Con("zero"), App(Con("succ"), Con("zero"))]
        atoms += [Var(x) for x in bound]
        return rng.choice(atoms)
    if r < 0.4:
        v = rng.choice(_TERM_VARS)
        return Lam(v, rand_type(rng, reg, 2),
                   rand_term(rng, reg, depth - 1, bound + (v,)))
    if r < 0.5:
        return App(rand_term(rng, reg, depth - 1, bound),
                   rand_term(rng, reg, depth - 1, bound))
    if r < 0.6:
        return SizeApp(rand_term(rng, reg, depth - 1, bound),
                       rand_size(rng, 2))
    if r < 0.7:
        return SizeLam(rng.choice(("i", "j")),
                       rand_term(rng, reg, depth - 1, bound))
    if r < 0.85:
        scrut = rand_term(rng, reg, depth - 1, bound)
        if rng.random() < 0.5 and "Strm" in reg.defs:
            return Case(scrut, (Branch("cons", ("x", "y"),
                                       rand_term(rng, reg, depth - 1,
                                                 bound + ("x", "y"))),))
        return Case(scrut, (
            Branch("zero", (), rand_term(rng, reg, depth - 1, bound)),
            Branch("succ", ("n",),
                   rand_term(rng, reg, depth - 1, bound + ("n",)))))
    if r < 0.93:
        v = rng.choice(_TERM_VARS)
        return Fix(v, rand_type(rng, reg, 2),
                   rand_term(rng, reg, depth - 1, bound + (v,)))
    v = rng.choice(_TERM_VARS)
    return Cofix(rng.choice(("i", "j")), v, rand_type(rng, reg, 2),
                 rand_term(rng, reg, depth - 1, bound + (v,)))


# ---------------------------------------------------------------------------
# CNF oracles

Literal = tuple[str, bool]


def rand_cnf(rng: random.Random, max_vars: int = 6,
             max_clauses: int = 8) -> list[list[Literal]]:
    n = rng.randint(2, max_vars)
    vs = [f"v{i}" for i in range(1, n + 1)]
    return [[(rng.choice(vs), rng.random() < 0.5) for _ in range(3)]
            for _ in range(rng.randint(1, max_clauses))]


def truth_table_sat(clauses: list[list[Literal]]) -> bool:
    vs = sorted({x for cl in clauses for x, _ in cl})
    for bits in itertools.product([False, True], repeat=len(vs)):
        env = dict(zip(vs, bits))
        if all(any(env[x] == pos for x, pos in cl) for cl in clauses):
            return True
    return False


# ---------------------------------------------------------------------------
# Term corpus

EXTRA_TERMS = [
    # (file, source)
    ("streams", "zero"),
    ("streams", "succ zero"),
    ("streams", "succ (succ zero)"),
    ("streams", "\\x : Nat. x"),
    ("streams", "\\x : Nat. succ x"),
    ("streams", "(\\x : Nat. succ x) zero"),
    ("streams", "/\\i. \\s : Strm^i. s"),
    ("streams", "/\\i. \\s : Strm^(i+2). tl [i] (tl [i+1] s)"),
    ("streams", "\\s : Strm. hd [oo] s"),
    ("streams", "cons zero zeros"),
    ("streams", "cons (succ zero) (cons zero zeros)"),
    ("streams", "hd [1] (cons zero zeros)"),
    ("streams", "plus (succ zero) (succ (succ zero))"),
    ("streams", "plus (plus (succ zero) zero) (succ zero)"),
    ("streams", "\\f : Nat -> Nat. \\x : Nat. f (f x)"),
    ("streams", "/\\i. \\f : Strm^(i+1) -> Nat. \\s : Strm^(i+1). f s"),
    ("streams", "omega"),
    ("streams", "\\x : Nat. x x"),
    ("streams", "case zero of { zero => zero; succ n => n }"),
    ("sp", "run odd"),
    ("sp", "run odd nats"),
    ("sp", "\\p : SP. run p nats"),
    ("trees", "so (so ezero)"),
    ("trees", "cons zero nil"),
    ("trees", "cons zero (cons zero nil)"),
]


def corpus_terms():
    """(label, registry, term) for every corpus binding and extra term."""
    out = []
    for fname in ("streams", "sp", "trees"):
        sf = load(fname)
        for name, t in sf.bindings.items():
            out.append((f"{fname}.{name}", sf.registry, t))
    for fname, src in EXTRA_TERMS:
        sf = load(fname)
        t = parse_term(src, sf.registry)
        from slam import subst_term
        for name, body in sf.bindings.items():
            t = subst_term(t, body, name)
        out.append((f"{fname}:{src}", sf.registry, t))
    return out


CONTEXT_TERMS = [
    # (file, gamma source pairs, term source)
    ("streams", [("s", "Strm^(i+1)")], "case s of { cons x t => t }"),
    ("streams", [("f", "Nat -> Nat"), ("x", "Nat")], "f x"),
    ("streams", [("f", "forall i. Strm^(i+1) -> Strm^i"), ("s", "Strm")],
     "f [oo] s"),
    ("streams", [("g", "forall a. Nat^a -> Nat^a")], "/\\i. g [i+1]"),
    ("streams", [("x", "Nat^(k+1)")],
     "case x of { zero => zero; succ y => y }"),
    ("trees", [("xs", "List^(k+1)(Nat)")],
     "case xs of { nil => zero; cons h t => h }"),
]


def context_terms():
    out = []
    for fname, gsrc, tsrc in CONTEXT_TERMS:
        sf = load(fname)
        gamma = {x: parse_type(ty, sf.registry) for x, ty in gsrc}
        out.append((f"{fname}:{tsrc}", sf.registry, gamma,
                    parse_term(tsrc, sf.registry)))
    return out
