"""Recursive-descent parser for the surface language.

Grammar sketch (tokens are bit-exact):

  sizes   0 | oo | IDENT | NUM | s+NUM | min(s,s) | max(s,s) | (s)
  types   A | Name^s(T,...) | Name(T,...) | Name^s | Name
        | T -> T (right assoc) | forall i. T | (T)
  terms   x | c | \\x : T. t | t t | t [s] | /\\i. t
        | case t of { c x1 .. xk => t; ... }
        | fix f : T . t | cofix[j] f : T . t
  defs    inductive Name(B1,...) { c1 : T; ... }   (coinductive likewise)
  files   definitions, then bindings `name = term;`

Line comments start with `--` or `#`.  `min`/`max` accept two or more
arguments and nest to the left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    INFTY, App, Arrow, Branch, Case, Coind, ConstructorSig, Cofix,
    DefRegistry, Definition, Fix, Forall, Lam, SMax, SMin, SVar, SizeApp,
    SizeExpr, SizeLam, Succ, Term, TyVar, Type, Var, Con, size_const,
    subst_term,
)

__all__ = [
    "ParseError", "parse_size", "parse_type", "parse_term", "parse_defs",
    "parse_slam", "SlamFile", "tokenize",
]

_KEYWORDS = {
    "inductive", "coinductive", "case", "of", "fix", "cofix", "forall",
    "min", "max", "oo", "let", "assert",
}

_SYMBOLS = ["->", "=>", "/\\", "<=", "(", ")", "{", "}", "[", "]", "^",
            ",", ";", ":", ".", "=", "\\", "+"]


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # ident | num | sym | eof
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("--", i) or ch == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            toks.append(Token("ident", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("num", src[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if src.startswith(sym, i):
                toks.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class _P:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def fail(self, message: str) -> "ParseError":
        t = self.peek()
        return ParseError(message, t.line, t.col)

    def at_sym(self, s: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.text == s

    def at_word(self, w: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text == w

    def eat_sym(self, s: str) -> Token:
        if not self.at_sym(s):
            raise self.fail(f"expected {s!r}")
        return self.next()

    def eat_word(self, w: str) -> Token:
        if not self.at_word(w):
            raise self.fail(f"expected {w!r}")
        return self.next()

    def eat_ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident" or t.text in _KEYWORDS:
            raise self.fail(f"expected {what}")
        return self.next()

    # -- sizes ---------------------------------------------------------

    def size(self) -> SizeExpr:
        s = self.size_atom()
        while self.at_sym("+"):
            self.next()
            t = self.peek()
            if t.kind != "num":
                raise self.fail("expected a number after '+'")
            self.next()
            s = _succs(s, int(t.text))
        return s

    def size_atom(self) -> SizeExpr:
        t = self.peek()
        if t.kind == "num":
            self.next()
            return size_const(int(t.text))
        if self.at_word("oo"):
            self.next()
            return INFTY
        if self.at_word("min") or self.at_word("max"):
            op = self.next().text
            self.eat_sym("(")
            args = [self.size()]
            while self.at_sym(","):
                self.next()
                args.append(self.size())
            self.eat_sym(")")
            if len(args) < 2:
                raise self.fail(f"{op} needs at least two arguments")
            acc = args[0]
            for a in args[1:]:
                acc = SMin(acc, a) if op == "min" else SMax(acc, a)
            return acc
        if self.at_sym("("):
            self.next()
            s = self.size()
            self.eat_sym(")")
            return s
        if t.kind == "ident" and t.text not in _KEYWORDS:
            self.next()
            return SVar(t.text)
        raise self.fail("expected a size expression")

    # -- types ---------------------------------------------------------

    def type_(self, env: "_TypeEnv") -> Type:
        if self.at_word("forall"):
            self.next()
            names = [self.eat_ident("size variable").text]
            while self.peek().kind == "ident" and not self.at_sym("."):
                if self.peek().text in _KEYWORDS:
                    break
                names.append(self.next().text)
            self.eat_sym(".")
            body = self.type_(env)
            for nm in reversed(names):
                body = Forall(nm, body)
            return body
        dom = self.type_atom(env)
        if self.at_sym("->"):
            self.next()
            return Arrow(dom, self.type_(env))
        return dom

    def type_atom(self, env: "_TypeEnv") -> Type:
        if self.at_sym("("):
            self.next()
            t = self.type_(env)
            self.eat_sym(")")
            return t
        tok = self.eat_ident("type")
        size: SizeExpr = INFTY
        decorated = False
        if self.at_sym("^"):
            self.next()
            size = self.size_atom()
            decorated = True
        args: list[Type] = []
        has_args = False
        if self.at_sym("("):
            # lookahead: '(' after a name is a parameter list
            self.next()
            has_args = True
            args.append(self.type_(env))
            while self.at_sym(","):
                self.next()
                args.append(self.type_(env))
            self.eat_sym(")")
        return env.resolve(self, tok, size, decorated, tuple(args), has_args)

    # -- terms ---------------------------------------------------------

    def term(self, env: "_TermEnv") -> Term:
        if self.at_sym("\\"):
            self.next()
            x = self.eat_ident("variable").text
            self.eat_sym(":")
            ty = self.type_(env.types)
            self.eat_sym(".")
            return Lam(x, ty, self.term(env.bind(x)))
        if self.at_sym("/\\"):
            self.next()
            i = self.eat_ident("size variable").text
            self.eat_sym(".")
            return SizeLam(i, self.term(env))
        if self.at_word("fix"):
            self.next()
            f = self.eat_ident("variable").text
            self.eat_sym(":")
            ty = self.type_(env.types)
            self.eat_sym(".")
            return Fix(f, ty, self.term(env.bind(f)))
        if self.at_word("cofix"):
            self.next()
            self.eat_sym("[")
            j = self.eat_ident("size variable").text
            self.eat_sym("]")
            f = self.eat_ident("variable").text
            self.eat_sym(":")
            ty = self.type_(env.types)
            self.eat_sym(".")
            return Cofix(j, f, ty, self.term(env.bind(f)))
        if self.at_word("case"):
            self.next()
            scrut = self.term(env)
            self.eat_word("of")
            self.eat_sym("{")
            branches: list[Branch] = []
            seen: set[str] = set()
            while not self.at_sym("}"):
                ctok = self.eat_ident("constructor")
                if ctok.text in seen:
                    raise ParseError(f"duplicate case branch for {ctok.text}",
                                     ctok.line, ctok.col)
                seen.add(ctok.text)
                binders: list[str] = []
                while self.peek().kind == "ident" and not self.at_sym("=>"):
                    binders.append(self.eat_ident("variable").text)
                self.eat_sym("=>")
                benv = env
                for b in binders:
                    benv = benv.bind(b)
                branches.append(Branch(ctok.text, tuple(binders),
                                       self.term(benv)))
                if self.at_sym(";"):
                    self.next()
                else:
                    break
            self.eat_sym("}")
            return Case(scrut, tuple(branches))
        return self.app_term(env)

    def app_term(self, env: "_TermEnv") -> Term:
        t = self.atom_term(env)
        while True:
            if self.at_sym("["):
                self.next()
                s = self.size()
                self.eat_sym("]")
                t = SizeApp(t, s)
            elif self.at_sym("(") or (self.peek().kind == "ident"
                                      and self.peek().text not in _KEYWORDS):
                t = App(t, self.atom_term(env))
            else:
                break
        return t

    def atom_term(self, env: "_TermEnv") -> Term:
        if self.at_sym("("):
            self.next()
            t = self.term(env)
            self.eat_sym(")")
            return t
        tok = self.eat_ident("term")
        return env.resolve(tok.text)


@dataclass
class _TypeEnv:
    reg: DefRegistry
    tyvars: frozenset[str] = frozenset()
    current_def: str | None = None
    current_params: tuple[str, ...] = ()
    headers: dict[str, int] = field(default_factory=dict)  # name -> arity

    def resolve(self, p: _P, tok: Token, size: SizeExpr, decorated: bool,
                args: tuple[Type, ...], has_args: bool) -> Type:
        name = tok.text
        if name == self.current_def:
            # recursive occurrence: must be applied to exactly the parameters
            if decorated:
                raise ParseError(
                    f"recursive occurrence of {name} cannot carry a size",
                    tok.line, tok.col)
            expected = tuple(TyVar(q) for q in self.current_params)
            if args != expected:
                want = ",".join(self.current_params) or "no parameters"
                raise ParseError(
                    f"recursive occurrence of {name} must be applied to "
                    f"exactly ({want})", tok.line, tok.col)
            return TyVar(name)
        if name in self.tyvars:
            if decorated or has_args:
                raise ParseError(f"type variable {name} takes no arguments",
                                 tok.line, tok.col)
            return TyVar(name)
        arity = None
        if name in self.headers:
            arity = self.headers[name]
        elif name in self.reg:
            arity = len(self.reg.definition(name).params)
        if arity is None:
            raise ParseError(f"unknown type {name}", tok.line, tok.col)
        if len(args) != arity:
            raise ParseError(
                f"{name} expects {arity} parameter(s), got {len(args)}",
                tok.line, tok.col)
        return Coind(name, size, args)


@dataclass
class _TermEnv:
    reg: DefRegistry
    types: _TypeEnv
    bound: frozenset[str] = frozenset()

    def bind(self, x: str) -> "_TermEnv":
        return _TermEnv(self.reg, self.types, self.bound | {x})

    def resolve(self, name: str) -> Term:
        if name in self.bound:
            return Var(name)
        if self.reg.constructor(name) is not None:
            return Con(name)
        return Var(name)


def parse_size(src: str) -> SizeExpr:
    p = _P(tokenize(src))
    s = p.size()
    if p.peek().kind != "eof":
        raise p.fail("trailing input after size expression")
    return s


def parse_type(src: str, reg: DefRegistry,
               tyvars: frozenset[str] = frozenset()) -> Type:
    p = _P(tokenize(src))
    t = p.type_(_TypeEnv(reg, tyvars=tyvars))
    if p.peek().kind != "eof":
        raise p.fail("trailing input after type")
    return t


def parse_term(src: str, reg: DefRegistry) -> Term:
    p = _P(tokenize(src))
    t = p.term(_TermEnv(reg, _TypeEnv(reg)))
    if p.peek().kind != "eof":
        raise p.fail("trailing input after term")
    return t


def _succs(s: SizeExpr, n: int) -> SizeExpr:
    for _ in range(n):
        s = Succ(s)
    return s


def _parse_definition(p: _P, reg: DefRegistry, headers: dict[str, int]) -> Definition:
    kw = p.next()  # inductive | coinductive
    coind = kw.text == "coinductive"
    name_tok = p.eat_ident("definition name")
    name = name_tok.text
    params: list[str] = []
    if p.at_sym("("):
        p.next()
        params.append(p.eat_ident("parameter variable").text)
        while p.at_sym(","):
            p.next()
            params.append(p.eat_ident("parameter variable").text)
        p.eat_sym(")")
    if len(set(params)) != len(params) or name in params:
        raise ParseError(f"duplicate parameter name in {name}",
                         name_tok.line, name_tok.col)
    tenv = _TypeEnv(reg, tyvars=frozenset(params), current_def=name,
                    current_params=tuple(params), headers=headers)
    p.eat_sym("{")
    ctors: list[ConstructorSig] = []
    while not p.at_sym("}"):
        ctok = p.eat_ident("constructor name")
        p.eat_sym(":")
        ty = p.type_(tenv)
        args: list[Type] = []
        target = ty
        while isinstance(target, Arrow):
            args.append(target.dom)
            target = target.cod
        if target != TyVar(name):
            raise ParseError(
                f"constructor {ctok.text} must end in the defined type {name}",
                ctok.line, ctok.col)
        ctors.append(ConstructorSig(ctok.text, tuple(args),
                                    span=(ctok.line, ctok.col)))
        if p.at_sym(";"):
            p.next()
        else:
            break
    close = p.eat_sym("}")
    if not ctors:
        raise ParseError(f"{name}: empty constructor list",
                         close.line, close.col)
    return Definition(name, coind, tuple(params), tuple(ctors),
                      span=(name_tok.line, name_tok.col))


def parse_defs(src: str) -> DefRegistry:
    """Parse a sequence of (co)inductive definitions into a fresh registry.

    Validation is not run; call `validate_registry` afterwards.  Forward
    references between definitions parse fine (their arity is taken from
    the definition headers) so that dependency cycles are reported by
    validation rather than here.
    """
    reg, _rest = _parse_defs_prefix(src)
    return reg


def _collect_headers(toks: list[Token]) -> dict[str, int]:
    headers: dict[str, int] = {}
    i = 0
    while i < len(toks):
        t = toks[i]
        if t.kind == "ident" and t.text in ("inductive", "coinductive"):
            if i + 1 < len(toks) and toks[i + 1].kind == "ident":
                name = toks[i + 1].text
                arity = 0
                j = i + 2
                if j < len(toks) and toks[j].kind == "sym" and toks[j].text == "(":
                    depth = 0
                    while j < len(toks):
                        tt = toks[j]
                        if tt.kind == "sym" and tt.text == "(":
                            depth += 1
                        elif tt.kind == "sym" and tt.text == ")":
                            depth -= 1
                            if depth == 0:
                                break
                        elif tt.kind == "sym" and tt.text == "," and depth == 1:
                            arity += 1
                        elif tt.kind == "ident" and depth == 1 and arity == 0:
                            arity = 1
                        j += 1
                if name in headers:
                    raise ParseError(f"duplicate definition {name}",
                                     t.line, t.col)
                headers[name] = arity
        i += 1
    return headers


def _parse_defs_prefix(src: str) -> tuple[DefRegistry, _P]:
    toks = tokenize(src)
    headers = _collect_headers(toks)
    p = _P(toks)
    reg = DefRegistry()
    while p.at_word("inductive") or p.at_word("coinductive"):
        reg.add(_parse_definition(p, reg, headers))
    return reg, p


@dataclass
class SlamFile:
    """A parsed .slam file: a registry plus named closed terms.

    Bindings are linked: references to earlier bindings are substituted
    into later terms, so each value in `bindings` stands on its own.
    """

    registry: DefRegistry
    bindings: dict[str, Term]


def parse_slam(src: str) -> SlamFile:
    reg, p = _parse_defs_prefix(src)
    bindings: dict[str, Term] = {}
    while p.peek().kind != "eof":
        name_tok = p.eat_ident("binding name")
        if name_tok.text in bindings:
            raise ParseError(f"duplicate binding {name_tok.text}",
                             name_tok.line, name_tok.col)
        p.eat_sym("=")
        t = p.term(_TermEnv(reg, _TypeEnv(reg)))
        p.eat_sym(";")
        for prev, body in bindings.items():
            t = subst_term(t, body, prev)
        bindings[name_tok.text] = t
    return SlamFile(reg, bindings)
