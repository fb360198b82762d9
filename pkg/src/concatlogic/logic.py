"""Syntax of the language {e, 0, 1, *, <:}: terms, formulas, concrete syntax.

Concrete grammar (ASCII)::

    term    := 'e' | '0' | '1' | ident | '"' bits '"' | term '*' term | '(' term ')'
    atom    := term '=' term | term '<:' term
    formula := atom | '~' formula | formula '&' formula | formula '|' formula
             | formula '->' formula | formula '<->' formula
             | ('E' | 'A') ident {',' ident} ['<:' term] '.' formula
             | '(' formula ')'

``*``, ``&`` and ``|`` associate to the left, ``->`` to the right.  A string
literal denotes the biteral of its bits (``""`` is ``e``).  ``A x, y <: t . f``
is sugar for ``A x <: t . A y <: t . f``.  The relation symbol ``<:`` is read
as substring or prefix only at evaluation time.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union

from .strings import BitString, check_bits


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Concat:
    left: "Term"
    right: "Term"


Term = Union[Empty, Zero, One, Var, Concat]

E, ZERO, ONE = Empty(), Zero(), One()


# ------------------------------------------------------------- formulas


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Rel:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class BoundedExists:
    var: str
    bound: Term
    body: "Formula"

    def __post_init__(self):
        if self.var in term_vars(self.bound):
            raise ValueError(f"bound variable {self.var} occurs in its bound")


@dataclass(frozen=True)
class BoundedForall:
    var: str
    bound: Term
    body: "Formula"

    def __post_init__(self):
        if self.var in term_vars(self.bound):
            raise ValueError(f"bound variable {self.var} occurs in its bound")


Formula = Union[Eq, Rel, Not, And, Or, Implies, Iff, Exists, Forall,
                BoundedExists, BoundedForall]
ATOMS = (Eq, Rel)
BINARY = (And, Or, Implies, Iff)
QUANTIFIERS = (Exists, Forall, BoundedExists, BoundedForall)
BOUNDED = (BoundedExists, BoundedForall)


def cat(*terms: Term) -> Term:
    """Left-nested concatenation; ``cat()`` is ``e``."""
    if not terms:
        return E
    out = terms[0]
    for t in terms[1:]:
        out = Concat(out, t)
    return out


def conj(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


# -------------------------------------------------------------- biterals


def biteral(b: BitString) -> Term:
    check_bits(b)
    t: Term = E
    for c in b:
        t = Concat(t, ZERO if c == "0" else ONE)
    return t


def biteral_bits(t: Term) -> BitString | None:
    """The bit string denoted by `t` if `t` is a biteral, else None."""
    out = []
    while isinstance(t, Concat):
        if isinstance(t.right, Zero):
            out.append("0")
        elif isinstance(t.right, One):
            out.append("1")
        else:
            return None
        t = t.left
    if not isinstance(t, Empty):
        return None
    return "".join(reversed(out))


# ------------------------------------------------------------- variables


_TV_CACHE: dict[int, tuple[Term, frozenset]] = {}


def term_vars(t: Term) -> set[str]:
    if not isinstance(t, Concat):
        return {t.name} if isinstance(t, Var) else set()
    hit = _TV_CACHE.get(id(t))
    if hit is not None and hit[0] is t:
        return set(hit[1])
    out = _term_vars(t)
    if len(_TV_CACHE) > 200_000:
        _TV_CACHE.clear()
    _TV_CACHE[id(t)] = (t, frozenset(out))
    return out


def _term_vars(t: Term) -> set[str]:
    out: set[str] = set()
    stack = [t]
    seen: set[int] = set()
    while stack:
        s = stack.pop()
        if isinstance(s, Concat):
            if id(s) in seen:
                continue
            seen.add(id(s))
            stack.append(s.left)
            stack.append(s.right)
        elif isinstance(s, Var):
            out.add(s.name)
    return out


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, ATOMS):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, BINARY):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, BOUNDED):
        return term_vars(f.bound) | (free_vars(f.body) - {f.var})
    return free_vars(f.body) - {f.var}


def all_vars(f: Formula) -> set[str]:
    """Free and bound variable names of `f`."""
    if isinstance(f, ATOMS):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, Not):
        return all_vars(f.body)
    if isinstance(f, BINARY):
        return all_vars(f.left) | all_vars(f.right)
    if isinstance(f, BOUNDED):
        return {f.var} | term_vars(f.bound) | all_vars(f.body)
    return {f.var} | all_vars(f.body)


def is_sentence(f: Formula) -> bool:
    return not free_vars(f)


def fresh_var(avoid: Iterable[str], prefix: str = "v") -> str:
    avoid = set(avoid)
    for i in itertools.count(1):
        name = f"{prefix}{i}"
        if name not in avoid:
            return name
    raise AssertionError  # unreachable


class Fresh:
    """Deterministic supply of variable names v1, v2, ... avoiding a set."""

    def __init__(self, avoid: Iterable[str] = (), prefix: str = "v"):
        self.avoid = set(avoid)
        self.prefix = prefix
        self.counter = 0

    def __call__(self) -> str:
        while True:
            self.counter += 1
            name = f"{self.prefix}{self.counter}"
            if name not in self.avoid:
                self.avoid.add(name)
                return name

    def many(self, k: int) -> list[str]:
        return [self() for _ in range(k)]


# ---------------------------------------------------------- substitution


def subst_term(t: Term, x: str, s: Term) -> Term:
    return subst_terms(t, {x: s})


def subst_terms(t: Term, mapping: dict[str, Term]) -> Term:
    """Simultaneous substitution; shared subterms stay shared."""
    memo: dict[int, Term] = {}
    stack = [t]
    while stack:
        u = stack[-1]
        if not isinstance(u, Concat) or id(u) in memo:
            stack.pop()
            continue
        todo = [c for c in (u.right, u.left) if isinstance(c, Concat) and id(c) not in memo]
        if todo:
            stack.extend(todo)
            continue
        stack.pop()
        left, right = _sub_leaf(u.left, mapping, memo), _sub_leaf(u.right, mapping, memo)
        memo[id(u)] = u if left is u.left and right is u.right else Concat(left, right)
    return _sub_leaf(t, mapping, memo)


def _sub_leaf(t: Term, mapping, memo) -> Term:
    if isinstance(t, Concat):
        return memo[id(t)]
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    return t


def substitute(f: Formula, x: str, t: Term) -> Formula:
    """Capture-avoiding substitution of `t` for the free variable `x`."""
    if isinstance(f, ATOMS):
        return type(f)(subst_term(f.left, x, t), subst_term(f.right, x, t))
    if isinstance(f, Not):
        return Not(substitute(f.body, x, t))
    if isinstance(f, BINARY):
        return type(f)(substitute(f.left, x, t), substitute(f.right, x, t))
    bound = subst_term(f.bound, x, t) if isinstance(f, BOUNDED) else None
    if f.var == x:
        return f if bound is None else type(f)(f.var, bound, f.body)
    var, body = f.var, f.body
    if x in free_vars(body) and var in term_vars(t):
        new = fresh_var(all_vars(body) | term_vars(t) | {x})
        body = substitute(body, var, Var(new))
        var = new
    body = substitute(body, x, t)
    if bound is None:
        return type(f)(var, body)
    return type(f)(var, bound, body)


# --------------------------------------------------------- classification


class SigmaClass(NamedTuple):
    n: int  # unbounded existential quantifiers
    m: int  # bounded existential quantifiers
    k: int  # bounded universal quantifiers

    def __str__(self):
        return f"({self.n},{self.m},{self.k})"


def classify(f: Formula) -> SigmaClass | None:
    """Quantifier counts (n, m, k) of a Sigma-formula, None if `f` is not one.

    Negation is allowed only directly on atoms; double negation is rejected.
    """
    if isinstance(f, ATOMS):
        return SigmaClass(0, 0, 0)
    if isinstance(f, Not):
        return SigmaClass(0, 0, 0) if isinstance(f.body, ATOMS) else None
    if isinstance(f, (And, Or)):
        a, b = classify(f.left), classify(f.right)
        if a is None or b is None:
            return None
        return SigmaClass(a.n + b.n, a.m + b.m, a.k + b.k)
    if isinstance(f, (Implies, Iff, Forall)):
        return None
    c = classify(f.body)
    if c is None:
        return None
    if isinstance(f, Exists):
        return c._replace(n=c.n + 1)
    if isinstance(f, BoundedExists):
        return c._replace(m=c.m + 1)
    return c._replace(k=c.k + 1)


def expand_bounded(f: Formula) -> Formula:
    """Replace bounded quantifiers by their relativized unbounded forms."""
    if isinstance(f, ATOMS):
        return f
    if isinstance(f, Not):
        return Not(expand_bounded(f.body))
    if isinstance(f, BINARY):
        return type(f)(expand_bounded(f.left), expand_bounded(f.right))
    body = expand_bounded(f.body)
    if isinstance(f, BoundedExists):
        return Exists(f.var, And(Rel(Var(f.var), f.bound), body))
    if isinstance(f, BoundedForall):
        return Forall(f.var, Implies(Rel(Var(f.var), f.bound), body))
    return type(f)(f.var, body)


def as_bounded(f: Formula) -> tuple[str, Term, Formula] | None:
    """Recognize the relativized shapes produced by `expand_bounded`.

    Returns (var, bound, body) for ``Exists x (x <: t & body)`` and
    ``Forall x (x <: t -> body)`` when x does not occur in t.
    """
    if isinstance(f, Exists) and isinstance(f.body, And):
        guard = f.body.left
    elif isinstance(f, Forall) and isinstance(f.body, Implies):
        guard = f.body.left
    else:
        return None
    if (isinstance(guard, Rel) and guard.left == Var(f.var)
            and f.var not in term_vars(guard.right)):
        return f.var, guard.right, f.body.right
    return None


def negate(f: Formula) -> Formula:
    """De Morgan dual of the negation of a Sigma-formula without unbounded quantifiers.

    The result is again a Sigma-formula, with the roles of bounded
    existential and bounded universal quantifiers swapped.
    """
    if isinstance(f, ATOMS):
        return Not(f)
    if isinstance(f, Not):
        if not isinstance(f.body, ATOMS):
            raise ValueError("negation allowed on atoms only")
        return f.body
    if isinstance(f, And):
        return Or(negate(f.left), negate(f.right))
    if isinstance(f, Or):
        return And(negate(f.left), negate(f.right))
    if isinstance(f, BoundedExists):
        return BoundedForall(f.var, f.bound, negate(f.body))
    if isinstance(f, BoundedForall):
        return BoundedExists(f.var, f.bound, negate(f.body))
    raise ValueError(f"cannot dualize {type(f).__name__}")


# -------------------------------------------------------------- printing


def show_term(t: Term) -> str:
    bits = biteral_bits(t)
    if bits is not None and not isinstance(t, Empty):
        return f'"{bits}"'
    if isinstance(t, Empty):
        return "e"
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, One):
        return "1"
    if isinstance(t, Var):
        return t.name
    right = show_term(t.right)
    if isinstance(t.right, Concat) and biteral_bits(t.right) is None:
        right = f"({right})"
    return f"{show_term(t.left)} * {right}"


_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}
_OPS = {Iff: "<->", Implies: "->", Or: "|", And: "&"}


def show(f: Formula | Term) -> str:
    if not isinstance(f, (Eq, Rel, Not, And, Or, Implies, Iff) + QUANTIFIERS):
        return show_term(f)
    return _show(f, 0)


def _show(f: Formula, ctx: int) -> str:
    if isinstance(f, Eq):
        return f"{show_term(f.left)} = {show_term(f.right)}"
    if isinstance(f, Rel):
        return f"{show_term(f.left)} <: {show_term(f.right)}"
    if isinstance(f, Not):
        return "~" + _show(f.body, 10)
    if isinstance(f, BINARY):
        p = _PREC[type(f)]
        # left-assoc ops need a tighter right side; '->' is right-assoc
        if isinstance(f, Implies):
            lp, rp = p + 1, p
        else:
            lp, rp = p, p + 1
        s = f"{_show(f.left, lp)} {_OPS[type(f)]} {_show(f.right, rp)}"
        return f"({s})" if p < ctx else s
    q = "E" if isinstance(f, (Exists, BoundedExists)) else "A"
    bound = f" <: {show_term(f.bound)}" if isinstance(f, BOUNDED) else ""
    s = f"{q} {f.var}{bound} . {_show(f.body, 0)}"
    return f"({s})" if ctx > 0 else s


# --------------------------------------------------------------- parsing


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int, expected: Iterable[str] = ()):
        self.line, self.col = line, col
        self.expected = sorted(set(expected))
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"line {line}, column {col}: {msg}{exp}")


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<lit>"[01]*")
  | (?P<op><->|->|<:|[=~&|.*(),])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<bit>[01])
""", re.VERBOSE)

_RESERVED = {"e", "E", "A"}


class _Tok(NamedTuple):
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        for i, c in enumerate(m.group()):
            if c == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, expected: Iterable[str]):
        t = self.peek()
        what = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"unexpected {what}", t.line, t.col, expected)

    def accept(self, text: str) -> bool:
        t = self.peek()
        if t.kind in ("op", "ident") and t.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.fail([repr(text)])

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "ident" or t.text in _RESERVED:
            self.fail(["identifier"])
        self.i += 1
        return t.text

    # formula := iff
    def formula(self) -> Formula:
        left = self.implies()
        while self.accept("<->"):
            left = Iff(left, self.implies())
        return left

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.accept("->"):
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.accept("|"):
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.accept("&"):
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        t = self.peek()
        if self.accept("~"):
            return Not(self.unary())
        if t.kind == "ident" and t.text in ("E", "A"):
            return self.quantifier()
        if t.kind == "op" and t.text == "(":
            save = self.i
            try:
                return self.atom()
            except ParseError:
                self.i = save
            self.expect("(")
            f = self.formula()
            self.expect(")")
            return f
        return self.atom()

    def quantifier(self) -> Formula:
        universal = self.peek().text == "A"
        self.i += 1
        names = [self.ident()]
        while self.accept(","):
            names.append(self.ident())
        bound = self.term() if self.accept("<:") else None
        if not self.accept("."):
            self.fail(["'.'", "'<:'", "','"])
        body = self.formula()
        for name in reversed(names):
            if bound is None:
                body = Forall(name, body) if universal else Exists(name, body)
            else:
                if name in term_vars(bound):
                    t = self.peek()
                    raise ParseError(f"variable {name} occurs in its own bound", t.line, t.col)
                body = (BoundedForall if universal else BoundedExists)(name, bound, body)
        return body

    def atom(self) -> Formula:
        left = self.term()
        if self.accept("="):
            return Eq(left, self.term())
        if self.accept("<:"):
            return Rel(left, self.term())
        self.fail(["'='", "'<:'", "'*'"])

    def term(self) -> Term:
        left = self.primary()
        while self.accept("*"):
            left = Concat(left, self.primary())
        return left

    def primary(self) -> Term:
        t = self.peek()
        if t.kind == "lit":
            self.i += 1
            return biteral(t.text[1:-1])
        if t.kind == "bit":
            self.i += 1
            return ZERO if t.text == "0" else ONE
        if t.kind == "ident":
            if t.text == "e":
                self.i += 1
                return E
            return Var(self.ident())
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        self.fail(["term", "'('", "'~'", "quantifier"])


def parse(text: str) -> Formula | Term:
    """Parse a formula, or a bare term when the input is only a term."""
    p = _Parser(text)
    try:
        f = p.formula()
        if p.peek().kind == "eof":
            return f
        formula_error = None
        try:
            p.fail(["end of input", "'&'", "'|'", "'->'", "'<->'"])
        except ParseError as err:
            formula_error = err
    except ParseError as err:
        formula_error = err
    p = _Parser(text)
    try:
        t = p.term()
        if p.peek().kind == "eof":
            return t
    except ParseError:
        pass
    raise formula_error


def parse_formula(text: str) -> Formula:
    f = parse(text)
    if not isinstance(f, (Eq, Rel, Not) + BINARY + QUANTIFIERS):
        raise ParseError("expected a formula, got a term", 1, 1, ["'='", "'<:'"])
    return f


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.peek().kind != "eof":
        p.fail(["'*'", "end of input"])
    return t


# ------------------------------------------------------------------ JSON

_TERM_KIND = {Empty: "e", Zero: "zero", One: "one"}
_BIN_KIND = {Eq: "eq", Rel: "rel", And: "and", Or: "or", Implies: "implies", Iff: "iff"}
_Q_KIND = {Exists: "exists", Forall: "forall",
           BoundedExists: "bexists", BoundedForall: "bforall"}


def to_json(x: Formula | Term) -> dict:
    if type(x) in _TERM_KIND:
        return {"kind": _TERM_KIND[type(x)]}
    if isinstance(x, Var):
        return {"kind": "var", "name": x.name}
    if isinstance(x, Concat):
        return {"kind": "concat", "left": to_json(x.left), "right": to_json(x.right)}
    if type(x) in _BIN_KIND:
        return {"kind": _BIN_KIND[type(x)], "left": to_json(x.left), "right": to_json(x.right)}
    if isinstance(x, Not):
        return {"kind": "not", "body": to_json(x.body)}
    out = {"kind": _Q_KIND[type(x)], "var": x.var}
    if isinstance(x, BOUNDED):
        out["bound"] = to_json(x.bound)
    out["body"] = to_json(x.body)
    return out


def from_json(d: dict) -> Formula | Term:
    kind = d["kind"]
    for cls, k in _TERM_KIND.items():
        if k == kind:
            return cls()
    if kind == "var":
        return Var(d["name"])
    if kind == "concat":
        return Concat(from_json(d["left"]), from_json(d["right"]))
    for cls, k in _BIN_KIND.items():
        if k == kind:
            return cls(from_json(d["left"]), from_json(d["right"]))
    if kind == "not":
        return Not(from_json(d["body"]))
    for cls, k in _Q_KIND.items():
        if k == kind:
            if cls in BOUNDED:
                return cls(d["var"], from_json(d["bound"]), from_json(d["body"]))
            return cls(d["var"], from_json(d["body"]))
    raise ValueError(f"unknown AST kind {kind!r}")


def dumps(x: Formula | Term) -> str:
    return json.dumps(to_json(x), sort_keys=True)
