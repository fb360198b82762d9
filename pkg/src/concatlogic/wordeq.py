"""Word equations over {0,1}: flattening, Nielsen-transformation search.

An equation is a pair of symbol tuples.  A symbol is the character ``'0'``
or ``'1'`` or a variable name (identifiers never spell a bit).

The search rewrites the equation by Levi's lemma on the leading symbols:
a variable facing a constant ``c`` is either empty or starts with ``c``;
two distinct leading variables ``x, y`` are split into ``x`` empty, ``y``
empty, ``x = y``, ``x = y x'`` and ``y = x y'`` (primed variables nonempty).
Each state tracks which variables are known to be nonempty.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Union

from .logic import Concat, Empty, Eq, Formula, One, Term, Var, Zero, classify, show

Symbol = str
Word = tuple[Symbol, ...]

DEFAULT_MAX_EQ_LEN = 64


def is_const(s: Symbol) -> bool:
    return s == "0" or s == "1"


@dataclass(frozen=True)
class WordEquation:
    lhs: Word
    rhs: Word

    def variables(self) -> set[str]:
        return {s for s in self.lhs + self.rhs if not is_const(s)}

    def __str__(self):
        side = lambda w: "·".join(w) if w else "ε"
        return f"{side(self.lhs)} = {side(self.rhs)}"


def flatten_term(t: Term) -> Word:
    out: list[Symbol] = []
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Concat):
            stack.append(s.right)
            stack.append(s.left)
        elif isinstance(s, Zero):
            out.append("0")
        elif isinstance(s, One):
            out.append("1")
        elif isinstance(s, Var):
            out.append(s.name)
        elif not isinstance(s, Empty):
            raise TypeError(f"not a term: {s!r}")
    return tuple(out)


def flatten(e: Eq) -> WordEquation:
    return WordEquation(flatten_term(e.left), flatten_term(e.right))


def parse_equation(text: str) -> WordEquation:
    from .logic import parse_formula

    f = parse_formula(text)
    if not isinstance(f, Eq):
        raise ValueError("expected an equation s = t")
    return flatten(f)


def substitute_word(w: Word, assignment: dict[str, str]) -> str:
    return "".join(s if is_const(s) else assignment.get(s, "") for s in w)


def check_solution(eq: WordEquation, assignment: dict[str, str]) -> bool:
    return substitute_word(eq.lhs, assignment) == substitute_word(eq.rhs, assignment)


# ------------------------------------------------------------ verdicts


@dataclass(frozen=True)
class Sat:
    assignment: dict[str, str]


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class UnsatWithinBound:
    bound: int


EqVerdict = Union[Sat, Unsat, UnsatWithinBound]


# ---------------------------------------------------------- the search


def _simplify(lhs: Word, rhs: Word) -> tuple[Word, Word]:
    i = 0
    n = min(len(lhs), len(rhs))
    while i < n and lhs[i] == rhs[i]:
        i += 1
    lhs, rhs = lhs[i:], rhs[i:]
    j = 0
    n = min(len(lhs), len(rhs))
    while j < n and lhs[-1 - j] == rhs[-1 - j]:
        j += 1
    if j:
        lhs, rhs = lhs[:len(lhs) - j], rhs[:len(rhs) - j]
    return lhs, rhs


def _linear_ok(coef: dict[str, int], target: int) -> bool:
    """Necessary condition for sum(coef[x] * n_x) == target with n_x >= 0."""
    nz = [a for a in coef.values() if a]
    if not nz:
        return target == 0
    if target and math.gcd(*nz) and target % math.gcd(*nz):
        return False
    if target > 0:
        return any(a > 0 for a in nz)
    if target < 0:
        return any(a < 0 for a in nz)
    return True


def _feasible(lhs: Word, rhs: Word, nonempty: frozenset) -> bool:
    """Length and letter-count (Parikh) abstractions of the equation."""
    coef: dict[str, int] = {}
    zeros = ones = 0
    for s in lhs:
        if s == "0":
            zeros -= 1
        elif s == "1":
            ones -= 1
        else:
            coef[s] = coef.get(s, 0) + 1
    for s in rhs:
        if s == "0":
            zeros += 1
        elif s == "1":
            ones += 1
        else:
            coef[s] = coef.get(s, 0) - 1
    length = zeros + ones - sum(a for x, a in coef.items() if x in nonempty)
    return (_linear_ok(coef, length) and _linear_ok(coef, zeros)
            and _linear_ok(coef, ones))


def _replace(w: Word, x: str, r: Word) -> Word:
    if x not in w:
        return w
    out: list[Symbol] = []
    for s in w:
        if s == x:
            out.extend(r)
        else:
            out.append(s)
    return tuple(out)


def _moves(lhs: Word, rhs: Word, nonempty: frozenset):
    """Levi case split on the leading symbols: yields (var, replacement, nonempty')."""
    a, b = lhs[0], rhs[0]
    if is_const(b):
        var, c = a, b
    elif is_const(a):
        var, c = b, a
    else:
        var = None
    if var is not None:
        if var not in nonempty:
            yield var, (), nonempty
        yield var, (c, var), nonempty - {var}
        return
    x, y = a, b
    if x not in nonempty:
        yield x, (), nonempty
    if y not in nonempty:
        yield y, (), nonempty
    both = nonempty | {x, y}
    yield x, (y,), both - {x}
    yield x, (y, x), both
    yield y, (x, y), both


def _step_state(lhs, rhs, var, r):
    return _simplify(_replace(lhs, var, r), _replace(rhs, var, r))


def _dead(lhs: Word, rhs: Word, nonempty: frozenset) -> bool:
    if lhs and rhs:
        if is_const(lhs[0]) and is_const(rhs[0]):
            return True  # equal constants were cancelled, so these differ
        if is_const(lhs[-1]) and is_const(rhs[-1]):
            return True
    return not _feasible(lhs, rhs, nonempty)


def _terminal(lhs: Word, rhs: Word, nonempty: frozenset):
    """None if the state needs more search, else the list of vars forced empty
    (a solved state), or False for a dead state."""
    if lhs and rhs:
        return None
    rest = lhs or rhs
    if any(is_const(s) or s in nonempty for s in rest):
        return False
    return sorted(set(rest))


def _min_len(w: Word, nonempty: frozenset) -> int:
    return sum(1 for s in w if is_const(s) or s in nonempty)


def _compose(sig: dict[str, Word], var: str, r: Word) -> dict[str, Word]:
    return {k: _replace(v, var, r) for k, v in sig.items()}


class Solutions:
    """Depth-first enumeration of parametric solutions of an equation.

    Each yielded solution maps every original variable to a word over
    constants and *free* variables; any values of the free variables
    (respecting `nonempty_free`) give a solution.  Branches in which some
    original variable would need more than `max_len` letters are cut and
    recorded in `truncated`.
    """

    def __init__(self, eq: WordEquation, max_len: int, max_nodes: int | None = None):
        self.eq = eq
        self.max_len = max_len
        self.max_nodes = max_nodes
        self.truncated = False
        self.nodes = 0

    def __iter__(self) -> Iterator[tuple[dict[str, Word], frozenset]]:
        sig = {x: (x,) for x in sorted(self.eq.variables())}
        lhs, rhs = _simplify(self.eq.lhs, self.eq.rhs)
        stack = [(lhs, rhs, frozenset(), sig)]
        while stack:
            lhs, rhs, nonempty, sig = stack.pop()
            self.nodes += 1
            if self.max_nodes is not None and self.nodes > self.max_nodes:
                self.truncated = True
                return
            done = _terminal(lhs, rhs, nonempty)
            if done is False:
                continue
            if done is not None:
                for x in done:
                    sig = _compose(sig, x, ())
                yield sig, nonempty
                continue
            if _dead(lhs, rhs, nonempty):
                continue
            children = []
            for var, r, ne in _moves(lhs, rhs, nonempty):
                new_sig = _compose(sig, var, r)
                if any(_min_len(w, ne) > self.max_len for w in new_sig.values()):
                    self.truncated = True
                    continue
                nl, nr = _step_state(lhs, rhs, var, r)
                children.append((nl, nr, ne, new_sig))
            stack.extend(reversed(children))


def _concrete(sig: dict[str, Word], nonempty: frozenset) -> dict[str, str]:
    """Instantiate free variables minimally: empty, or '0' when nonempty."""
    val = {x: ("0" if x in nonempty else "") for w in sig.values() for x in w if not is_const(x)}
    return {k: "".join(s if is_const(s) else val[s] for s in w) for k, w in sig.items()}


def solve(eq: WordEquation, max_total_len: int,
          max_eq_len: int = DEFAULT_MAX_EQ_LEN) -> EqVerdict:
    """Breadth-first Nielsen search with memoized states.

    Returns Sat with the first witness in search order, Unsat when the
    reachable state space closes without any state being cut (by the
    equation-length cap or by `max_total_len` on the summed solution
    length), and UnsatWithinBound otherwise.
    """
    if max_total_len < 0:
        raise ValueError("max_total_len must be >= 0")
    variables = sorted(eq.variables())
    lhs, rhs = _simplify(eq.lhs, eq.rhs)
    start = (lhs, rhs, frozenset())
    queue = deque([(start, {x: (x,) for x in variables})])
    seen = {start}
    cut = False
    while queue:
        (lhs, rhs, nonempty), sig = queue.popleft()
        done = _terminal(lhs, rhs, nonempty)
        if done is False:
            continue
        if done is not None:
            for x in done:
                sig = _compose(sig, x, ())
            sol = _concrete(sig, nonempty)
            assert check_solution(eq, sol), (eq, sol)
            return Sat(sol)
        if _dead(lhs, rhs, nonempty):
            continue
        for var, r, ne in _moves(lhs, rhs, nonempty):
            nl, nr = _step_state(lhs, rhs, var, r)
            new_sig = _compose(sig, var, r)
            if (len(nl) + len(nr) > max_eq_len
                    or sum(_min_len(w, ne) for w in new_sig.values()) > max_total_len):
                cut = True
                continue
            state = (nl, nr, ne)
            if state in seen:
                continue
            seen.add(state)
            queue.append((state, new_sig))
    return UnsatWithinBound(max_total_len) if cut else Unsat()


def brute_force(eq: WordEquation, max_len: int) -> dict[str, str] | None:
    """Exhaustive search over assignments with every value of length <= max_len."""
    from itertools import product

    from .strings import all_strings

    variables = sorted(eq.variables())
    pool = list(all_strings(max_len))
    for values in product(pool, repeat=len(variables)):
        a = dict(zip(variables, values))
        if check_solution(eq, a):
            return a
    return None


# ----------------------------------------------- deciding Sigma(n,m,0) in D


def decide_D_nm0(phi: Formula, budget: int, max_eq_len: int = 4096):
    """Decide a Sigma(n,m,0) sentence in the prefix structure via word equations.

    The sentence is brought into the form E v1 ... E vk (s = t) and the
    equation is handed to `solve`; the verdict is True/False or Unknown
    when the search was cut.  Normal forms whose equation would expand
    beyond `max_eq_len` symbols are handed to the evaluator instead.
    """
    from .normalform import expanded_size, normalize_D
    from .semantics import Verdict, evaluate

    c = classify(phi)
    if c is None:
        raise ValueError("not a Sigma-formula")
    if c.k:
        raise ValueError(f"sentence has {c.k} bounded universal quantifiers")
    nf = normalize_D(phi)
    assert all(q.kind == "exists" for q in nf.prefix), show(nf.to_formula())
    if expanded_size(nf.matrix.left) + expanded_size(nf.matrix.right) > max_eq_len:
        return evaluate(phi, "D", budget=budget, refute=True)
    eq = flatten(nf.matrix)
    res = solve(eq, budget * max(1, len(eq.variables())), max_eq_len=max_eq_len)
    if isinstance(res, Sat):
        return Verdict(True, budget, {k: v for k, v in res.assignment.items()})
    if isinstance(res, Unsat):
        return Verdict(False, budget)
    return Verdict(None, budget)
