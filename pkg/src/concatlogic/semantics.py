"""Evaluation in the substring structure B and the prefix structure D.

Truth values are three-valued: a `Verdict` is True, False, or unknown
under the given budget.  Bounded quantifiers are decided by enumerating
the substrings (B) or prefixes (D) of the bound.  Unbounded quantifiers
are handled by a search whose blind part ranges over strings of length at
most `budget`:

* a run of existential quantifiers is solved as a block; a positive
  conjunct whose one side is already known (``p = K``, ``p <: K``)
  restricts the pattern ``p`` to finitely many matches, and a remaining
  equation is solved by Nielsen transformations;
* whatever is left is enumerated blindly up to `budget`.

Witnesses found through a known string or an equation may be longer than
`budget`; only blind enumeration is limited by it.  A True/False answer
is never given on the strength of a truncated search.
"""

from __future__ import annotations

import enum
import sys
import threading
from dataclasses import dataclass, field
from typing import Iterator

from . import wordeq
from .logic import (ATOMS, BOUNDED, And, BoundedExists, BoundedForall, Concat,
                    Empty, Eq, Exists, Forall, Formula, Iff, Implies, Not, One,
                    Or, Rel, Term, Var, Zero, as_bounded, classify, negate,
                    free_vars, subst_terms, term_vars)
from .strings import BitString, all_strings, is_prefix, is_substring, prefixes, substrings


class Structure(enum.Enum):
    B = "B"  # <: is the substring relation
    D = "D"  # <: is the prefix relation

    @classmethod
    def of(cls, s: "Structure | str") -> "Structure":
        return s if isinstance(s, cls) else cls(str(s).upper())


class UnboundVariable(KeyError):
    def __str__(self):
        return f"unbound variable {self.args[0]!r}"


@dataclass(frozen=True)
class Verdict:
    value: bool | None
    budget: int
    witness: dict[str, str] = field(default_factory=dict, compare=False)

    @property
    def unknown(self) -> bool:
        return self.value is None

    def __str__(self):
        if self.value is None:
            return f"unknown(budget={self.budget})"
        return "true" if self.value else "false"


class TooLong(ValueError):
    pass


def eval_term(t: Term, a: dict[str, BitString], _memo: dict | None = None,
              limit: int | None = None) -> BitString:
    """Value of `t` under `a`; shared subterms are evaluated once.

    With `limit`, raises TooLong as soon as a subterm value exceeds it.
    """
    memo = {} if _memo is None else _memo
    stack = [t]
    while stack:
        u = stack[-1]
        if isinstance(u, Concat):
            if id(u) in memo:
                stack.pop()
                continue
            pending = [c for c in (u.right, u.left) if isinstance(c, Concat) and id(c) not in memo]
            if pending:
                stack.extend(pending)
                continue
            v = memo[id(u)] = _leaf(u.left, a, memo) + _leaf(u.right, a, memo)
            if limit is not None and len(v) > limit:
                raise TooLong(len(v))
        stack.pop()
    return _leaf(t, a, memo)


def _leaf(t: Term, a, memo) -> BitString:
    if isinstance(t, Concat):
        return memo[id(t)]
    if isinstance(t, Empty):
        return ""
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, One):
        return "1"
    if isinstance(t, Var):
        try:
            return a[t.name]
        except KeyError:
            raise UnboundVariable(t.name) from None
    raise TypeError(f"not a term: {t!r}")


def _and(x, y):
    if x is False or y is False:
        return False
    if x is None or y is None:
        return None
    return True


def _or(x, y):
    if x is True or y is True:
        return True
    if x is None or y is None:
        return None
    return False


def _not(x):
    return None if x is None else not x


# equations longer than this are not handed to the equation solver
NIELSEN_MAX_SYMBOLS = 400


class _OutOfEffort(Exception):
    pass


def _conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _match(pattern: wordeq.Word, s: str, a: dict[str, str]) -> Iterator[dict[str, str]]:
    """All extensions of `a` making the symbol sequence `pattern` spell `s`."""
    if not pattern:
        if not s:
            yield a
        return
    head, rest = pattern[0], pattern[1:]
    if wordeq.is_const(head):
        if s[:1] == head:
            yield from _match(rest, s[1:], a)
        return
    if head in a:
        v = a[head]
        if s.startswith(v):
            yield from _match(rest, s[len(v):], a)
        return
    # letters the rest of the pattern needs at least
    need = sum(1 for x in rest if wordeq.is_const(x) or x in a and a[x])
    for i in range(len(s) - need + 1):
        yield from _match(rest, s[i:], {**a, head: s[:i]})


class Evaluator:
    def __init__(self, structure: Structure | str, budget: int, max_steps: int = 200_000,
                 refute: bool = False, hints=None, decode: bool = True):
        self.structure = Structure.of(structure)
        self.refute = refute
        self.hints = hints
        self.decode = decode
        # variables introduced or eliminated by the search itself
        self.auxiliary: set[str] = set()
        self._memo_for: dict | None = None
        self._memo: dict = {}
        self.budget = budget
        self.max_steps = max_steps
        self.steps = 0
        self.truncated = False

    # -- helpers

    def tick(self, n: int = 1):
        self.steps += n
        if self.steps > self.max_steps:
            raise _OutOfEffort

    def limited(self, share: int, run):
        """Run with at most `share` more steps; Unknown when that runs out."""
        saved = self.max_steps
        if self.steps + share >= saved:
            return run()
        self.max_steps = self.steps + share
        try:
            return run()
        except _OutOfEffort:
            self.truncated = True
            return None
        finally:
            self.max_steps = saved

    def either(self, attempts):
        """Disjunction of lazily evaluated alternatives.

        Each alternative first gets a slice of the remaining effort so that
        a hard one cannot starve an easy one; undecided ones then rerun.
        """
        share = max(100, (self.max_steps - self.steps) // (2 * len(attempts)))
        results = [self.limited(share, run) for run in attempts[:1]]
        for run in attempts[1:]:
            if True in results:
                break
            results.append(self.limited(share, run))
        if True in results:
            return True
        for i, run in enumerate(attempts):
            if results[i] is None:
                results[i] = run()
                if results[i] is True:
                    return True
        return None if None in results else False

    def rel(self, u: str, v: str) -> bool:
        return is_substring(u, v) if self.structure is Structure.B else is_prefix(u, v)

    def below(self, v: str) -> tuple[str, ...]:
        return substrings(v) if self.structure is Structure.B else prefixes(v)

    def term(self, t: Term, a) -> str:
        if self._memo_for is not a:
            self._memo_for, self._memo = a, {}
        s = eval_term(t, a, self._memo)
        # long strings cost effort in proportion to their length
        if len(s) > 4096:
            self.tick(len(s) // 4096)
        return s

    # -- formulas

    def ev(self, f: Formula, a: dict[str, str]):
        if isinstance(f, Eq):
            parts = _split(f) if self.decode else [f]
            if len(parts) > 1:
                return all(self.ev(e, a) for e in parts)
            return self.term(f.left, a) == self.term(f.right, a)
        if isinstance(f, Rel):
            return self.rel(self.term(f.left, a), self.term(f.right, a))
        if isinstance(f, Not):
            return _not(self.ev(f.body, a))
        if isinstance(f, And):
            x = self.ev(f.left, a)
            return False if x is False else _and(x, self.ev(f.right, a))
        if isinstance(f, Or):
            return self.either([lambda side=side: self.ev(side, a) for side in (f.left, f.right)])
        if isinstance(f, Implies):
            x = self.ev(f.left, a)
            return True if x is False else _or(_not(x), self.ev(f.right, a))
        if isinstance(f, Iff):
            x, y = self.ev(f.left, a), self.ev(f.right, a)
            return None if x is None or y is None else x == y
        if isinstance(f, BoundedForall):
            return self.forall(f.var, self.below(self.term(f.bound, a)), f.body, a)
        if isinstance(f, Forall):
            rb = as_bounded(f)
            if rb:
                var, bound, body = rb
                return self.forall(var, self.below(self.term(bound, a)), body, a)
            self.truncated = True
            res = self.forall(f.var, all_strings(self.budget), f.body, a)
            return None if res is True else res
        if isinstance(f, (Exists, BoundedExists)):
            try:
                return self.exists_block(f, a)
            except _OutOfEffort:
                self.truncated = True
                return None
        raise TypeError(f"not a formula: {f!r}")

    def forall(self, var, values, body, a):
        result = True
        for v in values:
            self.tick()
            r = self.ev(body, {**a, var: v})
            if r is False:
                return False
            if r is None:
                result = None
        return result

    # -- existential blocks

    def exists_block(self, f: Formula, a: dict[str, str], want_witness: bool = False):
        variables: list[str] = []
        bounds: list[Formula] = []
        unbounded = False
        while True:
            if isinstance(f, BoundedExists):
                var, bound, body = f.var, f.bound, f.body
            elif isinstance(f, Exists):
                rb = as_bounded(f)
                var, bound, body = rb if rb else (f.var, None, f.body)
            else:
                break
            if var in variables or var in a:
                # rename a shadowing binder apart
                from .logic import fresh_var, free_vars, substitute
                new = fresh_var(set(variables) | set(a) | free_vars(body), prefix=var + "_")
                body = substitute(body, var, Var(new))
                var = new
            variables.append(var)
            if bound is not None:
                bounds.append(Rel(Var(var), bound))
            else:
                unbounded = True
            f = body
        conjuncts = bounds + [e for c in _conjuncts(f) for e in self.split(c)]
        # preprocessing cost grows with the block
        self.tick(1 + len(conjuncts) // 4)
        self.witness = None
        res = self.block(variables, conjuncts, a)
        if res is True and self.witness:
            self.witness = {x: v for x, v in self.witness.items()
                            if x in variables and x not in self.auxiliary}
        if res is False and unbounded and not self.refute:
            # no witness found: only a refutation-enabled evaluator says False
            self.truncated = True
            return None
        return res

    def block(self, pending: list[str], conjuncts: list[Formula], a: dict[str, str]):
        self.tick(1 + len(conjuncts) // 16)
        open_vars = [x for x in pending if x not in a]
        open_set = frozenset(open_vars)
        undecided = False
        rest = []
        for c in conjuncts:
            if not open_set.isdisjoint(_fv(c)):
                rest.append(c)
                continue
            r = self.ev(c, a)
            if r is False:
                return False
            if r is None:
                undecided = True
        if not open_vars:
            if undecided:
                return None
            self.witness = {x: a[x] for x in pending}
            return True
        result = False if not undecided else None

        def fold(r):
            nonlocal result
            if r is True:
                return True
            if r is None:
                result = None
            return False

        nested = next((c for c in rest if isinstance(c, (Exists, BoundedExists))), None)
        if nested is not None:
            return fold(self.lift(pending, rest, nested, a)) or result

        decoded = self.decode_step(open_vars, rest, a)
        if decoded is False:
            return result
        if decoded is not None:
            new_rest, values = decoded
            r = self.block(pending, new_rest, {**a, **values})
            return fold(r) or result

        guard = self.find_guard(rest, open_vars, a)
        if guard is not None:
            pattern, targets = guard
            seen = set()
            for target in targets:
                for ext in _match(pattern, target, dict(a)):
                    key = tuple(sorted(ext.items()))
                    if key in seen:
                        continue
                    seen.add(key)
                    self.tick()
                    if fold(self.block(pending, rest, ext)):
                        return True
            return result

        branch = next((c for c in rest if isinstance(c, Or)), None)
        if branch is not None:
            others = [c for c in rest if c is not branch]

            def attempt(side):
                expanded = [e for c in _conjuncts(side) for e in self.split(c)]
                return self.block(pending, others + expanded, a)

            return fold(self.either([lambda side=side: attempt(side)
                                     for side in (branch.left, branch.right)])) or result

        from .normalform import expanded_size

        sized = [(expanded_size(c.left) + expanded_size(c.right), i, c)
                 for i, c in enumerate(rest) if isinstance(c, Eq)]
        eq = min(sized)[2] if sized and min(sized)[0] <= NIELSEN_MAX_SYMBOLS else None
        if eq is not None:
            known = {x: v for x, v in a.items()}
            weq = wordeq.WordEquation(
                _instantiate(wordeq.flatten_term(eq.left), known),
                _instantiate(wordeq.flatten_term(eq.right), known))
            sols = wordeq.Solutions(weq, self.budget,
                                    max_nodes=max(1000, self.max_steps - self.steps))
            others = [c for c in rest if c is not eq]
            counted = 0
            for sig, nonempty in sols:
                self.tick(1 + sols.nodes - counted)
                counted = sols.nodes
                determined = {x: w for x, w in sig.items() if all(wordeq.is_const(s) for s in w)}
                free = {s for w in sig.values() for s in w if not wordeq.is_const(s)}
                ext = {**a, **{x: "".join(w) for x, w in determined.items()}}
                mapping = {x: _term_of(w) for x, w in sig.items() if x not in determined}
                new_conj = [_subst_formula(c, mapping) for c in others]
                new_conj += [Not(Eq(Var(x), Empty())) for x in sorted(free) if x in nonempty]
                new_pending = ([x for x in pending if x not in mapping or x in free]
                               + sorted(free - set(pending)))
                for x in free:
                    ext.pop(x, None)
                r = self.block(new_pending, new_conj, ext)
                if r is True:
                    # rebuild the original block variables from the free ones
                    inner = dict(self.witness or {})
                    w = dict(inner)
                    for x in mapping:
                        word = sig[x]
                        w[x] = "".join(s if wordeq.is_const(s) else inner.get(s, "") for s in word)
                    self.witness = w
                    return True
                fold(r)
            if sols.truncated:
                self.truncated = True
                result = None
            return result

        # blind enumeration of the first open variable, proposal first
        x = open_vars[0]
        self.truncated = True
        proposal = self.hints(x, a) if self.hints is not None else None
        if proposal is not None:
            if len(proposal) > 4096:
                self.tick(len(proposal) // 4096)
            if fold(self.block(pending, rest, {**a, x: proposal})):
                return True
        for v in all_strings(self.budget):
            if v != proposal and fold(self.block(pending, rest, {**a, x: v})):
                return True
        return None

    def split(self, f: Formula) -> list[Formula]:
        return _split(f) if self.decode else [f]

    def lift(self, pending, rest, nested, a):
        """Pull an existential conjunct's variable into the current block."""
        from .logic import fresh_var, substitute

        var, body = nested.var, nested.body
        taken = set(pending) | set(a) | set().union(*(_fv(c) for c in rest))
        if var in taken:
            new = fresh_var(taken | _fv(body), prefix=var + "_")
            body = substitute(body, var, Var(new))
            var = new
        extra = [Rel(Var(var), nested.bound)] if isinstance(nested, BoundedExists) else []
        extra += [e for c in _conjuncts(body) for e in self.split(c)]
        self.auxiliary.add(var)
        return self.block(pending + [var], [c for c in rest if c is not nested] + extra, a)

    def decode_step(self, open_vars, rest, a):
        """Variables that no open conjunct needs, and recognized gadgets.

        Returns (new conjuncts, variables to set to the empty string) or None.
        """
        from .logic import Fresh
        from .normalform import decode_gadgets

        changed = False
        local = set(open_vars)
        decoded = None
        if self.decode:
            decoded = decode_gadgets(rest, local, Fresh(local | set(a), prefix="_p"))
        idle: set[str] = set()
        if decoded is not None:
            rest, idle = decoded
            self.auxiliary |= idle
            changed = True
        # a variable occurring only as the left side of its own bound is free
        busy: set[str] = set()
        for c in rest:
            hit = local & _fv(c)
            if (isinstance(c, Rel) and isinstance(c.left, Var)
                    and c.left.name not in term_vars(c.right)):
                hit = hit - {c.left.name}
            busy |= hit
        free_now = local - busy - idle
        if free_now:
            idle |= free_now
            changed = True
        values = {x: "" for x in idle}
        if not changed:
            upper = self.upper_values(rest, local, a)
            if upper is False:
                return False
            values.update(upper)
            changed = bool(upper)
        return (rest, values) if changed else None

    def upper_values(self, rest, local, a):
        """Values for variables constrained only from below.

        A variable u whose every occurrence is as the whole right side of
        ``t <: u`` (with t built from known strings and other such
        variables) can take the concatenation of the lower values in B,
        and the longest of them in D, where they must be prefixes of one
        another; False when that fails.
        """
        cand = set(local)
        touching = [(c, cand & _fv(c)) for c in rest]
        touching = [(c, hit) for c, hit in touching if hit]
        occ: dict[str, list[int]] = {}
        for i, (c, hit) in enumerate(touching):
            for x in hit:
                occ.setdefault(x, []).append(i)
        bad = [False] * len(touching)
        queue: list[str] = []

        def condemn(i):
            if not bad[i]:
                bad[i] = True
                queue.extend(touching[i][1])

        for i, (c, hit) in enumerate(touching):
            if not (isinstance(c, Rel) and isinstance(c.right, Var) and c.right.name in hit
                    and term_vars(c.left) & local <= hit - {c.right.name}):
                condemn(i)
        while queue:
            x = queue.pop()
            if x in cand:
                cand.discard(x)
                for i in occ.get(x, ()):
                    condemn(i)
        if not cand:
            return {}
        lows: dict[str, list[Term]] = {u: [] for u in cand}
        dependents: dict[str, list[str]] = {u: [] for u in cand}
        waiting = {u: 0 for u in cand}
        for i, (c, hit) in enumerate(touching):
            if not bad[i]:
                u = c.right.name
                lows[u].append(c.left)
                for x in hit - {u}:
                    dependents[x].append(u)
                    waiting[u] += 1
        order: list[str] = []
        ready = sorted(u for u in cand if not waiting[u])
        while ready:
            u = ready.pop()
            order.append(u)
            for w in dependents[u]:
                waiting[w] -= 1
                if not waiting[w]:
                    ready.append(w)
        if len(order) != len(cand):
            return {}
        known = dict(a)
        out = {}
        for u in order:
            vals = []
            for t in lows[u]:
                v = self.term(t, known)
                if v not in vals:
                    vals.append(v)
            if self.structure is Structure.B:
                value = "".join(vals)
            else:
                value = max(vals, key=len, default="")
                if not all(value.startswith(v) for v in vals):
                    return False
            known[u] = out[u] = value
        return out

    def find_guard(self, conjuncts, open_vars, a):
        """A positive atom with one side known: (pattern, candidate strings)."""
        best = None
        known_vars = a.keys()  # open variables are never in `a`
        for c in conjuncts:
            if not isinstance(c, ATOMS):
                continue
            l_open = not term_vars(c.left) <= known_vars
            r_open = not term_vars(c.right) <= known_vars
            if isinstance(c, Eq) and l_open != r_open:
                pat, known = (c.left, c.right) if l_open else (c.right, c.left)
                cand = (1, pat, [self.term(known, a)])
            elif isinstance(c, Rel) and l_open and not r_open:
                k = self.term(c.right, a)
                cand = (1 + len(k), c.left, self.below(k))
            else:
                continue
            if best is None or cand[0] < best[0]:
                best = cand
                if cand[0] == 1:
                    break
        if best is None:
            return None
        return wordeq.flatten_term(best[1]), best[2]


def _split(f: Formula) -> list[Formula]:
    """A merged equation stands for the conjunction of its components."""
    if not isinstance(f, Eq):
        return [f]
    from .normalform import split_all

    return split_all(f)


def _instantiate(w: wordeq.Word, known: dict[str, str]) -> wordeq.Word:
    out: list[str] = []
    for s in w:
        if not wordeq.is_const(s) and s in known:
            out.extend(known[s])
        else:
            out.append(s)
    return tuple(out)


def _term_of(w: wordeq.Word) -> Term:
    t: Term = Empty()
    for s in w:
        t = Concat(t, Zero() if s == "0" else One() if s == "1" else Var(s))
    return t


def _subst_formula(f: Formula, mapping: dict[str, Term]) -> Formula:
    from .logic import BINARY

    if not mapping:
        return f
    if isinstance(f, ATOMS):
        return type(f)(subst_terms(f.left, mapping), subst_terms(f.right, mapping))
    if isinstance(f, Not):
        return Not(_subst_formula(f.body, mapping))
    if isinstance(f, BINARY):
        return type(f)(_subst_formula(f.left, mapping), _subst_formula(f.right, mapping))
    inner = {k: v for k, v in mapping.items() if k != f.var}
    clash = any(f.var in term_vars(v) for v in inner.values())
    if clash:
        from .logic import fresh_var, substitute
        # rename the binder apart before pushing the substitution under it
        avoid = set().union(*(term_vars(v) for v in inner.values())) | set(inner) | _fv(f.body)
        new = fresh_var(avoid, prefix=f.var + "_")
        f = type(f)(f.var, f.bound, f.body) if isinstance(f, BOUNDED) else f
        body = substitute(f.body, f.var, Var(new))
        f = (type(f)(new, f.bound, body) if isinstance(f, BOUNDED) else type(f)(new, body))
    body = _subst_formula(f.body, inner)
    if isinstance(f, BOUNDED):
        return type(f)(f.var, subst_terms(f.bound, mapping), body)
    return type(f)(f.var, body)


_FV_CACHE: dict[int, tuple[Formula, frozenset]] = {}


def _fv(f: Formula) -> frozenset:
    hit = _FV_CACHE.get(id(f))
    if hit is not None and hit[0] is f:
        return hit[1]
    out = frozenset(free_vars(f))
    if len(_FV_CACHE) > 100_000:
        _FV_CACHE.clear()
    _FV_CACHE[id(f)] = (f, out)
    return out


def evaluate(phi: Formula, structure: Structure | str, assignment: dict[str, str] | None = None,
             budget: int = 8, max_steps: int = 200_000, refute: bool = False,
             hints=None, decode: bool = True) -> Verdict:
    """Three-valued truth of `phi` in B or D under `assignment`.

    An unbounded existential without a witness is unknown unless `refute`
    is set; then the search is allowed to answer False when it has
    provably exhausted all candidates (every branch was cut by a known
    string or closed by the equation solver).

    `hints(var, assignment)` may propose a value for an existential
    variable; proposals are tried first and checked like any candidate.

    With `decode` the search recognizes merged equations and
    prefix-disjunction blocks (as produced by `normalform`) and works on
    the conjunctions and disjunctions they encode.

    For a sentence whose outermost quantifiers are existential, the verdict
    carries the witness found for them.
    """
    return _with_deep_stack(_evaluate, phi, structure, dict(assignment or {}), budget,
                            max_steps, refute, hints, decode)


_DEEP = threading.local()
_DEEP_STACK_BYTES = 512 * 1024 * 1024


def _with_deep_stack(fn, *args):
    """Run `fn` on a thread with a large stack: the block search recurses
    once per bound variable, and normal forms bind hundreds."""
    if getattr(_DEEP, "active", False):
        return fn(*args)
    box: dict = {}

    def run():
        _DEEP.active = True
        try:
            box["value"] = fn(*args)
        except BaseException as exc:  # re-raised in the caller
            box["error"] = exc

    old_size = threading.stack_size(_DEEP_STACK_BYTES)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 200_000))
    try:
        worker = threading.Thread(target=run)
        worker.start()
        worker.join()
    finally:
        threading.stack_size(old_size)
        sys.setrecursionlimit(old_limit)
    if "error" in box:
        raise box["error"]
    return box["value"]


def _evaluate(phi, structure, a, budget, max_steps, refute, hints, decode) -> Verdict:
    ev = Evaluator(structure, budget, max_steps, refute, hints, decode)
    if isinstance(phi, (Exists, BoundedExists)):
        try:
            res = ev.exists_block(phi, a)
        except _OutOfEffort:
            res = None
        witness = dict(ev.witness or {}) if res is True else {}
        witness = {k: v for k, v in witness.items() if k not in a}
        return Verdict(res, budget, witness)
    try:
        res = ev.ev(phi, a)
    except _OutOfEffort:
        res = None
    return Verdict(res, budget)


def decide_sigma_0mk(phi: Formula, structure: Structure | str) -> bool:
    """Exact truth of a Sigma(0,m,k) sentence: every quantifier is bounded."""
    c = classify(phi)
    if c is None:
        raise ValueError("not a Sigma-formula")
    if c.n:
        raise ValueError(f"sentence has {c.n} unbounded existential quantifiers")
    from .logic import free_vars

    if free_vars(phi):
        raise ValueError(f"not a sentence: free {sorted(free_vars(phi))}")
    res = Evaluator(structure, 0, max_steps=10**12).ev(phi, {})
    assert res is not None
    return res


def dual(phi: Formula) -> Formula:
    """A Sigma-formula equivalent to the negation of a Sigma(0,m,k) formula."""
    return negate(phi)
