"""Prenex normal forms with a single equation as matrix.

Every construction is equational: conjunctions of equations are merged
into one equation by ``s1 0 s2 s1 1 s2 = t1 0 t2 t1 1 t2``, disjunctions go
through the prefix-disjunction gadget, and negated atoms are expanded by
first-difference case splits.  Merged terms share their subterm objects,
so the output is a DAG whose printed form can be very large.
"""

from __future__ import annotations

import heapq
import sys
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .logic import (ATOMS, And, BoundedExists, BoundedForall, Concat, E, Eq,
                    Exists, Fresh, Formula, Not, ONE, Or, Rel, SigmaClass,
                    Term, Var, ZERO, all_vars, cat, classify, free_vars,
                    substitute, term_vars)
from .semantics import Structure, TooLong, UnboundVariable, eval_term, evaluate
from .strings import prefixes, substrings

EXISTS, BEXISTS, BFORALL = "exists", "bexists", "bforall"

# gadget witnesses are only proposed for inputs up to this length
GADGET_INPUT_LIMIT = 512


Rule = Callable[[dict, int, dict], "str | None"]


@dataclass(frozen=True)
class Quant:
    kind: str
    var: str
    bound: Term | None = None
    # computes a witness for an existential from the values of earlier variables
    rule: Rule | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class PrenexNormalForm:
    prefix: tuple[Quant, ...]
    matrix: Eq
    # prefix before the B commutations, and the variables each joined variable covers
    origin: tuple[Quant, ...] | None = field(default=None, compare=False, repr=False)
    members: dict | None = field(default=None, compare=False, repr=False)

    def to_formula(self) -> Formula:
        f: Formula = self.matrix
        for q in reversed(self.prefix):
            if q.kind == EXISTS:
                f = Exists(q.var, f)
            elif q.kind == BEXISTS:
                f = BoundedExists(q.var, q.bound, f)
            else:
                f = BoundedForall(q.var, q.bound, f)
        return f

    def shape(self) -> SigmaClass:
        return SigmaClass(sum(q.kind == EXISTS for q in self.prefix),
                          sum(q.kind == BEXISTS for q in self.prefix),
                          sum(q.kind == BFORALL for q in self.prefix))

    def then(self, other: "PrenexNormalForm", matrix: Eq) -> "PrenexNormalForm":
        return PrenexNormalForm(self.prefix + other.prefix, matrix)


def _ex(vars_: Sequence[str], matrix: Eq, inner: Sequence[Quant] = ()) -> PrenexNormalForm:
    return PrenexNormalForm(tuple(Quant(EXISTS, v) for v in vars_) + tuple(inner), matrix)


def _group(vars_: Sequence[str], inputs: Sequence[Term],
           solve: Callable[..., "Sequence[str] | None"]) -> tuple[Quant, ...]:
    """Existential quantifiers whose witnesses `solve` computes jointly from
    the values of `inputs`."""
    tag = object()  # the memo is shared by all groups of a walk

    def rule_for(i):
        def rule(values, budget, memo):
            try:
                args = tuple(eval_term(t, values, memo, limit=GADGET_INPUT_LIMIT) for t in inputs)
            except (UnboundVariable, TooLong):
                return None
            key = (tag, args)
            if key not in memo:
                memo[key] = solve(*args)
            got = memo[key]
            return None if got is None else got[i]
        return rule

    return tuple(Quant(EXISTS, v, None, rule_for(i)) for i, v in enumerate(vars_))


# ------------------------------------------------- merging equations


def merge_conj(e1: Eq, e2: Eq) -> Eq:
    """One equation equivalent to the conjunction of two (both structures)."""
    s1, t1, s2, t2 = e1.left, e1.right, e2.left, e2.right
    return Eq(cat(s1, ZERO, s2, s1, ONE, s2), cat(t1, ZERO, t2, t1, ONE, t2))


def merge_all(eqs: Sequence[Eq]) -> Eq:
    """Merge a nonempty list of equations, lightest pairs first.

    Merging doubles both operands, so heavy equations are kept near the
    root (Huffman order on symbol counts); ties keep list order.
    """
    heap = [(_weight(e), i, e) for i, e in enumerate(eqs)]
    heapq.heapify(heap)
    n = len(heap)
    while len(heap) > 1:
        w1, _, e1 = heapq.heappop(heap)
        w2, _, e2 = heapq.heappop(heap)
        heapq.heappush(heap, (2 * (w1 + w2) + 2, n, merge_conj(e1, e2)))
        n += 1
    return heap[0][2]


def _weight(e: Eq) -> int:
    return expanded_size(e.left) + expanded_size(e.right)


def split_merged(e: Eq) -> tuple[Eq, Eq] | None:
    """Inverse of `merge_conj` on its exact output shape, else None."""
    parts = []
    for side in (e.left, e.right):
        p = _merged_parts(side)
        if p is None:
            return None
        parts.append(p)
    (s1, s2), (t1, t2) = parts
    return Eq(s1, t1), Eq(s2, t2)


def _merged_parts(t: Term) -> tuple[Term, Term] | None:
    # shape: ((((a * 0) * b) * a) * 1) * b
    try:
        b2, rest = t.right, t.left
        one, rest = rest.right, rest.left
        a2, rest = rest.right, rest.left
        b1, rest = rest.right, rest.left
        zero, a1 = rest.right, rest.left
    except AttributeError:
        return None
    if one != ONE or zero != ZERO:
        return None
    if not (_same(a1, a2) and _same(b1, b2)):
        return None
    return a1, b1


def _same(a: Term, b: Term) -> bool:
    if a is b:
        return True
    stack = [(a, b)]
    seen = set()
    while stack:
        x, y = stack.pop()
        if x is y or (id(x), id(y)) in seen:
            continue
        seen.add((id(x), id(y)))
        if type(x) is not type(y):
            return False
        if isinstance(x, Concat):
            stack.append((x.left, y.left))
            stack.append((x.right, y.right))
        elif isinstance(x, Var) and x.name != y.name:
            return False
    return True


def split_all(e: Eq) -> list[Eq]:
    """Fully undo nested merges: the list of merged component equations."""
    out, stack = [], [e]
    while stack:
        cur = stack.pop()
        parts = split_merged(cur)
        if parts is None:
            out.append(cur)
        else:
            stack.append(parts[1])
            stack.append(parts[0])
    return out


# ---------------------------------------------- empty-or-empty gadget


def prefix_gadget(u: Term, w: Term, fresh: Fresh) -> tuple[list[str], list[Eq]]:
    """Existential variables and equations expressing  u = e  or  w = e.

    uw = wu together with the formula psi(u, w) that needs y1y2 = 0 and
    y3y4 = 1 to commute with both strings.
    """
    ys = fresh.many(4)
    y1, y2, y3, y4 = (Var(v) for v in ys)
    eqs = [
        Eq(cat(u, w), cat(w, u)),
        Eq(cat(y1, y2), ZERO),
        Eq(cat(y3, y4), ONE),
        Eq(cat(u, y1, w, y2), cat(w, y2, u, y1)),
        Eq(cat(u, y3, w, y4), cat(w, y4, u, y3)),
    ]
    return ys, eqs


def or_prefix_to_eq(s1: Term, t1: Term, s2: Term, t2: Term,
                    fresh: Fresh | None = None) -> PrenexNormalForm:
    """E v1..vk (s = t) equivalent to  s1 prefix-of t1  or  s2 prefix-of t2."""
    fresh = fresh or Fresh(term_vars(s1) | term_vars(t1) | term_vars(s2) | term_vars(t2))
    xs = fresh.many(6)
    x1, x2, x3, x4, x5, x6 = (Var(x) for x in xs)
    ys, gadget = prefix_gadget(x2, x5, fresh)
    eqs = [Eq(s1, cat(x1, x2)), Eq(t1, cat(x1, x3)),
           Eq(s2, cat(x4, x5)), Eq(t2, cat(x4, x6))] + gadget
    return PrenexNormalForm(_group(xs + ys, (s1, t1, s2, t2), _or_prefix_witness),
                            merge_all(eqs))


def _or_prefix_witness(s1, t1, s2, t2):
    if t1.startswith(s1):
        return (s1, "", t1[len(s1):], "", s2, t2, "", "0", "", "1")
    if t2.startswith(s2):
        return ("", s1, t1, s2, "", t2[len(s2):], "0", "", "1", "")
    return None


# ------------------------------------------- disjunctions, inequations


def _fresh_for(fresh, *things) -> Fresh:
    if fresh is not None:
        return fresh
    names: set[str] = set()
    for t in things:
        names |= term_vars(t.left) | term_vars(t.right) if isinstance(t, Eq) else term_vars(t)
    return Fresh(names)


def or_eq_to_eq(e1: Eq, e2: Eq, structure: Structure | str = Structure.D,
                fresh: Fresh | None = None) -> PrenexNormalForm:
    """E-prefixed equation equivalent to  e1 or e2.

    Each equality is split into two prefix facts and the disjunction is
    distributed into four prefix disjunctions.  The construction only uses
    equations, so the same output serves both structures (in B a prefix
    fact  x prefix-of y  is the equation  x v = y).
    """
    Structure.of(structure)
    fresh = _fresh_for(fresh, e1, e2)
    s1, t1, s2, t2 = e1.left, e1.right, e2.left, e2.right
    parts = [or_prefix_to_eq(s1, t1, s2, t2, fresh),
             or_prefix_to_eq(s1, t1, t2, s2, fresh),
             or_prefix_to_eq(t1, s1, s2, t2, fresh),
             or_prefix_to_eq(t1, s1, t2, s2, fresh)]
    prefix = tuple(q for p in parts for q in p.prefix)
    return PrenexNormalForm(prefix, merge_all([p.matrix for p in parts]))


def pnf_and(p: PrenexNormalForm, q: PrenexNormalForm) -> PrenexNormalForm:
    return p.then(q, merge_conj(p.matrix, q.matrix))


def pnf_or(p: PrenexNormalForm, q: PrenexNormalForm, fresh: Fresh) -> PrenexNormalForm:
    r = or_eq_to_eq(p.matrix, q.matrix, fresh=fresh)
    return PrenexNormalForm(p.prefix + q.prefix + r.prefix, r.matrix)


def pnf_or_all(ps: Sequence[PrenexNormalForm], fresh: Fresh) -> PrenexNormalForm:
    if len(ps) == 1:
        return ps[0]
    mid = (len(ps) + 1) // 2
    return pnf_or(pnf_or_all(ps[:mid], fresh), pnf_or_all(ps[mid:], fresh), fresh)


def _eq(e: Eq) -> PrenexNormalForm:
    return PrenexNormalForm((), e)


def neq_to_eq(e: Eq, structure: Structure | str = Structure.D,
              fresh: Fresh | None = None) -> PrenexNormalForm:
    """E-prefixed equation equivalent to  s != t  (both structures).

    Two strings differ iff one extends the other by a letter or they
    disagree at some first position.
    """
    Structure.of(structure)
    fresh = _fresh_for(fresh, e)
    s, t = e.left, e.right
    xs = fresh.many(3)
    x, y, z = (Var(v) for v in xs)
    quants = _group(xs, (s, t), _first_difference)
    disjuncts = [
        _eq(Eq(s, cat(t, ZERO, x))),
        _eq(Eq(s, cat(t, ONE, x))),
        _eq(Eq(t, cat(s, ZERO, x))),
        _eq(Eq(t, cat(s, ONE, x))),
        _eq(merge_conj(Eq(s, cat(x, ONE, y)), Eq(t, cat(x, ZERO, z)))),
        _eq(merge_conj(Eq(s, cat(x, ZERO, y)), Eq(t, cat(x, ONE, z)))),
    ]
    body = pnf_or_all(disjuncts, fresh)
    return PrenexNormalForm(quants + body.prefix, body.matrix)


def _first_difference(s, t):
    """x, y, z with s, t continuing x by different letters, or one extending
    the other by x."""
    if s == t:
        return None
    if s.startswith(t):
        return (s[len(t) + 1:], "", "")
    if t.startswith(s):
        return (t[len(s) + 1:], "", "")
    i = next(i for i, (a, b) in enumerate(zip(s, t)) if a != b)
    return (s[:i], s[i + 1:], t[i + 1:])


def _differ_at(s1, t1):
    i = next((i for i, (a, b) in enumerate(zip(s1, t1)) if a != b), None)
    if i is None:
        return None
    return (t1[:i], t1[i + 1:], s1[i + 1:])


# ---------------------------------------------------- prefix relation


def prefix_to_eq(s1: Term, t1: Term, fresh: Fresh | None = None) -> PrenexNormalForm:
    fresh = fresh or Fresh(term_vars(s1) | term_vars(t1))
    v = fresh()
    rest = lambda a, b: (b[len(a):],) if b.startswith(a) else None
    return PrenexNormalForm(_group([v], (s1, t1), rest), Eq(cat(s1, Var(v)), t1))


def _differ_somewhere(s1: Term, t1: Term, fresh: Fresh) -> PrenexNormalForm:
    """E x y z [(t1 = x0y & s1 = x1z) | (t1 = x1y & s1 = x0z)]"""
    xs = fresh.many(3)
    x, y, z = (Var(v) for v in xs)
    body = pnf_or(_eq(merge_conj(Eq(t1, cat(x, ZERO, y)), Eq(s1, cat(x, ONE, z)))),
                  _eq(merge_conj(Eq(t1, cat(x, ONE, y)), Eq(s1, cat(x, ZERO, z)))), fresh)
    return PrenexNormalForm(_group(xs, (s1, t1), _differ_at) + body.prefix, body.matrix)


def nonprefix_to_eq(s1: Term, t1: Term, fresh: Fresh | None = None) -> PrenexNormalForm:
    """E-prefixed equation equivalent to  s1 is not a prefix of t1.

    Either t1 is a proper prefix of s1, or the two disagree at a position.
    """
    fresh = fresh or Fresh(term_vars(s1) | term_vars(t1))
    proper = pnf_and(prefix_to_eq(t1, s1, fresh), neq_to_eq(Eq(t1, s1), fresh=fresh))
    return pnf_or(proper, _differ_somewhere(s1, t1, fresh), fresh)


# ------------------------------------------------- substring relation


def substr_to_eq(s1: Term, t1: Term, fresh: Fresh | None = None) -> PrenexNormalForm:
    fresh = fresh or Fresh(term_vars(s1) | term_vars(t1))
    v1, v2 = fresh.many(2)

    def split(a, b):
        i = b.find(a)
        return None if i < 0 else (b[:i], b[i + len(a):])

    return PrenexNormalForm(_group([v1, v2], (s1, t1), split),
                            Eq(t1, cat(Var(v1), s1, Var(v2))))


def nonsubstr_to_formula(s1: Term, t1: Term, fresh: Fresh | None = None) -> PrenexNormalForm:
    """(A v <: t1)(E ...)(s = t) equivalent in B to  s1 is not a substring of t1.

    For every substring v of t1, v s1 is not a prefix of t1: either t1 is
    a proper prefix of v s1 or the two disagree at some position.
    """
    fresh = fresh or Fresh(term_vars(s1) | term_vars(t1))
    v = fresh()
    vs1 = cat(Var(v), s1)
    x = fresh()
    rest = lambda a, b: (b[len(a):],) if b.startswith(a) else None
    longer = pnf_and(PrenexNormalForm(_group([x], (t1, vs1), rest), Eq(cat(t1, Var(x)), vs1)),
                     neq_to_eq(Eq(Var(x), E), fresh=fresh))
    alpha = pnf_or(longer, _differ_somewhere(vs1, t1, fresh), fresh)
    return PrenexNormalForm((Quant(BFORALL, v, t1),) + alpha.prefix, alpha.matrix)


# ------------------------------------------------------- normalization


def standardize_apart(phi: Formula, used: set[str] | None = None) -> Formula:
    """Rename bound variables so that all binders are distinct and none
    coincides with a free variable."""
    used = set(free_vars(phi)) if used is None else used

    def go(f: Formula) -> Formula:
        if isinstance(f, ATOMS):
            return f
        if isinstance(f, Not):
            return Not(go(f.body))
        if isinstance(f, (And, Or)):
            return type(f)(go(f.left), go(f.right))
        if isinstance(f, (Exists, BoundedExists, BoundedForall)):
            var, body = f.var, f.body
            if var in used:
                new = Fresh(used | all_vars(body), prefix=var + "_")()
                body = substitute(body, var, Var(new))
                var = new
            used.add(var)
            body = go(body)
            if isinstance(f, Exists):
                return Exists(var, body)
            return type(f)(var, f.bound, body)
        raise ValueError(f"not a Sigma-formula: {type(f).__name__}")

    return go(phi)


def _normalize(phi: Formula, structure: Structure, fresh: Fresh) -> PrenexNormalForm:
    if isinstance(phi, Eq):
        return _eq(phi)
    if isinstance(phi, Rel):
        if structure is Structure.D:
            return prefix_to_eq(phi.left, phi.right, fresh)
        return substr_to_eq(phi.left, phi.right, fresh)
    if isinstance(phi, Not):
        a = phi.body
        if isinstance(a, Eq):
            return neq_to_eq(a, structure, fresh)
        if structure is Structure.D:
            return nonprefix_to_eq(a.left, a.right, fresh)
        return nonsubstr_to_formula(a.left, a.right, fresh)
    if isinstance(phi, And):
        left = _normalize(phi.left, structure, fresh)
        return pnf_and(left, _normalize(phi.right, structure, fresh))
    if isinstance(phi, Or):
        left = _normalize(phi.left, structure, fresh)
        return pnf_or(left, _normalize(phi.right, structure, fresh), fresh)
    body = _normalize(phi.body, structure, fresh)
    if isinstance(phi, BoundedForall):
        return PrenexNormalForm((Quant(BFORALL, phi.var, phi.bound),) + body.prefix, body.matrix)
    rule = _witness_rule(phi, structure)
    if isinstance(phi, Exists):
        q = (Quant(EXISTS, phi.var, None, rule),)
    elif structure is Structure.B:
        q = (Quant(BEXISTS, phi.var, phi.bound, rule),)
    else:
        # in D a bounded existential becomes  E x (x prefix-of t  &  body)
        guard = prefix_to_eq(Var(phi.var), phi.bound, fresh)
        both = pnf_and(guard, body)
        return PrenexNormalForm((Quant(EXISTS, phi.var, None, rule),) + both.prefix, both.matrix)
    return PrenexNormalForm(q + body.prefix, body.matrix)


def _witness_rule(phi: Formula, structure: Structure) -> Rule:
    needed = sorted(free_vars(phi))
    memo: dict = {}

    def rule(values, budget, _terms):
        if any(x not in values for x in needed):
            return None
        key = (tuple(values[x] for x in needed), budget)
        if key not in memo:
            v = evaluate(phi, structure, {x: values[x] for x in needed}, budget=budget)
            memo[key] = v.witness.get(phi.var) if v.value else None
        return memo[key]

    rule.essential = True
    return rule


def _prepare(phi: Formula) -> tuple[Formula, Fresh]:
    if classify(phi) is None:
        raise ValueError("not a Sigma-formula")
    phi = standardize_apart(phi)
    return phi, Fresh(all_vars(phi))


def normalize_D(phi: Formula) -> PrenexNormalForm:
    """Equivalent-in-D prenex form with one equation as matrix.

    Without bounded universal quantifiers in `phi` the prefix is purely
    existential and unbounded.
    """
    phi, fresh = _prepare(phi)
    return _normalize(phi, Structure.D, fresh)


def normalize_B(phi: Formula) -> PrenexNormalForm:
    """Equivalent-in-B prenex form with at most one unbounded quantifier,
    which then leads the prefix."""
    phi, fresh = _prepare(phi)
    nf = _normalize(phi, Structure.B, fresh)
    members: dict[str, tuple[str, ...]] = {}
    return PrenexNormalForm(commute_B(nf.prefix, fresh, members), nf.matrix,
                            origin=nf.prefix, members=members)


def normalize(phi: Formula, structure: Structure | str) -> PrenexNormalForm:
    s = Structure.of(structure)
    return normalize_B(phi) if s is Structure.B else normalize_D(phi)


# -------------------------------------------- commutation schemata (B)


def swap_bounded_exists(prefix: list[Quant], j: int, fresh: Fresh,
                        members: dict | None = None) -> list[Quant]:
    """(E x <: t)(E y) a  ==>  (E y)(E x <: t) a"""
    return prefix[:j - 1] + [prefix[j], prefix[j - 1]] + prefix[j + 1:]


def pull_through_forall(prefix: list[Quant], j: int, fresh: Fresh,
                        members: dict | None = None) -> list[Quant]:
    """(A x <: t)(E y) a  ==>  (E z)(A x <: t)(E y <: z) a"""
    z = fresh()
    y = prefix[j]
    if members is not None:
        members[z] = (y.var,)
    return (prefix[:j - 1] + [Quant(EXISTS, z), prefix[j - 1],
                              Quant(BEXISTS, y.var, Var(z), y.rule)] + prefix[j + 1:])


def join_exists(prefix: list[Quant], j: int, fresh: Fresh,
                members: dict | None = None) -> list[Quant]:
    """(E x)(E y) a  ==>  (E z)(E x <: z)(E y <: z) a"""
    z = fresh()
    x, y = prefix[j - 1], prefix[j]
    if members is not None:
        members[z] = (x.var, y.var)
    return (prefix[:j - 1] + [Quant(EXISTS, z), Quant(BEXISTS, x.var, Var(z), x.rule),
                              Quant(BEXISTS, y.var, Var(z), y.rule)] + prefix[j + 1:])


def commute_B(prefix: Sequence[Quant], fresh: Fresh,
              members: dict | None = None) -> tuple[Quant, ...]:
    """Move unbounded existentials to the front and fuse them into one.

    Each unbounded existential, taken left to right, is bubbled to the
    front by the three schemata above.  Swaps happen in place; the
    schemata that add quantifiers splice the list.
    """
    prefix = list(prefix)
    start = 1
    while start < len(prefix):
        if prefix[start].kind != EXISTS:
            start += 1
            continue
        size, j = len(prefix), start
        while j > 0:
            before = prefix[j - 1].kind
            if before == BEXISTS:
                prefix[j - 1], prefix[j] = prefix[j], prefix[j - 1]
                j -= 1
            elif before == BFORALL:
                prefix[j - 1:j + 1] = pull_through_forall(prefix[j - 1:j + 1], 1, fresh, members)
                j -= 1
            else:
                prefix[j - 1:j + 1] = join_exists(prefix[j - 1:j + 1], 1, fresh, members)
                j = 0
        start += len(prefix) - size + 1
    return tuple(prefix)


# ------------------------------------------------------ witness hints


class Hints:
    """Witness proposals for the existential variables of a normal form.

    Values come from the constructions themselves: each gadget knows how to
    satisfy its equations once the strings it talks about are known, and a
    variable of the input formula gets the witness found by evaluating the
    input subformula.  A joined variable from the B commutations gets the
    concatenation of every value its covered variables take.  The
    evaluator treats these only as candidates and checks them.
    """

    def __init__(self, nf: PrenexNormalForm, structure: Structure | str, budget: int = 12,
                 gadgets: bool = False):
        self.final = nf.prefix
        self.old = tuple(q for q in (nf.origin or nf.prefix)
                         if gadgets or q.kind == BFORALL or getattr(q.rule, "essential", False))
        kept = {q.var for q in self.old}
        self.members = {}
        for z, ms in (nf.members or {}).items():  # joined variables come in creation order
            keep: tuple[str, ...] = ()
            for m in ms:
                # flatten joins of joins down to the original variables
                for leaf in self.members.get(m, (m,) if m in kept else ()):
                    if leaf not in keep:
                        keep += (leaf,)
            if keep:
                self.members[z] = keep
        self.pos = {q.var: i for i, q in enumerate(self.final)}
        self.existential = {q.var for q in self.final if q.kind != BFORALL}
        self.below = substrings if Structure.of(structure) is Structure.B else prefixes
        self.budget = budget
        self.memo: dict = {}
        self.walks: dict = {}

    def _key(self, a):
        return tuple(sorted((k, v) for k, v in a.items() if k not in self.existential))

    def __call__(self, var: str, a: dict[str, str]) -> str | None:
        if var not in self.pos or not (var in self.members or any(q.var == var for q in self.old)):
            return None
        key = (var, self._key(a))
        if key not in self.memo:
            self.memo[key] = self._value(var, a)
        return self.memo[key]

    def _walk(self, a):
        """Witnesses along the original prefix, up to the first universal
        variable without a value in `a`."""
        key = self._key(a)
        if key not in self.walks:
            values = {k: v for k, v in a.items() if k not in self.existential}
            memo: dict = {}
            for q in self.old:
                if q.kind == BFORALL:
                    if q.var not in a:
                        break
                    continue
                v = q.rule(values, self.budget, memo) if q.rule else None
                values[q.var] = "" if v is None else v
            self.walks[key] = values
        return self.walks[key]

    def _value(self, var, a):
        if var in self.members:
            vals: list[str] = []
            for m in self.members[var]:
                for st in self._completions(self.pos[m], a):
                    v = self(m, st)
                    if v is None:
                        return None
                    if v not in vals:
                        vals.append(v)
            return "".join(vals)
        return self._walk(a).get(var)

    def _completions(self, p, a):
        # existential values matter only through the bounds of universals
        needed = set().union(*(term_vars(q.bound) for q in self.final[:p] if q.kind == BFORALL))
        states = [dict(a)]
        for q in self.final[:p]:
            if q.var in a or (q.kind != BFORALL and q.var not in needed):
                continue
            new = []
            for st in states:
                if q.kind == BFORALL:
                    try:
                        bound = eval_term(q.bound, st)
                    except UnboundVariable:
                        return []
                    new += [{**st, q.var: v} for v in self.below(bound)]
                else:
                    new.append({**st, q.var: self(q.var, st) or ""})
            states = new
        return states


def check_shape(nf: PrenexNormalForm, structure: Structure | str,
                source: SigmaClass | None = None) -> list[str]:
    """Violations of the normal-form invariants (empty list when fine)."""
    problems = []
    s = Structure.of(structure)
    if not isinstance(nf.matrix, Eq):
        problems.append("matrix is not a single equation")
    seen = set()
    for i, q in enumerate(nf.prefix):
        if q.var in seen:
            problems.append(f"variable {q.var} bound twice")
        seen.add(q.var)
        if q.bound is not None and q.var in term_vars(q.bound):
            problems.append(f"bound of {q.var} mentions {q.var}")
        if s is Structure.B and q.kind == EXISTS and i > 0:
            problems.append(f"unbounded {q.var} not leading")
    if s is Structure.D and source is not None and source.k == 0:
        if any(q.kind != EXISTS for q in nf.prefix):
            problems.append("bounded quantifier although input has no bounded universal")
    if s is Structure.B and nf.shape().n > 1:
        problems.append("more than one unbounded existential")
    return problems


def expanded_size(t: Term) -> int:
    """Number of constant and variable symbols in the tree form of `t`."""
    memo: dict[int, int] = {}

    def go(u):
        if isinstance(u, Concat):
            k = id(u)
            if k not in memo:
                memo[k] = go(u.left) + go(u.right)
            return memo[k]
        return 0 if u == E else 1

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 100_000))
    try:
        return go(t)
    finally:
        sys.setrecursionlimit(old)


# -------------------------------------------------- decoding gadgets


def _two_vars(t: Term) -> tuple[str, str] | None:
    if isinstance(t, Concat) and isinstance(t.left, Var) and isinstance(t.right, Var):
        return t.left.name, t.right.name
    return None


def _four_vars(t: Term) -> tuple[str, ...] | None:
    out = []
    for _ in range(3):
        if not (isinstance(t, Concat) and isinstance(t.right, Var)):
            return None
        out.append(t.right.name)
        t = t.left
    if not isinstance(t, Var):
        return None
    return (t.name, *reversed(out))


@dataclass(frozen=True)
class PrefixOr:
    """A recognized prefix-disjunction block:  s1 prefix-of t1  or  s2 prefix-of t2."""
    s1: Term
    t1: Term
    s2: Term
    t2: Term
    equations: tuple[Eq, ...]
    variables: tuple[str, ...]


def find_prefix_ors(eqs: Sequence[Eq], local: set[str]) -> list[PrefixOr]:
    """Occurrences of the nine equations built by `or_prefix_to_eq` whose
    auxiliary variables are all in `local`."""
    ends_with: dict[str, list[tuple[str, Eq]]] = {}
    starts_with: dict[str, list[tuple[str, Eq]]] = {}
    units: dict[tuple, Eq] = {}
    fours: dict[tuple, list[Eq]] = {}
    commuting = []
    for e in eqs:
        r2 = _two_vars(e.right)
        l2 = _two_vars(e.left)
        if r2:
            starts_with.setdefault(r2[0], []).append((r2[1], e))
            ends_with.setdefault(r2[1], []).append((r2[0], e))
            if l2 == (r2[1], r2[0]) and r2[0] != r2[1]:
                commuting.append((l2, e))
        if l2 and e.right in (ZERO, ONE):
            units[(l2, e.right)] = e
        l4, r4 = _four_vars(e.left), _four_vars(e.right)
        if l4 and r4 and r4 == (l4[2], l4[3], l4[0], l4[1]):
            fours.setdefault((l4[0], l4[2]), []).append(e)
    found = []
    for (u, w), ce in commuting:
        pairs = {}
        for e in fours.get((u, w), []):
            l4 = _four_vars(e.left)
            for c in (ZERO, ONE):
                if ((l4[1], l4[3]), c) in units:
                    pairs[c] = (e, units[((l4[1], l4[3]), c)], l4[1], l4[3])
        if len(pairs) != 2:
            continue
        s1e = [(x1, e) for x1, e in ends_with.get(u, []) if e is not ce]
        s2e = [(x4, e) for x4, e in ends_with.get(w, []) if e is not ce]
        for x1, e_s1 in s1e:
            t1e = [(x3, e) for x3, e in starts_with.get(x1, []) if e is not e_s1]
            for x4, e_s2 in s2e:
                t2e = [(x6, e) for x6, e in starts_with.get(x4, []) if e is not e_s2]
                if len(t1e) != 1 or len(t2e) != 1:
                    continue
                (x3, e_t1), (x6, e_t2) = t1e[0], t2e[0]
                (f0, z0, y1, y2), (f1, z1, y3, y4) = pairs[ZERO], pairs[ONE]
                names = (x1, u, x3, x4, w, x6, y1, y2, y3, y4)
                if len(set(names)) != 10 or not set(names) <= local:
                    continue
                group = (e_s1, e_t1, e_s2, e_t2, ce, z0, z1, f0, f1)
                found.append(PrefixOr(e_s1.left, e_t1.left, e_s2.left, e_t2.left,
                                      group, names))
    return found


def decode_gadgets(conjuncts: Sequence[Formula], local: set[str],
                   fresh: Fresh) -> tuple[list[Formula], set[str]] | None:
    """Replace prefix-disjunction blocks by the disjunctions they encode.

    Four blocks over the same s1, t1, s2, t2 (in the four orientations)
    become  s1 = t1  or  s2 = t2;  a lone block becomes a disjunction of
    two prefix facts.  Returns the new conjunct list and the eliminated
    auxiliary variables, or None when nothing matched.  Auxiliary
    variables must not occur anywhere else except in their own bound.
    """
    eqs = [c for c in conjuncts if isinstance(c, Eq)]
    blocks = find_prefix_ors(eqs, local)
    if not blocks:
        return None
    consumed_ids: set[int] = set()
    chosen: list[PrefixOr] = []
    for b in blocks:
        if any(id(e) in consumed_ids for e in b.equations):
            continue
        chosen.append(b)
        consumed_ids.update(id(e) for e in b.equations)
    eliminated = {v for b in chosen for v in b.variables}
    remaining = [c for c in conjuncts if id(c) not in consumed_ids]
    for c in remaining:
        names = free_vars(c)
        if isinstance(c, Rel) and isinstance(c.left, Var) and c.left.name in eliminated:
            names = names - {c.left.name}
        if names & eliminated:
            return None
    # keep bounds of eliminated variables out: the empty string satisfies them
    remaining = [c for c in remaining
                 if not (isinstance(c, Rel) and isinstance(c.left, Var)
                         and c.left.name in eliminated)]
    new: list[Formula] = []
    used: set[int] = set()
    for i, b in enumerate(chosen):
        if i in used:
            continue
        want = [(b.s1, b.t1, b.t2, b.s2), (b.t1, b.s1, b.s2, b.t2), (b.t1, b.s1, b.t2, b.s2)]
        partners = []
        for key in want:
            j = next((j for j, c in enumerate(chosen) if j != i and j not in used
                      and j not in partners
                      and all(_same(p, q) for p, q in zip((c.s1, c.t1, c.s2, c.t2), key))), None)
            partners.append(j)
        if None not in partners:
            used.update([i, *partners])
            new.append(Or(Eq(b.s1, b.t1), Eq(b.s2, b.t2)))
        else:
            used.add(i)
            v1, v2 = fresh(), fresh()
            new.append(Or(Exists(v1, Eq(cat(b.s1, Var(v1)), b.t1)),
                          Exists(v2, Eq(cat(b.s2, Var(v2)), b.t2))))
    return remaining + new, eliminated
