"""The axiom systems B and D, a small proof calculus, and proof synthesis
for true Sigma-sentences.

A proof is a list of steps; each step names a rule, earlier steps it uses
as premises, rule arguments, and its conclusion.  The checker recomputes
or validates every conclusion, so a proof is accepted only if every line
follows from the axioms by the rules below.

Rules (arguments in brackets):

    AxiomInstance [ref, subst]   instance of an axiom's matrix
    Refl [term]                  t = t
    Sym                          s = t  /  t = s    (also for negated equations)
    Trans                        s = t, t = u  /  s = u
    CongL [term u], CongR [term v]
                                 s = t  /  u s = u t,   s = t  /  s v = t v
    CongImpL [u, s, t], CongImpR [v, s, t]
                                 s = t -> u s = u t,   s = t -> s v = t v
    EqSubst                      s = t, phi  /  phi with some ground s replaced by t
    AndIntro, AndElimL, AndElimR, OrIntroL [psi], OrIntroR [psi]
    ModusPonens                  phi, phi -> psi  /  psi
    IffToImpL, IffToImpR         phi <-> psi  /  phi -> psi,  psi -> phi
    Contrapose                   phi -> psi, ~psi  /  ~phi
    NegOrIntro                   ~phi, ~psi  /  ~(phi | psi)
    ExistsIntro [var, witness]   phi(t)  /  E x phi(x)
    BoundedCover [ref, bound]    the cases of a bound axiom  /  A x <: bound . phi

Formulas are compared after rewriting ``E x <: t . phi`` as
``E x (x <: t & phi)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

from .logic import (E, ONE, ZERO, And, BoundedExists, BoundedForall, Concat, Empty, Eq,
                    Exists, Forall, Formula, Iff, Implies, Not, One, Or, Rel, Term, Var,
                    Zero, biteral, biteral_bits, cat, classify, parse_formula, parse_term,
                    show, show_term, substitute, term_vars)
from .semantics import Structure, eval_term, evaluate

# ---------------------------------------------------------------- axioms

_x, _y, _z = Var("x"), Var("y"), Var("z")


def _forall(names: str, body: Formula) -> Formula:
    for n in reversed(names):
        body = Forall(n, body)
    return body


def _cover_axiom(c1: Term, c2: Term) -> Formula:
    big = cat(c1, _y, c2)
    return _forall("xy", Iff(Rel(_x, big),
                             Or(Or(Eq(_x, big), Rel(_x, cat(c1, _y))), Rel(_x, cat(_y, c2)))))


_COMMON = {
    1: _forall("x", And(Eq(_x, Concat(E, _x)), Eq(_x, Concat(_x, E)))),
    2: _forall("xyz", Eq(cat(_x, _y, _z), Concat(_x, Concat(_y, _z)))),
    3: _forall("xy", Implies(Not(Eq(_x, _y)),
                             And(Not(Eq(cat(_x, ZERO), cat(_y, ZERO))),
                                 Not(Eq(cat(_x, ONE), cat(_y, ONE)))))),
    4: _forall("xy", Not(Eq(cat(_x, ZERO), cat(_y, ONE)))),
}

AXIOMS: dict[str, Formula] = {f"B{i}": f for i, f in _COMMON.items()}
AXIOMS.update({f"D{i}": f for i, f in _COMMON.items()})
AXIOMS.update({
    "B5": _forall("x", Iff(Rel(_x, E), Eq(_x, E))),
    "B6": _forall("x", Iff(Rel(_x, ZERO), Or(Eq(_x, E), Eq(_x, ZERO)))),
    "B7": _forall("x", Iff(Rel(_x, ONE), Or(Eq(_x, E), Eq(_x, ONE)))),
    "B8": _cover_axiom(ZERO, ZERO),
    "B9": _cover_axiom(ZERO, ONE),
    "B10": _cover_axiom(ONE, ZERO),
    "B11": _cover_axiom(ONE, ONE),
    "D5": _forall("x", Iff(Rel(_x, E), Eq(_x, E))),
    "D6": _forall("xy", Iff(Rel(_x, cat(_y, ZERO)), Or(Eq(_x, cat(_y, ZERO)), Rel(_x, _y)))),
    "D7": _forall("xy", Iff(Rel(_x, cat(_y, ONE)), Or(Eq(_x, cat(_y, ONE)), Rel(_x, _y)))),
})

THEORY_AXIOMS = {
    "B": tuple(f"B{i}" for i in range(1, 12)),
    "D": tuple(f"D{i}" for i in range(1, 8)),
}

_STRUCTURE = {"B": Structure.B, "D": Structure.D}


def axiom(ref: str) -> Formula:
    try:
        return AXIOMS[ref]
    except KeyError:
        raise ValueError(f"no axiom {ref!r}") from None


def _strip(f: Formula) -> tuple[list[str], Formula]:
    names = []
    while isinstance(f, Forall):
        names.append(f.var)
        f = f.body
    return names, f


def instantiate(ref: str, subst: dict[str, Term]) -> Formula:
    """The matrix of an axiom with every outer universal variable replaced."""
    names, body = _strip(axiom(ref))
    if set(subst) != set(names):
        raise ValueError(f"{ref} needs values for {names}")
    for n in names:
        body = substitute(body, n, subst[n])
    return body


# ------------------------------------------------------------ proofs


@dataclass(frozen=True)
class ProofStep:
    id: int
    rule: str
    premises: tuple[int, ...]
    conclusion: Formula
    args: dict = field(default_factory=dict, compare=False)


@dataclass
class Proof:
    theory: str
    goal: Formula
    steps: list[ProofStep] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "theory": self.theory,
            "goal": show(self.goal),
            "steps": [{"id": s.id, "rule": s.rule, "args": _args_out(s.args),
                       "premises": list(s.premises), "formula": show(s.conclusion)}
                      for s in self.steps],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, d: dict) -> "Proof":
        steps = [ProofStep(int(s["id"]), s["rule"], tuple(int(p) for p in s["premises"]),
                           parse_formula(s["formula"]), _args_in(s.get("args", {})))
                 for s in d["steps"]]
        return cls(d["theory"], parse_formula(d["goal"]), steps)

    @classmethod
    def loads(cls, text: str) -> "Proof":
        return cls.from_json(json.loads(text))


_TERM_ARGS = {"term", "u", "v", "s", "t", "witness", "bound"}


def _args_out(args: dict) -> dict:
    out = {}
    for k, v in args.items():
        if k == "subst":
            out[k] = {n: show_term(t) for n, t in v.items()}
        elif k in _TERM_ARGS:
            out[k] = show_term(v)
        elif k == "formula":
            out[k] = show(v)
        else:
            out[k] = v
    return out


def _args_in(args: dict) -> dict:
    out = {}
    for k, v in args.items():
        if k == "subst":
            out[k] = {n: parse_term(t) for n, t in v.items()}
        elif k in _TERM_ARGS:
            out[k] = parse_term(v)
        elif k == "formula":
            out[k] = parse_formula(v)
        else:
            out[k] = v
    return out


@dataclass(frozen=True)
class Ok:
    def __bool__(self):
        return True


@dataclass(frozen=True)
class FailureAt:
    step: int | None  # None for a goal mismatch
    reason: str
    detail: str = ""

    def __bool__(self):
        return False


CheckResult = Union[Ok, FailureAt]


class _Reject(Exception):
    def __init__(self, reason: str, detail: str = ""):
        super().__init__(reason)
        self.reason, self.detail = reason, detail


def desugar(f: Formula) -> Formula:
    """Rewrite bounded existentials as ``E x (x <: t & phi)``; nothing else."""
    if isinstance(f, (Eq, Rel)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.body))
    if isinstance(f, (And, Or, Implies, Iff)):
        return type(f)(desugar(f.left), desugar(f.right))
    if isinstance(f, BoundedExists):
        return Exists(f.var, And(Rel(Var(f.var), f.bound), desugar(f.body)))
    if isinstance(f, BoundedForall):
        return BoundedForall(f.var, f.bound, desugar(f.body))
    return type(f)(f.var, desugar(f.body))


def _same(a: Formula, b: Formula) -> bool:
    return a == b or desugar(a) == desugar(b)


def _replaced(src, dst, s: Term, t: Term) -> bool:
    """Whether `dst` arises from `src` by replacing some occurrences of s by t."""
    if src == dst:
        return True
    if src == s and dst == t:
        return True
    if type(src) is not type(dst):
        return False
    if isinstance(src, Concat) or isinstance(src, (Eq, Rel, And, Or, Implies, Iff)):
        return _replaced(src.left, dst.left, s, t) and _replaced(src.right, dst.right, s, t)
    if isinstance(src, Not):
        return _replaced(src.body, dst.body, s, t)
    if isinstance(src, (Exists, Forall)):
        return src.var == dst.var and _replaced(src.body, dst.body, s, t)
    if isinstance(src, (BoundedExists, BoundedForall)):
        return (src.var == dst.var and _replaced(src.bound, dst.bound, s, t)
                and _replaced(src.body, dst.body, s, t))
    return False


def _cover_cases(ref: str, bound: Term, var: str, body: Formula) -> list[Formula]:
    """Premises BoundedCover expects for `ref` at `bound`."""
    def at(t):
        return substitute(body, var, t)

    if ref in ("B5", "D5"):
        if bound != E:
            raise _Reject("bad-premise-shape", f"{ref} covers only e")
        return [at(E)]
    if ref in ("B6", "B7"):
        c = ZERO if ref == "B6" else ONE
        if bound != c:
            raise _Reject("bad-premise-shape", f"{ref} covers only {show_term(c)}")
        return [at(E), at(c)]
    if ref in ("B8", "B9", "B10", "B11"):
        c1, c2 = {"B8": (ZERO, ZERO), "B9": (ZERO, ONE),
                  "B10": (ONE, ZERO), "B11": (ONE, ONE)}[ref]
        if not (isinstance(bound, Concat) and bound.right == c2
                and isinstance(bound.left, Concat) and bound.left.left == c1):
            raise _Reject("bad-premise-shape", f"bound does not match {ref}")
        y = bound.left.right
        return [BoundedForall(var, Concat(c1, y), body),
                BoundedForall(var, Concat(y, c2), body), at(bound)]
    if ref in ("D6", "D7"):
        c = ZERO if ref == "D6" else ONE
        if not (isinstance(bound, Concat) and bound.right == c):
            raise _Reject("bad-premise-shape", f"bound does not match {ref}")
        return [BoundedForall(var, bound.left, body), at(bound)]
    raise _Reject("bad-premise-shape", f"{ref} is not a bound axiom")


def _expect(cond: bool, reason: str = "bad-premise-shape", detail: str = ""):
    if not cond:
        raise _Reject(reason, detail)


def _check_step(theory: str, step: ProofStep, prem: list[Formula]):
    rule, c, a = step.rule, step.conclusion, step.args

    def arity(n):
        _expect(len(prem) == n, "bad-premise-shape", f"{rule} takes {n} premises")

    if rule == "AxiomInstance":
        arity(0)
        ref = a.get("ref")
        _expect(ref in THEORY_AXIOMS[theory], "wrong-substitution", f"{ref} not in {theory}")
        try:
            inst = instantiate(ref, a.get("subst", {}))
        except ValueError as exc:
            raise _Reject("wrong-substitution", str(exc))
        _expect(any(term_vars(t) for t in a["subst"].values()) is False,
                "wrong-substitution", "instances must be variable-free")
        _expect(inst == c, "wrong-substitution")
    elif rule == "Refl":
        arity(0)
        _expect(c == Eq(a.get("term"), a.get("term")))
    elif rule == "Sym":
        arity(1)
        p = prem[0]
        if isinstance(p, Eq):
            _expect(c == Eq(p.right, p.left))
        else:
            _expect(isinstance(p, Not) and isinstance(p.body, Eq)
                    and c == Not(Eq(p.body.right, p.body.left)))
    elif rule == "Trans":
        arity(2)
        p, q = prem
        _expect(isinstance(p, Eq) and isinstance(q, Eq) and p.right == q.left
                and c == Eq(p.left, q.right))
    elif rule in ("CongL", "CongR"):
        arity(1)
        p = prem[0]
        _expect(isinstance(p, Eq))
        u = a.get("term")
        if rule == "CongL":
            _expect(c == Eq(Concat(u, p.left), Concat(u, p.right)))
        else:
            _expect(c == Eq(Concat(p.left, u), Concat(p.right, u)))
    elif rule in ("CongImpL", "CongImpR"):
        arity(0)
        u, s, t = a.get("term"), a.get("s"), a.get("t")
        if rule == "CongImpL":
            want = Implies(Eq(s, t), Eq(Concat(u, s), Concat(u, t)))
        else:
            want = Implies(Eq(s, t), Eq(Concat(s, u), Concat(t, u)))
        _expect(c == want)
    elif rule == "EqSubst":
        arity(2)
        eq, phi = prem
        _expect(isinstance(eq, Eq))
        _expect(not term_vars(eq.left) and not term_vars(eq.right), "bad-premise-shape",
                "only variable-free equations may be substituted")
        _expect(_replaced(desugar(phi), desugar(c), eq.left, eq.right))
    elif rule == "AndIntro":
        arity(2)
        _expect(_same(c, And(prem[0], prem[1])))
    elif rule in ("AndElimL", "AndElimR"):
        arity(1)
        p = desugar(prem[0])
        _expect(isinstance(p, And))
        _expect(_same(c, p.left if rule == "AndElimL" else p.right))
    elif rule in ("OrIntroL", "OrIntroR"):
        arity(1)
        psi = a.get("formula")
        want = Or(prem[0], psi) if rule == "OrIntroL" else Or(psi, prem[0])
        _expect(psi is not None and _same(c, want))
    elif rule == "ModusPonens":
        arity(2)
        p, imp = prem
        imp = desugar(imp)
        _expect(isinstance(imp, Implies) and _same(imp.left, p) and _same(c, imp.right))
    elif rule in ("IffToImpL", "IffToImpR"):
        arity(1)
        p = prem[0]
        _expect(isinstance(p, Iff))
        want = Implies(p.left, p.right) if rule == "IffToImpL" else Implies(p.right, p.left)
        _expect(_same(c, want))
    elif rule == "Contrapose":
        arity(2)
        imp, neg = prem
        _expect(isinstance(imp, Implies) and isinstance(neg, Not)
                and _same(neg.body, imp.right) and _same(c, Not(imp.left)))
    elif rule == "NegOrIntro":
        arity(2)
        p, q = prem
        _expect(isinstance(p, Not) and isinstance(q, Not)
                and _same(c, Not(Or(p.body, q.body))))
    elif rule == "ExistsIntro":
        arity(1)
        dc = desugar(c)
        x, w = a.get("var"), a.get("witness")
        _expect(isinstance(dc, Exists) and dc.var == x and w is not None)
        _expect(not term_vars(w), "wrong-substitution", "witness must be variable-free")
        _expect(_same(prem[0], substitute(dc.body, x, w)), "wrong-substitution")
    elif rule == "BoundedCover":
        ref, bound = a.get("ref"), a.get("bound")
        _expect(ref in THEORY_AXIOMS[theory], "bad-premise-shape", f"{ref} not in {theory}")
        _expect(isinstance(c, BoundedForall) and c.bound == bound)
        cases = _cover_cases(ref, bound, c.var, c.body)
        arity(len(cases))
        for want, got in zip(cases, prem):
            _expect(_same(want, got))
    else:
        raise _Reject("unknown-rule", rule)


def check_proof(p: Proof) -> CheckResult:
    """Ok if every step follows by its rule and the last line is the goal."""
    if p.theory not in THEORY_AXIOMS:
        return FailureAt(None, "unknown-theory", p.theory)
    done: dict[int, Formula] = {}
    for step in p.steps:
        if step.id in done:
            return FailureAt(step.id, "duplicate-id")
        missing = [i for i in step.premises if i not in done]
        if missing:
            return FailureAt(step.id, "bad-premise-ref", f"unknown premises {missing}")
        try:
            _check_step(p.theory, step, [done[i] for i in step.premises])
        except _Reject as r:
            return FailureAt(step.id, r.reason, r.detail)
        except (TypeError, AttributeError, KeyError, ValueError) as exc:
            return FailureAt(step.id, "bad-premise-shape", str(exc))
        done[step.id] = step.conclusion
    if not p.steps or not _same(p.steps[-1].conclusion, p.goal):
        return FailureAt(None, "goal-mismatch")
    return Ok()


# ------------------------------------------------------------ synthesis


class Refused(Exception):
    """No proof: the sentence is false, or its truth was not established."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


def _value(t: Term) -> str:
    return eval_term(t, {})


class _Builder:
    """Appends steps, reusing any line already derived."""

    def __init__(self, theory: str):
        if theory not in THEORY_AXIOMS:
            raise ValueError(f"unknown theory {theory!r}")
        self.theory = theory
        self.steps: list[ProofStep] = []
        self.known: dict[Formula, int] = {}

    def add(self, rule: str, conclusion: Formula, premises=(), **args) -> int:
        hit = self.known.get(conclusion)
        if hit is not None:
            return hit
        sid = len(self.steps) + 1
        self.steps.append(ProofStep(sid, rule, tuple(premises), conclusion, args))
        self.known[conclusion] = sid
        return sid

    def f(self, sid: int) -> Formula:
        return self.steps[sid - 1].conclusion

    def ax(self, ref: str, **subst: Term) -> int:
        ref = ref if ref[0] == self.theory else self.theory + ref[1:]
        return self.add("AxiomInstance", instantiate(ref, subst), ref=ref, subst=subst)

    def refl(self, t: Term) -> int:
        return self.add("Refl", Eq(t, t), term=t)

    def sym(self, sid: int) -> int:
        p = self.f(sid)
        if isinstance(p, Eq):
            return self.add("Sym", Eq(p.right, p.left), [sid])
        return self.add("Sym", Not(Eq(p.body.right, p.body.left)), [sid])

    def trans(self, a: int, b: int) -> int:
        p, q = self.f(a), self.f(b)
        if p.left == p.right:
            return b
        if q.left == q.right:
            return a
        return self.add("Trans", Eq(p.left, q.right), [a, b])

    def and_left(self, sid):
        return self.add("AndElimL", desugar(self.f(sid)).left, [sid])

    def and_right(self, sid):
        return self.add("AndElimR", desugar(self.f(sid)).right, [sid])

    def mp(self, a: int, imp: int) -> int:
        return self.add("ModusPonens", desugar(self.f(imp)).right, [a, imp])

    def imp(self, iff: int, forward: bool) -> int:
        p = self.f(iff)
        if forward:
            return self.add("IffToImpL", Implies(p.left, p.right), [iff])
        return self.add("IffToImpR", Implies(p.right, p.left), [iff])

    def contra(self, imp: int, neg: int) -> int:
        return self.add("Contrapose", Not(self.f(imp).left), [imp, neg])

    def neg_or(self, a: int, b: int) -> int:
        return self.add("NegOrIntro", Not(Or(self.f(a).body, self.f(b).body)), [a, b])

    def or_left(self, sid: int, other: Formula) -> int:
        return self.add("OrIntroL", Or(self.f(sid), other), [sid], formula=other)

    def or_right(self, sid: int, other: Formula) -> int:
        return self.add("OrIntroR", Or(other, self.f(sid)), [sid], formula=other)

    def subst(self, eq: int, sid: int, target: Formula) -> int:
        if self.f(sid) == target:
            return sid
        return self.add("EqSubst", target, [eq, sid])

    # -- equality of variable-free terms

    def normal(self, t: Term) -> int:
        """Proof of t = b with b the biteral of t's value."""
        if biteral_bits(t) is not None:
            return self.refl(t)
        if isinstance(t, (Zero, One)):
            return self.and_left(self.ax("B1", x=t))
        left, right = self.normal(t.left), self.normal(t.right)
        b1, b2 = self.f(left).right, self.f(right).right
        step = self.add("CongR", Eq(Concat(t.left, t.right), Concat(b1, t.right)), [left],
                        term=t.right)
        step2 = self.add("CongL", Eq(Concat(b1, t.right), Concat(b1, b2)), [right], term=b1)
        return self.trans(self.trans(step, step2), self.join(b1, b2))

    def join(self, b1: Term, b2: Term) -> int:
        """Proof of b1 b2 = b for biterals b1, b2."""
        if isinstance(b2, Empty):
            return self.sym(self.and_right(self.ax("B1", x=b1)))
        inner, c = b2.left, b2.right
        assoc = self.sym(self.ax("B2", x=b1, y=inner, z=c))  # b1 (i c) = (b1 i) c
        rest = self.join(b1, inner)
        lifted = self.add("CongR", Eq(Concat(self.f(rest).left, c),
                                      Concat(self.f(rest).right, c)), [rest], term=c)
        return self.trans(assoc, lifted)

    def equal(self, s: Term, t: Term) -> int:
        """Proof of s = t for variable-free terms with equal values."""
        if s == t:
            return self.refl(s)
        return self.trans(self.normal(s), self.sym(self.normal(t)))

    def rewrite(self, sid: int, old: Term, new: Term, target: Formula) -> int:
        """From a line mentioning `old`, the `target` line mentioning `new` instead."""
        if old == new:
            return sid
        return self.subst(self.equal(old, new), sid, target)

    # -- inequality

    def nonempty(self, s: Term, c: Term) -> int:
        """Proof of ~(s c = e) for a bit c, by way of B1, B2 and B4."""
        other = ONE if isinstance(c, Zero) else ZERO
        # (s c = e) -> (other (s c) = other e)
        imp = self.add("CongImpL", Implies(Eq(Concat(s, c), E),
                                           Eq(Concat(other, Concat(s, c)), Concat(other, E))),
                       term=other, s=Concat(s, c), t=E)
        assoc = self.ax("B2", x=other, y=s, z=c)  # (other s) c = other (s c)
        imp = self.subst(self.sym(assoc), imp,
                         Implies(Eq(Concat(s, c), E),
                                 Eq(Concat(Concat(other, s), c), Concat(other, E))))
        lhs = Concat(Concat(other, s), c)
        imp = self.subst(self.equal(Concat(other, E), Concat(E, other)), imp,
                         Implies(Eq(Concat(s, c), E), Eq(lhs, Concat(E, other))))
        if isinstance(c, Zero):
            clash = self.ax("B4", x=Concat(other, s), y=E)  # ~((1 s) 0 = e 1)
        else:
            clash = self.sym(self.ax("B4", x=E, y=Concat(other, s)))  # ~((0 s) 1 = e 0)
        return self.contra(imp, clash)

    def differ(self, b1: Term, b2: Term) -> int:
        """Proof of ~(b1 = b2) for distinct biterals."""
        if isinstance(b2, Empty):
            return self.nonempty(b1.left, b1.right)
        if isinstance(b1, Empty):
            return self.sym(self.nonempty(b2.left, b2.right))
        (p, c), (q, d) = (b1.left, b1.right), (b2.left, b2.right)
        if type(c) is type(d):
            cases = self.ax("B3", x=p, y=q)
            both = self.mp(self.differ(p, q), cases)
            return self.and_left(both) if isinstance(c, Zero) else self.and_right(both)
        if isinstance(c, Zero):
            return self.ax("B4", x=p, y=q)
        return self.sym(self.ax("B4", x=q, y=p))

    def unequal(self, s: Term, t: Term) -> int:
        b1, b2 = biteral(_value(s)), biteral(_value(t))
        sid = self.differ(b1, b2)
        sid = self.rewrite(sid, b1, s, Not(Eq(s, b2)))
        return self.rewrite(sid, b2, t, Not(Eq(s, t)))

    # -- the bound relation

    def below(self, b1: Term, b2: Term) -> int:
        """Proof of b1 <: b2 for biterals with the relation true."""
        v1, v2 = _value(b1), _value(b2)
        if self.theory == "D":
            iff = self.ax("D5", x=b1) if not v2 else self.ax(
                "D6" if v2[-1] == "0" else "D7", x=b1, y=b2.left)
            if not v2:
                case = self.refl(E)
            else:
                alt = self.f(iff).right
                if v1 == v2:
                    case = self.or_left(self.refl(b1), alt.right)
                else:
                    case = self.or_right(self.below(b1, b2.left), alt.left)
            return self.mp(case, self.imp(iff, forward=False))
        if not v2:
            return self.mp(self.refl(E), self.imp(self.ax("B5", x=b1), forward=False))
        if len(v2) == 1:
            c = ZERO if v2 == "0" else ONE
            iff = self.ax("B6" if v2 == "0" else "B7", x=b1)
            alt = self.f(iff).right
            if not v1:
                case = self.or_left(self.refl(E), alt.right)
            else:
                case = self.or_right(self.equal(b1, c), alt.left)
            short = self.mp(case, self.imp(iff, forward=False))  # b1 <: c
            return self.rewrite(short, c, b2, Rel(b1, b2))
        c1, c2, mid = _bit(v2[0]), _bit(v2[-1]), biteral(v2[1:-1])
        big = cat(c1, mid, c2)
        iff = self.ax(_COVER_REF[v2[0] + v2[-1]], x=b1, y=mid)
        alt = self.f(iff).right  # (b1 = big | b1 <: c1 mid) | b1 <: mid c2
        if v1 == v2:
            first = self.or_left(self.equal(b1, big), alt.left.right)
            case = self.or_left(first, alt.right)
        elif v1 in v2[:-1]:
            head = self.rewrite(self.below(b1, biteral(v2[:-1])), biteral(v2[:-1]),
                                Concat(c1, mid), Rel(b1, Concat(c1, mid)))
            case = self.or_left(self.or_right(head, alt.left.left), alt.right)
        else:
            tail = self.rewrite(self.below(b1, biteral(v2[1:])), biteral(v2[1:]),
                                Concat(mid, c2), Rel(b1, Concat(mid, c2)))
            case = self.or_right(tail, alt.left)
        sid = self.mp(case, self.imp(iff, forward=False))
        return self.rewrite(sid, big, b2, Rel(b1, b2))

    def not_below(self, b1: Term, b2: Term) -> int:
        """Proof of ~(b1 <: b2) for biterals with the relation false."""
        v2 = _value(b2)
        if not v2:
            iff = self.ax("B5", x=b1)
            return self.contra(self.imp(iff, forward=True), self.unequal(b1, E))
        if self.theory == "D":
            iff = self.ax("D6" if v2[-1] == "0" else "D7", x=b1, y=b2.left)
            both = self.neg_or(self.unequal(b1, b2), self.not_below(b1, b2.left))
            return self.contra(self.imp(iff, forward=True), both)
        if len(v2) == 1:
            c = _bit(v2)
            iff = self.ax("B6" if v2 == "0" else "B7", x=b1)
            both = self.neg_or(self.unequal(b1, E), self.unequal(b1, c))
            short = self.contra(self.imp(iff, forward=True), both)
            return self.rewrite(short, c, b2, Not(Rel(b1, b2)))
        c1, c2, mid = _bit(v2[0]), _bit(v2[-1]), biteral(v2[1:-1])
        big = cat(c1, mid, c2)
        iff = self.ax(_COVER_REF[v2[0] + v2[-1]], x=b1, y=mid)
        head = self.rewrite(self.not_below(b1, biteral(v2[:-1])), biteral(v2[:-1]),
                            Concat(c1, mid), Not(Rel(b1, Concat(c1, mid))))
        tail = self.rewrite(self.not_below(b1, biteral(v2[1:])), biteral(v2[1:]),
                            Concat(mid, c2), Not(Rel(b1, Concat(mid, c2))))
        both = self.neg_or(self.neg_or(self.unequal(b1, big), head), tail)
        sid = self.contra(self.imp(iff, forward=True), both)
        return self.rewrite(sid, big, b2, Not(Rel(b1, b2)))

    def literal(self, phi: Formula) -> int:
        neg = isinstance(phi, Not)
        atom = phi.body if neg else phi
        if not isinstance(atom, (Eq, Rel)):
            raise Refused("not-a-literal", show(phi))
        s, t = atom.left, atom.right
        if term_vars(s) or term_vars(t):
            raise Refused("not-variable-free", show(phi))
        v1, v2 = _value(s), _value(t)
        if isinstance(atom, Eq):
            if (v1 == v2) == neg:
                raise Refused("false", show(phi))
            return self.unequal(s, t) if neg else self.equal(s, t)
        holds = v1 in v2 if self.theory == "B" else v2.startswith(v1)
        if holds == neg:
            raise Refused("false", show(phi))
        b1, b2 = biteral(v1), biteral(v2)
        sid = self.not_below(b1, b2) if neg else self.below(b1, b2)
        wrap = (lambda r: Not(r)) if neg else (lambda r: r)
        sid = self.rewrite(sid, b1, s, wrap(Rel(s, b2)))
        return self.rewrite(sid, b2, t, wrap(Rel(s, t)))

    # -- Sigma-sentences

    def sigma(self, phi: Formula, budget: int) -> int:
        if isinstance(phi, (Eq, Rel, Not)):
            return self.literal(phi)
        if isinstance(phi, And):
            a, b = self.sigma(phi.left, budget), self.sigma(phi.right, budget)
            return self.add("AndIntro", And(self.f(a), self.f(b)), [a, b])
        if isinstance(phi, Or):
            if self.truth(phi.left, budget) is True:
                return self.or_left(self.sigma(phi.left, budget), phi.right)
            if self.truth(phi.right, budget) is True:
                return self.or_right(self.sigma(phi.right, budget), phi.left)
            raise Refused("unknown", show(phi))
        if isinstance(phi, (Exists, BoundedExists)):
            w = self.witness(phi, budget)
            t = biteral(w)
            body = substitute(phi.body, phi.var, t)
            if isinstance(phi, BoundedExists):
                guard = self.literal(Rel(t, phi.bound))
                inner = self.sigma(body, budget)
                sid = self.add("AndIntro", And(self.f(guard), self.f(inner)), [guard, inner])
            else:
                sid = self.sigma(body, budget)
            return self.add("ExistsIntro", phi, [sid], var=phi.var, witness=t)
        if isinstance(phi, BoundedForall):
            if term_vars(phi.bound):
                raise Refused("not-variable-free", show(phi))
            b = biteral(_value(phi.bound))
            sid = self.cover(phi.var, phi.body, _value(phi.bound), budget, {})
            return self.rewrite(sid, b, phi.bound, phi)
        raise Refused("not-sigma", show(phi))

    def truth(self, phi: Formula, budget: int):
        return evaluate(phi, _STRUCTURE[self.theory], budget=budget).value

    def witness(self, phi: Formula, budget: int) -> str:
        v = evaluate(phi, _STRUCTURE[self.theory], budget=budget)
        if v.value is False:
            raise Refused("false", show(phi))
        if v.value is None or phi.var not in v.witness:
            raise Refused("unknown", show(phi))
        return v.witness[phi.var]

    def cover(self, var: str, body: Formula, v: str, budget: int, memo: dict) -> int:
        """Proof of (A var <: biteral(v)) body, one bound axiom per level."""
        if v in memo:
            return memo[v]
        b = biteral(v)
        inst = lambda t: self.sigma(substitute(body, var, t), budget)
        if not v:
            ref = self.theory + "5"
            sid = self.add("BoundedCover", BoundedForall(var, E, body), [inst(E)],
                           ref=ref, bound=E)
        elif self.theory == "D":
            ref = "D6" if v[-1] == "0" else "D7"
            rest = self.cover(var, body, v[:-1], budget, memo)
            sid = self.add("BoundedCover", BoundedForall(var, b, body), [rest, inst(b)],
                           ref=ref, bound=b)
        elif len(v) == 1:
            c = _bit(v)
            ref = "B6" if v == "0" else "B7"
            short = self.add("BoundedCover", BoundedForall(var, c, body), [inst(E), inst(c)],
                             ref=ref, bound=c)
            sid = self.rewrite(short, c, b, BoundedForall(var, b, body))
        else:
            c1, c2, mid = _bit(v[0]), _bit(v[-1]), biteral(v[1:-1])
            big = cat(c1, mid, c2)
            head = self.rewrite(self.cover(var, body, v[:-1], budget, memo), biteral(v[:-1]),
                                Concat(c1, mid), BoundedForall(var, Concat(c1, mid), body))
            tail = self.rewrite(self.cover(var, body, v[1:], budget, memo), biteral(v[1:]),
                                Concat(mid, c2), BoundedForall(var, Concat(mid, c2), body))
            short = self.add("BoundedCover", BoundedForall(var, big, body),
                             [head, tail, inst(big)], ref=_COVER_REF[v[0] + v[-1]], bound=big)
            sid = self.rewrite(short, big, b, BoundedForall(var, b, body))
        memo[v] = sid
        return sid

    def finish(self, goal: Formula, sid: int) -> Proof:
        # keep only the lines the goal depends on, renumbered in order
        needed, stack = set(), [sid]
        while stack:
            i = stack.pop()
            if i not in needed:
                needed.add(i)
                stack.extend(self.steps[i - 1].premises)
        order = sorted(needed)
        new_id = {old: n for n, old in enumerate(order, 1)}
        steps = [ProofStep(new_id[i], s.rule, tuple(new_id[p] for p in s.premises),
                           s.conclusion, s.args)
                 for i in order for s in (self.steps[i - 1],)]
        return Proof(self.theory, goal, steps)


_COVER_REF = {"00": "B8", "01": "B9", "10": "B10", "11": "B11"}


def _bit(c: str) -> Term:
    return ZERO if c == "0" else ONE


def prove_term_eq_biteral(t: Term, theory: str = "B") -> Proof:
    if term_vars(t):
        raise ValueError("term has variables")
    b = _Builder(theory)
    sid = b.normal(t)
    return b.finish(Eq(t, biteral(_value(t))), sid)


def prove_atomic(phi: Formula, theory: str) -> Proof:
    """Proof of a true variable-free literal; Refused if it is false."""
    b = _Builder(theory)
    return b.finish(phi, b.literal(phi))


def prove_sigma(phi: Formula, theory: str, budget: int = 8) -> Proof:
    """Proof of a true Sigma-sentence; witnesses come from budgeted evaluation."""
    if classify(phi) is None:
        raise Refused("not-sigma", show(phi))
    b = _Builder(theory)
    if b.truth(phi, budget) is False:
        raise Refused("false", show(phi))
    return b.finish(phi, b.sigma(phi, budget))
