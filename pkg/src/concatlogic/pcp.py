"""Post correspondence instances and their reductions to string sentences.

An instance is a list of pairs of bit strings; a solution is a nonempty
index sequence (1-based) whose top and bottom concatenations agree.  The
four generators produce sentences that are true exactly when the
N-encoded instance has a solution; their truth is checked here by
supplying the witness string built from a known solution.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .logic import (And, BoundedExists, BoundedForall, Eq, Exists, Formula, Not,
                    Rel, Term, Var, biteral, cat, classify, conj, disj)
from .semantics import Structure, Verdict, evaluate
from .strings import BitString, check_bits, n_encode


@dataclass(frozen=True)
class PcpInstance:
    pairs: tuple[tuple[BitString, BitString], ...]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("an instance needs at least one pair")
        for top, bottom in self.pairs:
            check_bits(top)
            check_bits(bottom)

    @classmethod
    def of(cls, pairs) -> "PcpInstance":
        return cls(tuple((str(a), str(b)) for a, b in pairs))

    def __len__(self):
        return len(self.pairs)

    def __str__(self):
        return "{" + ", ".join(f"({a or 'e'},{b or 'e'})" for a, b in self.pairs) + "}"


PcpSolution = tuple[int, ...]


@dataclass(frozen=True)
class NoneWithinBound:
    bound: int


def parse_instance(text: str) -> PcpInstance:
    """One pair per line; ``-`` stands for the empty string, ``#`` starts a comment."""
    pairs = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {n}: expected two bit strings, got {line!r}")
        pairs.append(tuple("" if p == "-" else p for p in parts))
    return PcpInstance.of(pairs)


def format_instance(inst: PcpInstance) -> str:
    return "".join(f"{a or '-'} {b or '-'}\n" for a, b in inst.pairs)


def load_instance(path: str | Path) -> PcpInstance:
    return parse_instance(Path(path).read_text())


# ------------------------------------------------------------- solutions


def _rows(inst: PcpInstance, sol: Sequence[int]) -> tuple[str, str]:
    for i in sol:
        if not 1 <= i <= len(inst):
            raise IndexError(f"index {i} out of range 1..{len(inst)}")
    return ("".join(inst.pairs[i - 1][0] for i in sol),
            "".join(inst.pairs[i - 1][1] for i in sol))


def verify_solution(inst: PcpInstance, sol: Sequence[int]) -> bool:
    if not sol:
        return False
    top, bottom = _rows(inst, sol)
    return top == bottom


def solve_pcp(inst: PcpInstance, max_seq_len: int) -> PcpSolution | NoneWithinBound:
    """First solution in breadth-first order (shorter first, then by indices).

    A partial sequence survives only while one row is a prefix of the
    other; sequences reaching the same overhang as an earlier one are
    dropped, which cannot lose the first solution.
    """
    if max_seq_len < 1:
        raise ValueError("max_seq_len must be >= 1")
    queue = deque([((), "", 0)])  # (sequence, overhang, which row is ahead)
    seen = {("", 0)}
    while queue:
        seq, over, ahead = queue.popleft()
        if len(seq) == max_seq_len:
            continue
        for i, (top, bottom) in enumerate(inst.pairs, 1):
            if ahead == 0:
                a, b = over + top, bottom
            else:
                a, b = top, over + bottom
            if a.startswith(b):
                state = (a[len(b):], 0)
            elif b.startswith(a):
                state = (b[len(a):], 1)
            else:
                continue
            nxt = seq + (i,)
            if not state[0]:
                return nxt
            if state not in seen:
                seen.add(state)
                queue.append((nxt, *state))
    return NoneWithinBound(max_seq_len)


def n_transform(inst: PcpInstance) -> PcpInstance:
    return PcpInstance(tuple((n_encode(a), n_encode(b)) for a, b in inst.pairs))


def random_instance(rng: random.Random, size: int, max_len: int = 3) -> PcpInstance:
    def word():
        return "".join(rng.choice("01") for _ in range(rng.randint(0, max_len)))
    return PcpInstance(tuple((word(), word()) for _ in range(size)))


# ------------------------------------------------------------ formulas

def block(k: int) -> str:
    """The separator 0 1^k 0."""
    return "0" + "1" * k + "0"


BIG = block(5)
SMALL = block(4)

U, V, W1, W2, Y, Z = (Var(n) for n in ("u", "v", "w1", "w2", "y", "z"))


def _lit(bits: str) -> Term:
    return biteral(bits)


def _encoded(inst: PcpInstance) -> list[tuple[Term, Term]]:
    return [(_lit(n_encode(a)), _lit(n_encode(b))) for a, b in inst.pairs]


def _no_four_ones(x: Term, fresh: str = "z") -> Formula:
    """No 1111 inside x, written with prefixes only."""
    z = Var(fresh)
    return BoundedForall(fresh, x, Not(Rel(cat(z, _lit("1111")), x)))


def reduce_D_302(inst: PcpInstance) -> Formula:
    """Sigma(3,0,2) sentence, true in D iff the encoded instance is solvable."""
    pairs = _encoded(inst)
    lam, gam = _lit(BIG), _lit(SMALL)
    start = disj(Rel(cat(lam, x, gam, y, lam), U) for x, y in pairs)
    step = disj([Eq(W1, W2)] + [
        Rel(cat(V, lam, W1, gam, W2, lam, W1, x, gam, W2, y, lam), U) for x, y in pairs])
    inner = Exists("w1", Exists("w2", conj([
        Rel(cat(V, lam, W1, gam, W2, lam), U),
        _no_four_ones(cat(W1, W2)),
        step])))
    each = BoundedForall("v", U, disj([
        Not(Rel(cat(V, lam), U)),
        Eq(cat(V, lam), U),
        inner]))
    return Exists("u", And(start, each))


def _first_block(inst_pairs, u: Term) -> Formula:
    """u starts with a block of one pair and that block occurs nowhere else."""
    lam, gam = _lit(BIG), _lit(SMALL)
    return disj(conj([
        Rel(cat(lam, x, gam, y, lam), u),
        Not(Rel(cat(_lit("0"), lam, x, gam, y, lam), u)),
        Not(Rel(cat(_lit("1"), lam, x, gam, y, lam), u))]) for x, y in inst_pairs)


def reduce_B_121(inst: PcpInstance) -> Formula:
    """Sigma(1,2,1) sentence, true in B iff the encoded instance is solvable."""
    pairs = _encoded(inst)
    lam, gam = _lit(BIG), _lit(SMALL)
    step = disj([Eq(W1, W2)] + [Rel(cat(lam, W1, x, gam, W2, y, lam), U) for x, y in pairs])
    inner = BoundedExists("w1", V, BoundedExists("w2", V, conj([
        Eq(V, cat(W1, gam, W2)),
        Not(Rel(_lit("1111"), W1)),
        Not(Rel(_lit("1111"), W2)),
        step])))
    each = BoundedForall("v", U, disj([
        Not(Rel(cat(lam, V, lam), U)),
        Rel(_lit("11111"), V),
        inner]))
    return Exists("u", And(_first_block(pairs, U), each))


def reduce_B_102(inst: PcpInstance) -> Formula:
    """Sigma(1,0,2) sentence, true in B iff the encoded instance is solvable."""
    pairs = _encoded(inst)
    lam, gam = _lit(BIG), _lit(SMALL)
    body = disj([
        Not(Rel(cat(lam, W1, gam, W2, lam), U)),
        Rel(_lit("1111"), cat(W1, W2)),
        Eq(W1, W2)] + [Rel(cat(lam, W1, x, gam, W2, y, lam), U) for x, y in pairs])
    return Exists("u", And(_first_block(pairs, U),
                           BoundedForall("w1", U, BoundedForall("w2", U, body))))


def reduce_D_411(inst: PcpInstance) -> Formula:
    """Sigma(4,1,1) sentence for D with separators that grow by one 1 per step."""
    pairs = _encoded(inst)
    tail5 = _lit("111110")  # 1^5 0
    b4, b5, b6 = _lit(SMALL), _lit(BIG), _lit(block(6))
    zero, one = _lit("0"), _lit("1")
    start = disj(Rel(cat(b5, x, b4, y, b6), U) for x, y in pairs)
    step = disj([Eq(W1, W2)] + [
        Rel(cat(V, tail5, W1, x, b4, W2, y, _lit("011"), Y, tail5), U) for x, y in pairs])
    inner = Exists("w1", Exists("w2", Exists("y", BoundedExists("z", V, conj([
        Eq(V, cat(Z, zero, Y, tail5, W1, b4, W2, _lit("01"), Y)),
        Eq(cat(one, Y), cat(Y, one)),
        step])))))
    each = BoundedForall("v", U, disj([
        Not(Rel(cat(V, tail5), U)),
        Eq(V, zero),
        inner]))
    return Exists("u", And(start, each))


@dataclass(frozen=True)
class Target:
    name: str
    structure: Structure
    build: Callable[[PcpInstance], Formula]
    witness: Callable[[PcpInstance, Sequence[int]], str]
    fragment: tuple[int, int, int]


def _partials(inst: PcpInstance, sol: Sequence[int]) -> list[tuple[str, str]]:
    out = []
    for k in range(1, len(sol) + 1):
        out.append(_rows(inst, sol[:k]))
    return out


def block_witness(inst: PcpInstance, sol: Sequence[int]) -> str:
    """Encoded partial rows of `sol`: top, small separator, bottom, each
    pair framed by big separators."""
    return BIG + "".join(n_encode(a) + SMALL + n_encode(b) + BIG
                         for a, b in _partials(inst, sol))


def growing_witness(inst: PcpInstance, sol: Sequence[int]) -> str:
    """Like `block_witness`, but the k-th big separator is 0 1^(4+k) 0."""
    out = [block(5)]
    for k, (a, b) in enumerate(_partials(inst, sol), 1):
        out.append(n_encode(a) + SMALL + n_encode(b) + block(5 + k))
    return "".join(out)


TARGETS = {
    "d302": Target("d302", Structure.D, reduce_D_302, block_witness, (3, 0, 2)),
    "b121": Target("b121", Structure.B, reduce_B_121, block_witness, (1, 2, 1)),
    "b102": Target("b102", Structure.B, reduce_B_102, block_witness, (1, 0, 2)),
    "d411": Target("d411", Structure.D, reduce_D_411, growing_witness, (4, 1, 1)),
}


def check_with_witness(target: Target, inst: PcpInstance, u: str,
                       max_steps: int = 2_000_000) -> Verdict:
    """Truth of the reduction's body with `u` supplied as the outer witness."""
    phi = target.build(inst)
    assert isinstance(phi, Exists) and phi.var == "u"
    return evaluate(phi.body, target.structure, {"u": u}, budget=len(u),
                    max_steps=max_steps, refute=True)


# ---------------------------------------------------------- crosscheck


@dataclass
class CrosscheckReport:
    instance: PcpInstance
    solution: PcpSolution | None
    seq_bound: int
    budget: int
    # per target: "true", "false", "unknown" or "budget-limited"
    verdicts: dict[str, str] = field(default_factory=dict)
    witnesses: dict[str, str] = field(default_factory=dict)

    @property
    def contradiction(self) -> bool:
        """A sentence verified True although no solution was found."""
        return self.solution is None and "true" in self.verdicts.values()

    @property
    def agree(self) -> bool:
        if self.solution is None:
            return not self.contradiction
        return all(v in ("true", "budget-limited") for v in self.verdicts.values())

    def to_json(self) -> dict:
        return {
            "instance": [list(p) for p in self.instance.pairs],
            "solution": list(self.solution) if self.solution else None,
            "seq_bound": self.seq_bound,
            "budget": self.budget,
            "verdicts": self.verdicts,
            "agree": self.agree,
            "contradiction": self.contradiction,
        }


def crosscheck(inst: PcpInstance, budget: int, seq_bound: int = 8,
               max_steps: int = 200_000, witness_steps: int = 500_000) -> CrosscheckReport:
    """Compare the PCP oracle with the four sentences.

    With a solution at hand each sentence is checked on the witness string
    built from it (the string may be longer than `budget`); without one,
    each sentence gets a budgeted search, where running out of effort is
    reported as budget-limited and never as falsity.
    """
    found = solve_pcp(inst, seq_bound)
    sol = None if isinstance(found, NoneWithinBound) else found
    report = CrosscheckReport(inst, sol, seq_bound, budget)
    for name, target in TARGETS.items():
        if sol is not None:
            u = target.witness(inst, sol)
            report.witnesses[name] = u
            verdict = check_with_witness(target, inst, u, max_steps=witness_steps)
        else:
            verdict = evaluate(target.build(inst), target.structure, budget=budget,
                               max_steps=max_steps)
        if verdict.value is None:
            report.verdicts[name] = "budget-limited"
        else:
            report.verdicts[name] = "true" if verdict.value else "false"
    return report


def fragments(inst: PcpInstance) -> dict[str, tuple[int, int, int] | None]:
    out = {}
    for name, target in TARGETS.items():
        c = classify(target.build(inst))
        out[name] = None if c is None else tuple(c)
    return out
