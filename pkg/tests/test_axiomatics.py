import dataclasses
import itertools
import random

import pytest

from concatlogic.axiomatics import (AXIOMS, THEORY_AXIOMS, FailureAt, Ok, Proof, ProofStep,
                                    Refused, axiom, check_proof, desugar, instantiate,
                                    prove_atomic, prove_sigma, prove_term_eq_biteral)
from concatlogic.logic import (E, ONE, ZERO, Concat, Eq, Forall, Not, One, Rel, Var, Zero,
                               biteral, classify, parse_formula, show)
from concatlogic.semantics import evaluate
from corpus import SentenceGen

b = biteral


def test_axiom_transcriptions():
    assert axiom("B4") == parse_formula("A x . A y . ~x * 0 = y * 1")
    assert axiom("D5") == parse_formula("A x . x <: e <-> x = e")
    assert axiom("B1") == parse_formula("A x . x = e * x & x = x * e")
    assert axiom("B8") == parse_formula(
        "A x . A y . x <: 0 * y * 0 <-> x = 0 * y * 0 | x <: 0 * y | x <: y * 0")
    assert len(THEORY_AXIOMS["B"]) == 11 and len(THEORY_AXIOMS["D"]) == 7
    assert all(axiom(f"D{i}") == axiom(f"B{i}") for i in range(1, 5))


@pytest.mark.parametrize("theory", ["B", "D"])
def test_axioms_hold_in_standard_structures(theory):
    # each axiom instance over short strings is true
    words = ["", "0", "1", "01", "10", "11"]
    for ref in THEORY_AXIOMS[theory]:
        names = []
        f = AXIOMS[ref]
        while isinstance(f, Forall):
            names.append(f.var)
            f = f.body
        for vals in itertools.product(words, repeat=len(names)):
            inst = instantiate(ref, {n: b(v) for n, v in zip(names, vals)})
            assert evaluate(inst, theory).value is True, (ref, vals)


def test_term_equals_biteral():
    p = prove_term_eq_biteral(ZERO)
    assert p.goal == Eq(ZERO, Concat(E, ZERO)) and p.steps[0].rule == "AxiomInstance"
    assert check_proof(p)
    p = prove_term_eq_biteral(E)
    assert [s.rule for s in p.steps] == ["Refl"] and check_proof(p)
    t = Concat(b("0"), b("1"))
    p = prove_term_eq_biteral(t, "D")
    assert p.goal == Eq(t, b("01")) and check_proof(p)
    with pytest.raises(ValueError):
        prove_term_eq_biteral(Var("x"))


def test_atomic_examples():
    p = prove_atomic(Not(Eq(ZERO, ONE)), "B")
    assert check_proof(p)
    assert any(s.args.get("ref") == "B4" for s in p.steps)
    p = prove_atomic(Rel(E, E), "B")
    assert check_proof(p) and {s.args.get("ref") for s in p.steps} >= {"B5"}
    p = prove_atomic(Not(Rel(ONE, b("0"))), "D")
    rules = {s.rule for s in p.steps}
    assert check_proof(p) and {"Contrapose", "NegOrIntro"} <= rules
    with pytest.raises(Refused):
        prove_atomic(Eq(ZERO, ONE), "B")
    with pytest.raises(Refused):
        prove_atomic(Rel(b("11"), b("0110")), "D")


def test_sigma_examples():
    p = prove_sigma(parse_formula('E x <: "0" . x = e'), "B")
    assert check_proof(p)
    p = prove_sigma(parse_formula('A x <: "00" . x <: "000"'), "B")
    assert check_proof(p)
    assert sum(s.rule == "BoundedCover" for s in p.steps) >= 2
    with pytest.raises(Refused) as err:
        prove_sigma(parse_formula('"0" = "1"'), "B")
    assert err.value.reason == "false"
    with pytest.raises(Refused) as err:
        prove_sigma(parse_formula('E x . x * "0" = "1"'), "D")
    assert err.value.reason == "unknown"


def test_checker_failures():
    goal = Rel(b("01"), b("01"))
    p = prove_sigma(goal, "B")
    assert check_proof(p) == Ok()
    i = len(p.steps) // 2
    s = p.steps[i]
    flipped = show(s.conclusion).replace("0", "@").replace("1", "0").replace("@", "1")
    bad = Proof(p.theory, p.goal, p.steps[:i] + [
        dataclasses.replace(s, conclusion=parse_formula(flipped))] + p.steps[i + 1:])
    res = check_proof(bad)
    assert isinstance(res, FailureAt) and res.step == s.id
    assert check_proof(Proof("B", goal, [])) == FailureAt(None, "goal-mismatch")
    unknown = Proof("B", Eq(E, E), [ProofStep(1, "Magic", (), Eq(E, E))])
    assert check_proof(unknown).reason == "unknown-rule"
    wrong = Proof("B", Eq(E, E), [ProofStep(1, "AxiomInstance", (), Eq(E, E),
                                            {"ref": "B1", "subst": {"x": E}})])
    assert check_proof(wrong).reason == "wrong-substitution"
    d_only = Proof("B", Eq(E, E), [ProofStep(1, "AxiomInstance", (), axiom("D6").body.body,
                                             {"ref": "D6", "subst": {"x": E, "y": E}})])
    assert not check_proof(d_only)


def test_bounded_existential_goal_is_desugared():
    f = parse_formula('E x <: "0" . x = e')
    assert desugar(f) == parse_formula('E x . x <: "0" & x = e')


def test_json_round_trip():
    p = prove_sigma(parse_formula('(A x <: "01" . E y . y = x * x) | e = "0"'), "D")
    q = Proof.loads(p.dumps())
    assert q.goal == p.goal and [s.conclusion for s in q.steps] == [s.conclusion for s in p.steps]
    assert check_proof(q)


def _mutate(rng, f):
    leaves = []

    def walk(node, path):
        if isinstance(node, (Zero, One)):
            leaves.append(path)
        for k in ("left", "right", "body", "bound"):
            if hasattr(node, k):
                walk(getattr(node, k), path + (k,))

    walk(f, ())
    if not leaves:
        return None

    def rebuild(node, path):
        if not path:
            return ONE if isinstance(node, Zero) else ZERO
        return dataclasses.replace(node, **{path[0]: rebuild(getattr(node, path[0]), path[1:])})

    return rebuild(f, rng.choice(leaves))


def test_mutations_are_rejected():
    rng = random.Random(3)
    proofs = [prove_sigma(parse_formula(t), th) for t, th in [
        ('A x <: "011" . ~x = "00"', "B"), ('E x <: "10" . x * "1" = "11"', "D"),
        ('~"10" <: "0110"', "D"), ('"1" <: "0110" & ~e = "1"', "B")]]
    rejected = 0
    for _ in range(40):
        p = rng.choice(proofs)
        i = rng.randrange(len(p.steps))
        m = _mutate(rng, p.steps[i].conclusion)
        if m is None:
            continue
        steps = list(p.steps)
        steps[i] = dataclasses.replace(steps[i], conclusion=m)
        res = check_proof(Proof(p.theory, p.goal, steps))
        assert not res and res.step in (steps[i].id, None)
        rejected += 1
    assert rejected > 20


@pytest.mark.parametrize("theory", ["B", "D"])
def test_prove_sigma_on_small_corpus(theory):
    gen = SentenceGen(11, allow_unbounded=False, max_depth=3, max_bits=3)
    done = 0
    while done < 25:
        f = gen.sentence()
        if classify(f).n:
            continue
        truth = evaluate(f, theory).value
        if truth:
            p = prove_sigma(f, theory)
            assert check_proof(p)
            assert all(evaluate(s.conclusion, theory).value for s in p.steps)
        else:
            with pytest.raises(Refused):
                prove_sigma(f, theory)
        done += 1
