import random

import pytest

from concatlogic.pcp import (TARGETS, CrosscheckReport, NoneWithinBound, PcpInstance,
                             block_witness, check_with_witness, crosscheck, format_instance,
                             fragments, growing_witness, n_transform, parse_instance,
                             random_instance, solve_pcp, verify_solution)
from concatlogic.semantics import evaluate
from concatlogic.strings import n_encode

TRIVIAL = PcpInstance.of([("0", "0")])
HOPELESS = PcpInstance.of([("0", "1")])
CLASSIC = PcpInstance.of([("1", "101"), ("10", "00"), ("011", "11")])


def test_verify_solution():
    assert verify_solution(TRIVIAL, [1])
    assert not verify_solution(HOPELESS, [1])
    assert verify_solution(CLASSIC, [1, 3, 2, 3])
    assert not verify_solution(CLASSIC, [])
    with pytest.raises(IndexError):
        verify_solution(CLASSIC, [4])


def test_solve_pcp():
    assert solve_pcp(TRIVIAL, 3) == (1,)
    assert solve_pcp(HOPELESS, 10) == NoneWithinBound(10)
    sol = solve_pcp(CLASSIC, 8)
    assert not isinstance(sol, NoneWithinBound) and verify_solution(CLASSIC, sol)


def brute_solvable(inst, bound):
    # plain enumeration of index sequences, shortest first
    from itertools import product
    for k in range(1, bound + 1):
        for seq in product(range(1, len(inst) + 1), repeat=k):
            if verify_solution(inst, seq):
                return True
    return False


def test_solver_matches_enumeration():
    rng = random.Random(2)
    for _ in range(60):
        inst = random_instance(rng, rng.randint(1, 3), max_len=2)
        found = solve_pcp(inst, 5)
        assert (not isinstance(found, NoneWithinBound)) == brute_solvable(inst, 5)


def test_n_transform():
    assert n_transform(TRIVIAL) == PcpInstance.of([("010", "010")])
    assert n_transform(PcpInstance.of([("", "1")])) == PcpInstance.of([("", "0110")])
    rng = random.Random(4)
    for _ in range(10):
        inst = random_instance(rng, 3)
        t = n_transform(inst)
        assert all(n_encode(a) == c and n_encode(b) == d
                   for (a, b), (c, d) in zip(inst.pairs, t.pairs))


def test_instance_text_format():
    text = "# classic\n1 101\n10 00\n011 11\n"
    inst = parse_instance(text)
    assert inst == CLASSIC
    assert parse_instance(format_instance(inst)) == inst
    assert parse_instance("- 1\n") == PcpInstance.of([("", "1")])
    with pytest.raises(ValueError):
        parse_instance("1 2 3\n")


@pytest.mark.parametrize("inst", [TRIVIAL, HOPELESS, CLASSIC])
def test_reduction_fragments(inst):
    assert fragments(inst) == {"d302": (3, 0, 2), "b121": (1, 2, 1),
                               "b102": (1, 0, 2), "d411": (4, 1, 1)}


def test_d302_witness_for_trivial_instance():
    u = block_witness(TRIVIAL, (1,))
    assert u == "0111110" "010" "011110" "010" "0111110"
    assert check_with_witness(TARGETS["d302"], TRIVIAL, u).value is True
    # a wrong witness does not satisfy the body
    assert check_with_witness(TARGETS["d302"], TRIVIAL, u[:-1]).value is not True


def test_growing_witness_separators_lengthen():
    u = growing_witness(CLASSIC, (1, 3, 2, 3))
    for k in range(5, 10):
        assert "0" + "1" * k + "0" in u


def test_unsolvable_instance_is_never_verified():
    for name in ("b121", "d302"):
        t = TARGETS[name]
        v = evaluate(t.build(HOPELESS), t.structure, budget=12, max_steps=20_000)
        assert v.value is not True


def test_crosscheck_trivial_instance_agrees():
    report = crosscheck(TRIVIAL, budget=8)
    assert isinstance(report, CrosscheckReport)
    assert report.solution == (1,) and report.agree
    assert set(report.verdicts.values()) == {"true"}
    assert report.to_json()["agree"] is True


def test_report_flags_contradictions():
    r = CrosscheckReport(HOPELESS, None, 4, 8, {"d302": "true"})
    assert r.contradiction and not r.agree
