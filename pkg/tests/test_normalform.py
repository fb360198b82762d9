import itertools
import random

from hypothesis import given, settings, strategies as st

from concatlogic.logic import (E, ONE, ZERO, Eq, Exists, Fresh, Var, biteral, cat,
                               classify, conj, parse_formula)
from concatlogic.normalform import (BEXISTS, BFORALL, EXISTS, Hints, Quant, check_shape,
                                    commute_B, join_exists, merge_all, merge_conj,
                                    neq_to_eq, nonprefix_to_eq, nonsubstr_to_formula,
                                    normalize, or_eq_to_eq, or_prefix_to_eq, prefix_gadget,
                                    prefix_to_eq, pull_through_forall, split_merged,
                                    substr_to_eq, swap_bounded_exists)
from concatlogic.semantics import evaluate
from concatlogic.strings import all_strings
from corpus import sentences
from oracle import truth

b = biteral
x, y, u, w = Var("x"), Var("y"), Var("u"), Var("w")


def holds(nf, s, budget=8, steps=20_000):
    return evaluate(nf.to_formula(), s, budget=budget, refute=True, max_steps=steps).value


def test_merge_shape_and_split():
    m = merge_conj(Eq(x, y), Eq(u, w))
    assert m == Eq(cat(x, ZERO, u, x, ONE, u), cat(y, ZERO, w, y, ONE, w))
    assert split_merged(m) == (Eq(x, y), Eq(u, w))
    assert split_merged(Eq(x, y)) is None
    ident = merge_conj(Eq(E, E), Eq(E, E))
    assert truth(ident, "B") and truth(ident, "D")


def test_merge_small_exhaustive():
    words = list(all_strings(2))
    for s1, t1, s2, t2 in itertools.product(words, repeat=4):
        m = merge_conj(Eq(b(s1), b(t1)), Eq(b(s2), b(t2)))
        assert truth(m, "D") == (s1 == t1 and s2 == t2)


def test_merge_all_keeps_every_conjunct():
    rng = random.Random(5)
    for _ in range(50):
        eqs = [Eq(b(p), b(q)) for p, q in
               ((rng.choice(["", "0", "1"]), rng.choice(["", "0", "1"])) for _ in range(5))]
        want = all(truth(e, "B") for e in eqs)
        assert truth(merge_all(eqs), "B") is want


def gadget_holds(uv, wv):
    ys, eqs = prefix_gadget(u, w, Fresh({"u", "w"}))
    body = conj(eqs)
    for v in reversed(ys):
        body = Exists(v, body)
    return evaluate(body, "D", {"u": uv, "w": wv}, budget=8, refute=True).value


def test_gadget_examples():
    ys, eqs = prefix_gadget(u, w, Fresh({"u", "w"}))
    a = {"u": "", "w": "101", ys[0]: "", ys[1]: "0", ys[2]: "", ys[3]: "1"}
    assert all(truth(e, "D", a) for e in eqs)
    assert gadget_holds("0", "0") is False
    assert gadget_holds("", "101") is True


def test_or_prefix_example():
    assert holds(or_prefix_to_eq(b("1"), b("10"), b("1"), b("01")), "D") is True
    assert holds(or_prefix_to_eq(b("11"), b("10"), b("1"), b("01")), "D") is False


def test_inequation_and_disjunction():
    for s in "BD":
        assert holds(neq_to_eq(Eq(ZERO, ONE)), s) is True
        assert holds(neq_to_eq(Eq(E, E)), s) is False
        assert holds(or_eq_to_eq(Eq(ZERO, ZERO), Eq(ONE, ZERO)), s) is True
        assert holds(or_eq_to_eq(Eq(ONE, ZERO), Eq(ONE, ZERO)), s) is False


def test_relation_gadgets():
    nf = prefix_to_eq(b("1"), b("10"))
    assert holds(nf, "D") is True
    assert evaluate(nf.to_formula(), "D", budget=2).witness == {nf.prefix[0].var: "0"}
    assert holds(nonprefix_to_eq(b("1"), b("01")), "D") is True
    assert holds(nonprefix_to_eq(E, b("0")), "D") is False
    assert holds(substr_to_eq(b("1"), b("010")), "B") is True
    assert holds(nonsubstr_to_formula(b("00"), b("0110")), "B") is True
    assert holds(nonsubstr_to_formula(E, b("1")), "B") is False


def test_normalize_examples():
    atom = parse_formula('x = "0"')
    nf = normalize(atom, "D")
    assert nf.prefix == () and nf.matrix == atom
    nf = normalize(parse_formula('"0" = "0" & "1" = "1"'), "D")
    assert isinstance(nf.matrix, Eq) and holds(nf, "D") is True
    f = parse_formula('E x <: "10" . E y . x * y = "101"')
    nf = normalize(f, "D")
    assert classify(f) == (1, 1, 0)
    assert nf.shape().m == nf.shape().k == 0 and not check_shape(nf, "D", classify(f))


def test_b_form_has_one_leading_existential():
    f = parse_formula('E x . E y . x * y = "01"')
    nf = normalize(f, "B")
    assert nf.shape() == (1, 2, 0) and nf.prefix[0].kind == EXISTS
    assert all(q.bound == Var(nf.prefix[0].var) for q in nf.prefix[1:])
    v = evaluate(nf.to_formula(), "B", budget=4, hints=Hints(nf, "B"))
    assert v.value is True


def _naive_commute(prefix, fresh, members):
    prefix = list(prefix)
    while True:
        j = next((i for i in range(1, len(prefix)) if prefix[i].kind == EXISTS), None)
        if j is None:
            return tuple(prefix)
        step = {BEXISTS: swap_bounded_exists, BFORALL: pull_through_forall}.get(
            prefix[j - 1].kind, join_exists)
        prefix = step(prefix, j, fresh, members)


@given(st.lists(st.sampled_from([EXISTS, BEXISTS, BFORALL]), max_size=12))
def test_commute_matches_one_step_rewriting(kinds):
    prefix = [Quant(k, f"a{i}", None if k == EXISTS else Var("t")) for i, k in enumerate(kinds)]
    m1, m2 = {}, {}
    got = commute_B(prefix, Fresh({"t"}), m1)
    assert got == _naive_commute(prefix, Fresh({"t"}), m2) and m1 == m2
    assert all(q.kind != EXISTS for q in got[1:])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from("BD"))
def test_normal_form_preserves_truth(seed, s):
    for f in sentences(seed, 2, max_depth=2, max_bits=3):
        nf = normalize(f, s)
        assert not check_shape(nf, s, classify(f))
        a = evaluate(f, s, budget=8, refute=True, max_steps=20_000).value
        c = evaluate(nf.to_formula(), s, budget=8, refute=True, max_steps=5_000,
                     hints=Hints(nf, s)).value
        assert a is None or c is None or a == c
