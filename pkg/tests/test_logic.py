import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from concatlogic.logic import (E, ONE, ZERO, And, BoundedExists, Concat, Eq, Exists, Implies,
                               Not, ParseError, Rel, Var, biteral,
                               biteral_bits, classify, dumps, expand_bounded, free_vars,
                               from_json, negate, parse_formula, parse_term, show, substitute,
                               to_json)
from concatlogic.pcp import PcpInstance, reduce_D_302
from concatlogic.semantics import evaluate, eval_term
from corpus import sentences

x, y = Var("x"), Var("y")


def test_parse_examples():
    assert parse_formula('"0" <: "0110"') == Rel(biteral("0"), biteral("0110"))
    assert parse_formula('E x <: "01" . x = e') == BoundedExists("x", biteral("01"), Eq(x, E))
    with pytest.raises(ParseError):
        parse_formula("E x . x *")


def test_biterals():
    assert biteral("") == E
    assert biteral("0") == Concat(E, ZERO)
    assert biteral("10") == Concat(Concat(E, ONE), ZERO)
    assert biteral_bits(biteral("0110")) == "0110"
    assert biteral_bits(Concat(x, ZERO)) is None


def test_classify_examples():
    assert classify(Eq(biteral("0"), biteral("0"))) == (0, 0, 0)
    assert classify(reduce_D_302(PcpInstance.of([("0", "0")]))) == (3, 0, 2)
    assert classify(Implies(Eq(E, E), Eq(E, E))) is None
    assert classify(Not(Not(Eq(E, E)))) is None


def test_expand_bounded():
    alpha = Eq(x, E)
    assert expand_bounded(BoundedExists("x", biteral("0"), alpha)) == \
        Exists("x", And(Rel(x, biteral("0")), alpha))
    assert expand_bounded(alpha) == alpha
    nested = parse_formula('E x <: "01" . A y <: x . E z <: y . z = y')
    hand = Exists("x", And(Rel(x, biteral("01")),
                           parse_formula("A y . y <: x -> E z . z <: y & z = y")))
    assert expand_bounded(nested) == hand


def test_substitute():
    assert substitute(Eq(x, E), "x", biteral("0")) == Eq(biteral("0"), E)
    shadow = Exists("x", Eq(x, E))
    assert substitute(shadow, "x", biteral("0")) == shadow


def test_substitute_renames_capturing_binder():
    f = parse_formula("E y . x * y = y * x")
    g = substitute(f, "x", Concat(y, ONE))
    assert isinstance(g, Exists) and g.var != "y"
    assert "y" in free_vars(g)
    rng = random.Random(0)
    for _ in range(20):
        v = "".join(rng.choice("01") for _ in range(rng.randint(0, 3)))
        direct = evaluate(f, "D", {"x": v + "1"}, budget=4).value
        assert evaluate(g, "D", {"y": v}, budget=4).value == direct


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_show_parse_and_json_round_trip(seed):
    for f in sentences(seed, 3):
        assert parse_formula(show(f)) == f
        assert from_json(to_json(f)) == f
        assert from_json(json.loads(dumps(f))) == f


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_negate_flips_truth(seed):
    for f in sentences(seed, 3, allow_unbounded=False):
        g = negate(f)
        assert classify(g) is not None
        for s in "BD":
            assert evaluate(g, s).value is (not evaluate(f, s).value)


def test_string_literal_is_a_biteral():
    t = parse_term('"0110"')
    assert eval_term(t, {}) == "0110"
    assert parse_term('""') == E
