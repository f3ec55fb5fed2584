"""Expression AST: interning, algebra helpers, and the reference evaluator."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerflow import (
    Add, Const, Cos, Div, Exp, Log, Mul, Neg, Pow, Sin, Sqrt, Sub, Var,
    differentiate, evaluate, free_vars, parse, simplify, substitute, to_str,
)
from finslerflow.errors import EvaluationDomainError, UnboundVariableError


class TestInterning:
    def test_identical_nodes_share_identity(self):
        a = Add(Var("x1"), Const(2.0))
        b = Add(Var("x1"), Const(2.0))
        assert a is b

    def test_distinct_nodes_differ(self):
        assert Add(Var("x1"), Const(2.0)) is not Add(Var("x1"), Const(3.0))

    def test_operator_sugar_builds_same_nodes(self):
        x = Var("x1")
        assert x + 2 is Add(x, Const(2.0))
        assert x * x is Mul(x, x)
        assert -x is Neg(x)
        assert x ** 3 is Pow(x, 3)

    def test_pow_exponent_types(self):
        x = Var("x1")
        assert Pow(x, 2).exponent == Fraction(2)
        assert Pow(x, Fraction(1, 2)).exponent == Fraction(1, 2)
        with pytest.raises(TypeError):
            Pow(x, 1.5)


class TestEvaluate:
    def test_arithmetic(self):
        e = (Var("x1") + 2) * Var("y1") / 4
        assert evaluate(e, {"x1": 2.0, "y1": 3.0}) == 3.0

    def test_functions(self):
        b = {"x1": 0.7}
        assert evaluate(Sin(Var("x1")), b) == math.sin(0.7)
        assert evaluate(Exp(Var("x1")), b) == math.exp(0.7)
        assert evaluate(Log(Var("x1")), b) == math.log(0.7)
        assert evaluate(Sqrt(Var("x1")), b) == math.sqrt(0.7)

    def test_unbound_variable(self):
        with pytest.raises(UnboundVariableError):
            evaluate(Var("zz"), {"x1": 1.0})

    def test_domain_faults(self):
        with pytest.raises(EvaluationDomainError):
            evaluate(Div(Const(1.0), Var("x1")), {"x1": 0.0})
        with pytest.raises(EvaluationDomainError):
            evaluate(Log(Var("x1")), {"x1": -1.0})
        with pytest.raises(EvaluationDomainError):
            evaluate(Sqrt(Var("x1")), {"x1": -1.0})

    def test_fractional_pow_negative_base(self):
        with pytest.raises(EvaluationDomainError):
            evaluate(Pow(Var("x1"), Fraction(1, 2)), {"x1": -2.0})


class TestFreeVars:
    def test_collects_names(self):
        e = parse("x1*y2 + sin(a)")
        assert free_vars(e) == {"x1", "y2", "a"}

    def test_const_has_none(self):
        assert free_vars(Const(3.0)) == set()


class TestSubstitute:
    def test_var_replacement(self):
        e = parse("x1^2 + y1")
        out = substitute(e, {"x1": parse("2*u"), "y1": Const(1.0)})
        assert evaluate(out, {"u": 3.0}) == 37.0

    def test_no_op_returns_same_node(self):
        e = parse("x1 + y1")
        assert substitute(e, {"zz": Const(0.0)}) is e


class TestDifferentiate:
    def test_polynomial(self):
        d = simplify(differentiate(parse("x1^3"), "x1"))
        assert evaluate(d, {"x1": 2.0}) == 12.0

    def test_chain_rule(self):
        d = differentiate(parse("sin(x1^2)"), "x1")
        x = 0.8
        assert evaluate(d, {"x1": x}) == pytest.approx(
            2 * x * math.cos(x * x), rel=1e-15)

    def test_quotient(self):
        d = differentiate(parse("x1 / (1 + x1^2)"), "x1")
        x = 0.3
        expected = (1 - x * x) / (1 + x * x) ** 2
        assert evaluate(d, {"x1": x}) == pytest.approx(expected, rel=1e-14)

    def test_other_var_is_zero(self):
        d = simplify(differentiate(parse("x1^2"), "y1"))
        assert d is Const(0.0)


class TestSimplify:
    def test_constant_folding(self):
        assert simplify(parse("2*3 + 1")) is Const(7.0)

    def test_zero_and_one_elimination(self):
        x = Var("x1")
        assert simplify(Add(x, Const(0.0))) is x
        assert simplify(Mul(x, Const(1.0))) is x
        assert simplify(Mul(x, Const(0.0))) is Const(0.0)

    def test_idempotent(self):
        e = simplify(parse("(x1 + 0)*(1*y1) + x1^2*0"))
        assert simplify(e) is e


# value-preservation checked over random small expression trees
_LEAVES = st.one_of(
    st.sampled_from([Var("x1"), Var("y1")]),
    st.floats(min_value=-3, max_value=3, allow_nan=False).map(
        lambda v: Const(round(v, 3))),
)


def _combine(children):
    a, b = children
    return st.sampled_from([Add(a, b), Sub(a, b), Mul(a, b), Sin(a), Cos(b),
                            Neg(a), Pow(a, 2)])


_EXPRS = st.recursive(_LEAVES, lambda s: st.tuples(s, s).flatmap(_combine),
                      max_leaves=12)


@given(e=_EXPRS, x=st.floats(-2, 2, allow_nan=False),
       y=st.floats(-2, 2, allow_nan=False))
@settings(max_examples=150, deadline=None)
def test_simplify_preserves_value(e, x, y):
    b = {"x1": x, "y1": y}
    v0 = evaluate(e, b)
    v1 = evaluate(simplify(e), b)
    assert v1 == pytest.approx(v0, rel=1e-9, abs=1e-9)


@given(e=_EXPRS, x=st.floats(-2, 2, allow_nan=False),
       y=st.floats(-2, 2, allow_nan=False))
@settings(max_examples=100, deadline=None)
def test_to_str_round_trips_through_parser(e, x, y):
    b = {"x1": x, "y1": y}
    v0 = evaluate(e, b)
    v1 = evaluate(parse(to_str(e)), b)
    assert v1 == pytest.approx(v0, rel=1e-12, abs=1e-12)


@given(e=_EXPRS, x=st.floats(-2, 2, allow_nan=False),
       y=st.floats(-2, 2, allow_nan=False))
@settings(max_examples=100, deadline=None)
def test_derivative_matches_finite_difference(e, x, y):
    h = 1e-5
    d = differentiate(e, "x1")
    left = evaluate(e, {"x1": x - h, "y1": y})
    right = evaluate(e, {"x1": x + h, "y1": y})
    fd = (right - left) / (2 * h)
    sym = evaluate(d, {"x1": x, "y1": y})
    assert sym == pytest.approx(fd, rel=1e-4, abs=1e-4)
