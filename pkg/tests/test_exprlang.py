import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings

from hyperrc import exprlang as el
from hyperrc.exprlang import (
    Binary,
    Call,
    ExprSyntaxError,
    Neg,
    Number,
    Symbol,
    UnboundSymbol,
    eval_grid,
    eval_seq,
    fully_parenthesized,
    parse,
    to_source,
)
from hyperrc.transfield import Classification, HyperValue, Kind, Monomial, classify, epsilon

from conftest import asts, random_ast


def test_parse_current_formula():
    ast = parse("q0/(r*c) * exp(-2*t/(r*c))")
    rc = Binary("*", Symbol("r"), Symbol("c"))
    assert ast == Binary(
        "*",
        Binary("/", Symbol("q0"), rc),
        Call("exp", Binary("/", Binary("*", Neg(Number(Fraction(2))), Symbol("t")), rc)),
    )


def test_literals():
    assert parse("3/4") == Number(Fraction(3, 4))
    assert parse("0.25") == Number(Fraction(1, 4))
    assert parse(" 12 ") == Number(Fraction(12))
    assert parse("3/(4)") == Binary("/", Number(Fraction(3)), Number(Fraction(4)))
    assert parse("eps^-2") == Binary("^", Symbol("eps"), Number(Fraction(-2)))


def test_precedence():
    assert parse("a+b*c") == Binary("+", Symbol("a"), Binary("*", Symbol("b"), Symbol("c")))
    assert parse("-a^2") == Neg(Binary("^", Symbol("a"), Number(Fraction(2))))
    assert parse("a-b-c") == Binary("-", Binary("-", Symbol("a"), Symbol("b")), Symbol("c"))
    assert parse("a/b/c") == Binary("/", Binary("/", Symbol("a"), Symbol("b")), Symbol("c"))


@pytest.mark.parametrize(
    "text, offset, expected",
    [
        ("exp(", 4, ("(", "-", "exp", "number", "symbol")),
        ("1 + * 2", 4, ("(", "-", "exp", "number", "symbol")),
        ("(eps", 4, (")",)),
        ("eps^x", 4, ("-", "int")),
        # offsets count UTF-8 bytes: each no-break space is two
        ("\u00a0\u00a0*", 4, ("(", "-", "exp", "number", "symbol")),
    ],
)
def test_syntax_errors(text, offset, expected):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset
    assert info.value.expected == expected
    assert str(info.value).startswith(f"syntax error at offset {offset}: expected one of ")


def test_eval_examples():
    assert eval_grid("eps + eps") == 2 * epsilon()
    with pytest.raises(UnboundSymbol) as info:
        eval_grid("x")
    assert info.value.name == "x"
    with pytest.raises(ZeroDivisionError):
        eval_grid("1/(eps-eps)")


POWER_TEXT = "q0*v0/(r*c) * exp(-4*t/(r*c))"


def test_eval_power_formula_against_numeric_oracle():
    env = {k: HyperValue.const(v) for k, v in dict(q0=2, v0=2, c=1, t=1).items()}
    env["r"] = epsilon()
    v = eval_grid(POWER_TEXT, env)
    assert v.terms == ((Monomial(Fraction(-1), Fraction(-4)), Fraction(4)),)
    assert classify(v) == Classification(Kind.INFINITESIMAL, 1)

    # oracle: evaluate the same text in 60-digit floats at decreasing eps
    mpmath.mp.dps = 60
    values = []
    for k in range(3, 10):
        e = mpmath.mpf(10) ** -k
        num = el.evaluate(
            parse(POWER_TEXT),
            dict(q0=2, v0=2, c=1, t=1, r=e),
            lambda q: mpmath.mpf(q.numerator) / q.denominator,
            mpmath.exp,
        )
        lead = 4 / e * mpmath.exp(-4 / e)
        assert mpmath.almosteq(num, lead, rel_eps=mpmath.mpf(10) ** -50)
        values.append(num)
    assert all(b < a for a, b in zip(values, values[1:]))


def test_eval_seq_uses_reciprocal_for_eps():
    x = eval_seq("1/eps")
    assert [x(n) for n in range(3)] == pytest.approx([1.0, 2.0, 3.0])


def test_bind_sequential_and_eps_power():
    env = el.bind([("h", "eps/2"), ("g", "h*h"), ("s", "eps_power(1/2)")], "grid")
    assert env["g"] == epsilon() * epsilon() / 4
    assert env["s"].terms == ((Monomial(Fraction(1, 2), Fraction(0)), Fraction(1)),)
    seq = el.bind({"s": "eps_power(1/2)"}, "seq")
    assert seq["s"](3) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        el.bind({}, "both")


def test_free_symbols():
    assert el.free_symbols(parse("q0/(r*c) * exp(-2*t/(r*c)) + 3")) == {"q0", "r", "c", "t"}


def test_printer_examples():
    assert to_source(parse("a + (b * c)")) == "a+b*c"
    assert to_source(parse("(a + b) * c")) == "(a+b)*c"
    assert to_source(parse("-(a^2)")) == "-a^2"
    assert to_source(parse("(-a)^2")) == "(-a)^2"
    assert to_source(parse("a - (b - c)")) == "a-(b-c)"
    assert to_source(parse("3/(4)")) == "3/(4)"
    assert to_source(parse("x * (3/4)")) == "x*(3/4)"


def test_round_trip_1000_random_asts():
    rng = random.Random(20240601)
    for _ in range(1000):
        ast = random_ast(rng, 6)
        once = parse(to_source(ast))
        assert once == ast
        assert parse(to_source(once)) == once


@settings(max_examples=200)
@given(asts)
def test_minimal_printer_agrees_with_fully_parenthesized(ast):
    assert parse(fully_parenthesized(ast)) == ast
    assert parse(to_source(ast)) == parse(fully_parenthesized(ast))
    assert len(to_source(ast)) <= len(fully_parenthesized(ast))
