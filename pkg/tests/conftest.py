import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from hyperrc.exprlang import Binary, Call, Neg, Number, Symbol
from hyperrc.transfield import HyperValue, Monomial

# -- strategies ---------------------------------------------------------------

small_rationals = st.builds(
    Fraction, st.integers(-4, 4), st.sampled_from([1, 2, 3])
)
scale_rationals = st.sampled_from(
    [Fraction(-2), Fraction(-1), Fraction(-1, 2), Fraction(0), Fraction(1, 2), Fraction(1)]
)
coefficients = st.builds(
    Fraction, st.integers(-20, 20).filter(bool), st.integers(1, 6)
)
monomials = st.builds(Monomial, small_rationals, scale_rationals)


@st.composite
def hypervalues(draw, max_terms=3, K=8):
    n = draw(st.integers(0, max_terms))
    terms = [(draw(monomials), draw(coefficients)) for _ in range(n)]
    return HyperValue.from_terms(terms, K)


@st.composite
def limited_hypervalues(draw, max_terms=3, K=8):
    """Values whose leading monomial is not unlimited."""
    n = draw(st.integers(0, max_terms))
    terms = []
    for _ in range(n):
        m = draw(monomials)
        if m.is_unlimited():
            m = Monomial(abs(m.a), -abs(m.b))
        terms.append((m, draw(coefficients)))
    return HyperValue.from_terms(terms, K)


def random_ast(rng: random.Random, depth: int = 6):
    """A random AST in the form the parser produces (no negative literals)."""
    if depth <= 1 or rng.random() < 0.25:
        pick = rng.random()
        if pick < 0.4:
            return Symbol(rng.choice(["eps", "q0", "c", "r", "t", "tau"]))
        if pick < 0.8:
            return Number(Fraction(rng.randint(0, 12)))
        return Number(Fraction(rng.randint(1, 9), rng.randint(2, 9)))
    kind = rng.choice(["+", "-", "*", "/", "^", "neg", "exp"])
    if kind == "neg":
        return Neg(random_ast(rng, depth - 1))
    if kind == "exp":
        return Call("exp", random_ast(rng, depth - 1))
    if kind == "^":
        return Binary("^", random_ast(rng, depth - 1), Number(Fraction(rng.randint(-3, 4))))
    return Binary(kind, random_ast(rng, depth - 1), random_ast(rng, depth - 1))


asts = st.builds(random_ast, st.randoms(use_true_random=False), st.integers(1, 6))


# -- acceptance report --------------------------------------------------------

_ACCEPTANCE: list[tuple[str, bool, str]] = []


class _Criterion:
    def __init__(self, name):
        self.name = name
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        _ACCEPTANCE.append((self.name, exc_type is None, self.detail))
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        line = f"{'PASS' if ok else 'FAIL'}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
