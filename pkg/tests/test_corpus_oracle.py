"""Check every shipped corpus entry against plain high-precision evaluation.

Neither backend is involved in the oracle: each expression is evaluated with
mpmath at eps = 1e-6, 1e-9, 1e-12 and its class read off the three values.
"""

import mpmath
import pytest

from hyperrc import exprlang
from hyperrc.cli import default_corpus, read_corpus
from hyperrc.transfield import Kind, UnsupportedExponential, classify

EPS_VALUES = [mpmath.mpf(10) ** -k for k in (6, 9, 12)]


def _values(ast, dps):
    with mpmath.workdps(dps):
        return [
            exprlang.evaluate(
                ast, {"eps": e}, lambda q: mpmath.mpf(q.numerator) / q.denominator, mpmath.exp
            )
            for e in EPS_VALUES
        ]


def numeric_class(expr):
    ast = exprlang.parse(expr)
    vals, finer = _values(ast, 80), _values(ast, 120)
    mags = [abs(v) for v in vals]
    # a true zero is either exact or pure rounding noise, which moves with precision
    if all(v == 0 or abs(v - w) > 1e-3 * abs(w) for v, w in zip(vals, finer)):
        return Kind.ZERO, 0
    sign = 1 if vals[-1] > 0 else -1
    if all(b < a for a, b in zip(mags, mags[1:])) and mags[-1] < 1e-5:
        return Kind.INFINITESIMAL, sign
    if all(b > a for a, b in zip(mags, mags[1:])) and mags[-1] > 1e5:
        return Kind.UNLIMITED, sign
    if 1e-3 < mags[-1] < 1e3 and abs(vals[-1] - vals[-2]) < 1e-6 * mags[-1]:
        return Kind.APPRECIABLE, sign
    return None, sign


@pytest.mark.parametrize("expr", read_corpus(default_corpus()))
def test_corpus_entry_matches_numeric_oracle(expr):
    expected = numeric_class(expr)
    try:
        grid = classify(exprlang.eval_grid(expr))
    except UnsupportedExponential:
        assert expected == (Kind.UNLIMITED, 1)
        return
    assert (grid.kind, grid.sign) == expected
