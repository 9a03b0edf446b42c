"""Exact computable hyperreals as truncated grid transseries.

A value is a finite sum of terms ``coeff * eps**a * exp(b/eps)`` where ``eps``
is a single formal positive infinitesimal and ``a``, ``b`` are rationals.
Terms are kept sorted from most to least dominant as ``eps -> 0+`` and at
most ``K`` of them are retained; whenever a nonzero term is discarded the
value's ``exact`` flag is cleared.

Coefficients are either :class:`fractions.Fraction` (exact tier) or
``float`` (approximate tier).  Mixing the two promotes to ``float``, which is
just what Python's numeric tower does already.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

__all__ = [
    "DEFAULT_TRUNCATION",
    "Classification",
    "Dominance",
    "HyperValue",
    "Kind",
    "Monomial",
    "NoStandardPart",
    "Ordering",
    "Undecidable",
    "UnsupportedExponential",
    "classify",
    "default_truncation",
    "epsilon",
    "hv_add",
    "hv_compare",
    "hv_div",
    "hv_exp",
    "hv_inv",
    "hv_mul",
    "hv_neg",
    "hv_sub",
    "is_in_halo",
    "mono_dominates",
    "standard_part",
]

DEFAULT_TRUNCATION = 8

Coefficient = Union[Fraction, float]
Scalar = Union[int, Fraction, float]


class UnsupportedExponential(ArithmeticError):
    """The exponential of this argument is not representable on the grid."""


class NoStandardPart(ArithmeticError):
    """Raised when asking for the standard part of an unlimited value."""


def default_truncation() -> int:
    """Truncation order from ``HYPERRC_TRUNCATION`` (default 8)."""
    raw = os.environ.get("HYPERRC_TRUNCATION")
    if raw is None or raw.strip() == "":
        return DEFAULT_TRUNCATION
    k = int(raw)
    if k < 1:
        raise ValueError(f"HYPERRC_TRUNCATION must be >= 1, got {raw!r}")
    return k


def _coeff(x) -> Coefficient:
    """Normalize a scalar into the coefficient tower."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        return x
    try:
        # numpy scalars and friends
        return float(x)
    except (TypeError, ValueError):
        raise TypeError(f"cannot use {type(x).__name__} as a coefficient") from None


def is_exact_coeff(c: Coefficient) -> bool:
    return isinstance(c, Fraction)


def format_rational(q: Fraction) -> str:
    """Always ``p/q``; used by the JSON wire format."""
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text)


# -- monomials ---------------------------------------------------------------


class Dominance(enum.Enum):
    DOMINATES = "dominates"
    DOMINATED = "dominated"
    EQUAL = "equal"


@dataclass(frozen=True, order=False)
class Monomial:
    """The scale element ``eps**a * exp(b/eps)``."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))

    @property
    def key(self) -> tuple[Fraction, Fraction]:
        # ascending sort on this key lists the most dominant monomial first
        return (-self.b, self.a)

    def __mul__(self, other: Monomial) -> Monomial:
        return Monomial(self.a + other.a, self.b + other.b)

    def inverse(self) -> Monomial:
        return Monomial(-self.a, -self.b)

    def is_unit(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_unlimited(self) -> bool:
        return self.b > 0 or (self.b == 0 and self.a < 0)

    def is_infinitesimal(self) -> bool:
        return self.b < 0 or (self.b == 0 and self.a > 0)

    def evaluate(self, eps: float) -> float:
        """Numeric value at a concrete positive ``eps`` (may under/overflow)."""
        return eps ** float(self.a) * math.exp(float(self.b) / eps)

    def log_evaluate(self, eps: float) -> float:
        """``log`` of :meth:`evaluate`, safe from under/overflow."""
        return float(self.a) * math.log(eps) + float(self.b) / eps

    def __str__(self) -> str:
        parts = []
        if self.a == 1:
            parts.append("ε")
        elif self.a != 0:
            parts.append(f"ε^{_fmt_exp(self.a)}")
        if self.b != 0:
            parts.append(f"e^({_fmt_q(self.b)}/ε)")
        return "·".join(parts) if parts else "1"


def _fmt_q(q: Fraction) -> str:
    s = str(q)
    return f"({s})" if "/" in s else s


def _fmt_exp(q: Fraction) -> str:
    s = str(q)
    return f"({s})" if "/" in s else s


UNIT = Monomial()
EPS = Monomial(Fraction(1), Fraction(0))


def mono_dominates(m1: Monomial, m2: Monomial) -> Dominance:
    """Compare two monomials by asymptotic size as ``eps -> 0+``."""
    if m1.key == m2.key:
        return Dominance.EQUAL
    return Dominance.DOMINATES if m1.key < m2.key else Dominance.DOMINATED


# -- classification ----------------------------------------------------------


class Kind(enum.Enum):
    ZERO = "Zero"
    INFINITESIMAL = "Infinitesimal"
    APPRECIABLE = "Appreciable"
    UNLIMITED = "Unlimited"


@dataclass(frozen=True)
class Classification:
    kind: Kind
    sign: int = 0

    def __post_init__(self):
        if self.kind is Kind.ZERO:
            if self.sign != 0:
                raise ValueError("Zero carries no sign")
        elif self.sign not in (1, -1):
            raise ValueError(f"{self.kind.value} needs sign +1 or -1")

    def __str__(self) -> str:
        if self.kind is Kind.ZERO:
            return "Zero"
        return f"{self.kind.value}({'+' if self.sign > 0 else '-'})"

    @classmethod
    def parse(cls, text: str) -> Classification:
        text = text.strip()
        if text == "Zero":
            return cls(Kind.ZERO)
        name, _, rest = text.partition("(")
        return cls(Kind(name), 1 if rest.startswith("+") else -1)

    @property
    def is_limited(self) -> bool:
        return self.kind is not Kind.UNLIMITED


class Ordering(enum.Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"


@dataclass(frozen=True)
class Undecidable:
    """Truncation at ``order`` hides whether the difference is zero."""

    order: int

    def __str__(self) -> str:
        return f"Undecidable(at order {self.order})"


# -- values ------------------------------------------------------------------


Term = tuple[Monomial, Coefficient]


def _normalize(
    items: Iterable[Term], k: int, exact: bool
) -> tuple[tuple[Term, ...], bool]:
    merged: dict[Monomial, Coefficient] = {}
    for m, c in items:
        if m in merged:
            merged[m] = merged[m] + c
        else:
            merged[m] = c
    terms = sorted(
        ((m, c) for m, c in merged.items() if c != 0), key=lambda t: t[0].key
    )
    if len(terms) > k:
        terms = terms[:k]
        exact = False
    return tuple(terms), exact


@dataclass(frozen=True, eq=True, repr=False)
class HyperValue:
    """A truncated transseries; immutable.

    Build values with :meth:`const`, :func:`epsilon` or :meth:`from_terms`
    rather than the raw constructor, which trusts its ``terms`` argument.
    """

    terms: tuple[Term, ...] = ()
    exact: bool = True
    K: int = DEFAULT_TRUNCATION

    # constructors

    @classmethod
    def from_terms(
        cls, items: Iterable[tuple], K: int | None = None, exact: bool = True
    ) -> HyperValue:
        k = default_truncation() if K is None else K
        normalized = ((_as_monomial(m), _coeff(c)) for m, c in items)
        terms, exact = _normalize(normalized, k, exact)
        return cls(terms, exact, k)

    @classmethod
    def const(cls, value: Scalar, K: int | None = None) -> HyperValue:
        return cls.from_terms([(UNIT, value)], K)

    @classmethod
    def monomial(
        cls, a: Scalar = 0, b: Scalar = 0, coeff: Scalar = 1, K: int | None = None
    ) -> HyperValue:
        return cls.from_terms([(Monomial(Fraction(a), Fraction(b)), coeff)], K)

    # inspection

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def leading(self) -> Term | None:
        return self.terms[0] if self.terms else None

    @property
    def is_approx(self) -> bool:
        return any(not is_exact_coeff(c) for _, c in self.terms)

    def coefficient(self, m: Monomial) -> Coefficient:
        for mm, c in self.terms:
            if mm == m:
                return c
        return Fraction(0)

    def as_scalar(self) -> Coefficient | None:
        """The value as a plain coefficient when it is a real constant."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and self.terms[0][0].is_unit():
            return self.terms[0][1]
        return None

    def evaluate(self, eps: float) -> float:
        return sum(float(c) * m.evaluate(eps) for m, c in self.terms)

    def with_order(self, K: int) -> HyperValue:
        terms, exact = _normalize(self.terms, K, self.exact)
        return HyperValue(terms, exact, K)

    # operators

    def _lift(self, other) -> HyperValue:
        if isinstance(other, HyperValue):
            return other
        return HyperValue.const(other, self.K)

    def __add__(self, other):
        try:
            return hv_add(self, self._lift(other))
        except TypeError:
            return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        try:
            return hv_sub(self, self._lift(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        try:
            return hv_sub(self._lift(other), self)
        except TypeError:
            return NotImplemented

    def __mul__(self, other):
        try:
            return hv_mul(self, self._lift(other))
        except TypeError:
            return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            return hv_div(self, self._lift(other))
        except TypeError:
            return NotImplemented

    def __rtruediv__(self, other):
        try:
            return hv_div(self._lift(other), self)
        except TypeError:
            return NotImplemented

    def __neg__(self):
        return hv_neg(self)

    def __pos__(self):
        return self

    def __pow__(self, n: int) -> HyperValue:
        if not isinstance(n, int) or isinstance(n, bool):
            raise TypeError("only integer powers are supported")
        return ipow(self, n)

    def exp(self) -> HyperValue:
        return hv_exp(self)

    # display and wire format

    def __repr__(self) -> str:
        flag = "" if self.exact else ", inexact"
        return f"HyperValue({self}{flag}, K={self.K})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for i, (m, c) in enumerate(self.terms):
            neg = c < 0
            mag = -c if neg else c
            if m.is_unit():
                body = _fmt_coeff(mag)
            elif mag == 1:
                body = str(m)
            else:
                body = f"{_fmt_coeff(mag)}·{m}"
            if i == 0:
                out.append(f"-{body}" if neg else body)
            else:
                out.append(f" - {body}" if neg else f" + {body}")
        s = "".join(out)
        return s if self.exact else s + " + …"

    def to_json(self) -> dict:
        terms = []
        for m, c in self.terms:
            if is_exact_coeff(c):
                coeff = {"exact": format_rational(c)}
            else:
                coeff = {"approx": c}
            terms.append(
                {"a": format_rational(m.a), "b": format_rational(m.b), "coeff": coeff}
            )
        return {"terms": terms, "exact": self.exact}

    @classmethod
    def from_json(cls, data: dict, K: int | None = None) -> HyperValue:
        items = []
        for t in data["terms"]:
            coeff = t["coeff"]
            c = Fraction(coeff["exact"]) if "exact" in coeff else float(coeff["approx"])
            items.append((Monomial(Fraction(t["a"]), Fraction(t["b"])), c))
        return cls.from_terms(items, K, exact=bool(data.get("exact", True)))


def _fmt_coeff(c: Coefficient) -> str:
    if is_exact_coeff(c):
        return str(c)
    return repr(c)


def _as_monomial(m) -> Monomial:
    if isinstance(m, Monomial):
        return m
    a, b = m
    return Monomial(Fraction(a), Fraction(b))


def epsilon(K: int | None = None) -> HyperValue:
    """The canonical positive infinitesimal."""
    return HyperValue.from_terms([(EPS, 1)], K)


# -- field operations --------------------------------------------------------


def _order(x: HyperValue, y: HyperValue) -> int:
    return max(x.K, y.K)


def hv_add(x: HyperValue, y: HyperValue) -> HyperValue:
    k = _order(x, y)
    terms, exact = _normalize(x.terms + y.terms, k, x.exact and y.exact)
    return HyperValue(terms, exact, k)


def hv_neg(x: HyperValue) -> HyperValue:
    return HyperValue(tuple((m, -c) for m, c in x.terms), x.exact, x.K)


def hv_sub(x: HyperValue, y: HyperValue) -> HyperValue:
    return hv_add(x, hv_neg(y))


def hv_mul(x: HyperValue, y: HyperValue) -> HyperValue:
    k = _order(x, y)
    products = [(mx * my, cx * cy) for mx, cx in x.terms for my, cy in y.terms]
    terms, exact = _normalize(products, k, x.exact and y.exact)
    return HyperValue(terms, exact, k)


def _scale(x: HyperValue, m: Monomial, c: Coefficient) -> HyperValue:
    return HyperValue(tuple((mm * m, cc * c) for mm, cc in x.terms), x.exact, x.K)


def _truncated_series(w: HyperValue, coeffs, k: int) -> HyperValue:
    """``sum(coeffs[j] * w**j for j < k)`` with ``w`` infinitesimal.

    Exact iff ``w`` is zero.  Stops early once further powers of ``w`` can
    no longer reach the ``k`` retained terms.
    """
    total = HyperValue.const(coeffs(0), k)
    if w.is_zero():
        return HyperValue(total.terms, w.exact, k)
    power = HyperValue.const(1, k)
    for j in range(1, k):
        power = hv_mul(power, w)
        if power.is_zero():
            break
        if len(total.terms) >= k and power.terms[0][0].key > total.terms[-1][0].key:
            break
        total = hv_add(total, _scale(power, UNIT, coeffs(j)))
    # the series never terminates for nonzero w
    return HyperValue(total.terms, False, k)


def hv_inv(x: HyperValue) -> HyperValue:
    if x.is_zero():
        raise ZeroDivisionError("division by zero hyperreal")
    m, c = x.terms[0]
    inv_m, inv_c = m.inverse(), 1 / c
    # x = c*m*(1 + w) with w infinitesimal
    w = HyperValue(
        tuple((mm * inv_m, cc * inv_c) for mm, cc in x.terms[1:]), x.exact, x.K
    )
    series = _truncated_series(w, lambda j: Fraction((-1) ** j), x.K)
    out = _scale(series, inv_m, inv_c)
    return HyperValue(out.terms, out.exact and x.exact, x.K)


def hv_div(x: HyperValue, y: HyperValue) -> HyperValue:
    if y.is_zero():
        raise ZeroDivisionError("division by zero hyperreal")
    return hv_mul(x, hv_inv(y))


def ipow(x, n: int, one=None):
    """Integer power by repeated squaring; works for any field-like value."""
    if one is None:
        one = HyperValue.const(1, x.K)
    if n < 0:
        return one / ipow(x, -n, one)
    result, base = one, x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


_POLE = Monomial(Fraction(-1), Fraction(0))


def hv_exp(x: HyperValue) -> HyperValue:
    """``exp`` of a value whose unlimited part is a multiple of ``1/eps``."""
    pole_coeff: Coefficient = Fraction(0)
    const: Coefficient = Fraction(0)
    tail = []
    for m, c in x.terms:
        if m.is_unlimited():
            if m != _POLE:
                raise UnsupportedExponential(
                    f"exp of unlimited term {_fmt_coeff(c)}·{m} leaves the grid"
                )
            pole_coeff = c
        elif m.is_unit():
            const = c
        else:
            tail.append((m, c))

    factor: Coefficient = Fraction(1)
    if is_exact_coeff(pole_coeff):
        b = pole_coeff
    else:
        # scale exponent comes from a float: keep the value, mark it approximate
        b = Fraction(pole_coeff)
        factor = 1.0
    if const != 0:
        factor = factor * math.exp(const)

    if factor == 0:
        # e**const underflowed: the value is not zero, just unrepresentable
        return HyperValue((), False, x.K)

    delta = HyperValue(tuple(tail), x.exact, x.K)
    factorials = [math.factorial(j) for j in range(x.K)]
    series = _truncated_series(delta, lambda j: Fraction(1, factorials[j]), x.K)
    out = _scale(series, Monomial(Fraction(0), b), factor)
    return HyperValue(out.terms, out.exact and x.exact, x.K)


# -- order structure ---------------------------------------------------------


def classify(x: HyperValue) -> Classification:
    if x.is_zero():
        return Classification(Kind.ZERO)
    m, c = x.terms[0]
    sign = 1 if c > 0 else -1
    if m.is_unlimited():
        return Classification(Kind.UNLIMITED, sign)
    if m.is_unit():
        return Classification(Kind.APPRECIABLE, sign)
    return Classification(Kind.INFINITESIMAL, sign)


def standard_part(x: HyperValue) -> Coefficient:
    """The real number infinitely close to a limited ``x``."""
    if classify(x).kind is Kind.UNLIMITED:
        raise NoStandardPart(f"{x} is unlimited")
    return x.coefficient(UNIT)


def hv_compare(x: HyperValue, y: HyperValue) -> Ordering | Undecidable:
    d = hv_sub(x, y)
    if d.is_zero():
        if not (x.exact and y.exact):
            return Undecidable(_order(x, y))
        return Ordering.EQUAL
    return Ordering.GREATER if classify(d).sign > 0 else Ordering.LESS


def is_in_halo(x: HyperValue, a: Scalar) -> bool:
    kind = classify(hv_sub(x, HyperValue.const(a, x.K))).kind
    return kind in (Kind.ZERO, Kind.INFINITESIMAL)
