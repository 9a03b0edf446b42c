"""Two equal capacitors switched together through a resistance ``r``.

Closed-form waveforms for ``t >= 0`` (the switch closes at ``t = 0``)::

    i(t)  = q0/(r c) * exp(-2t/(r c))
    p(t)  = q0 v0/(r c) * exp(-4t/(r c))          v0 = q0/c
    E(tau, t) = q0 v0/4 * (exp(-4 tau/(r c)) - exp(-4t/(r c)))
    q1(t) = q0/2 * (1 + exp(-2t/(r c)))
    q2(t) = q0/2 * (1 - exp(-2t/(r c)))

Everything is generic over the scalar field.  With rational ``q0``, ``c``
and a rational or :class:`~hyperrc.transfield.HyperValue` resistance the
formulas are evaluated exactly on the transseries grid; with float
parameters (or numpy arrays of times) they are evaluated in floating point.

A time is a real scalar, a ``HyperValue``, :data:`INF`, or a :class:`Decay`
that names the instant by its decay factor ``x = exp(-2t/(r c))`` instead
of by ``t``.  ``Decay`` keeps the exponential symbolic, so for instance the
charges at ``Decay(1/2)`` are exact rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable

import numpy as np

from . import transfield as tf
from .transfield import HyperValue, Kind

__all__ = [
    "INF",
    "BadInterval",
    "CircuitParams",
    "Decay",
    "EnergyAudit",
    "InvalidParameters",
    "WaveformRow",
    "charges",
    "classify_waveforms",
    "current",
    "dissipated",
    "energy_audit",
    "parse_time_spec",
    "power",
    "stored_energy",
]


class InvalidParameters(ValueError):
    pass


class BadInterval(ValueError):
    pass


class _Infinity:
    """The interval endpoint ``t = ∞``; not a scalar."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    __str__ = lambda self: "inf"  # noqa: E731


INF = _Infinity()


@dataclass(frozen=True)
class Decay:
    """The instant at which ``exp(-2t/(r c))`` equals ``x`` (``0 <= x <= 1``)."""

    x: object

    def __post_init__(self):
        x = self.x
        if isinstance(x, int):
            object.__setattr__(self, "x", Fraction(x))
        if isinstance(self.x, HyperValue):
            ok = tf.classify(self.x).sign >= 0
        else:
            ok = 0 <= self.x <= 1
        if not ok:
            raise InvalidParameters(f"decay factor must lie in [0, 1], got {x}")


def _positive_real(name: str, v):
    if isinstance(v, bool) or not isinstance(v, (Rational, float, np.floating)):
        raise InvalidParameters(f"{name} must be a real number, got {v!r}")
    if isinstance(v, Rational):
        v = Fraction(v)
    else:
        v = float(v)
        if not math.isfinite(v):
            raise InvalidParameters(f"{name} must be finite")
    if v <= 0:
        raise InvalidParameters(f"{name} must be positive, got {v}")
    return v


@dataclass(frozen=True)
class CircuitParams:
    """``q0`` and ``c`` are positive reals; ``r`` may also be a positive hyperreal."""

    q0: object
    c: object
    r: object
    K: int = field(default_factory=tf.default_truncation)

    def __post_init__(self):
        object.__setattr__(self, "q0", _positive_real("q0", self.q0))
        object.__setattr__(self, "c", _positive_real("c", self.c))
        if isinstance(self.r, HyperValue):
            cls = tf.classify(self.r)
            if cls.sign <= 0 or cls.kind is Kind.UNLIMITED:
                raise InvalidParameters(
                    f"r must be Infinitesimal(+) or Appreciable(+), got {cls}"
                )
            object.__setattr__(self, "K", max(self.K, self.r.K))
        else:
            object.__setattr__(self, "r", _positive_real("r", self.r))
        if self.is_float and isinstance(self.r, HyperValue):
            raise InvalidParameters("float q0/c cannot be combined with a hyperreal r")

    @property
    def is_float(self) -> bool:
        return any(isinstance(v, float) for v in (self.q0, self.c, self.r))

    @property
    def v0(self):
        return self.q0 / self.c

    def lift(self, v):
        """Move a scalar into this circuit's field."""
        if self.is_float:
            if isinstance(v, HyperValue):
                raise InvalidParameters("hyperreal times need exact circuit parameters")
            return v if isinstance(v, np.ndarray) else float(v)
        if isinstance(v, HyperValue):
            return v
        return HyperValue.const(v, self.K)

    def as_float(self) -> CircuitParams:
        if isinstance(self.r, HyperValue):
            raise InvalidParameters("a hyperreal resistance has no float form")
        return CircuitParams(float(self.q0), float(self.c), float(self.r), self.K)

    def zero(self):
        return self.lift(Fraction(0))


def _exp(x):
    if isinstance(x, HyperValue):
        return tf.hv_exp(x)
    if isinstance(x, np.ndarray):
        return np.exp(x)
    return math.exp(x)


def _rc(p: CircuitParams):
    return p.lift(p.r) * p.lift(p.c)


def _is_negative(t) -> bool:
    if isinstance(t, HyperValue):
        return tf.classify(t).sign < 0
    if isinstance(t, np.ndarray):
        return False
    return t < 0


def _check_time(t):
    if t is INF or isinstance(t, Decay):
        return
    if isinstance(t, np.ndarray):
        if np.any(t < 0):
            raise InvalidParameters("times must be >= 0")


def _decay(p: CircuitParams, t, rate: int):
    """``exp(-rate*t/(r c))``; ``rate`` is 2 (current, charge) or 4 (power, energy)."""
    if t is INF:
        return p.zero()
    if isinstance(t, Decay):
        x = p.lift(t.x)
        return x if rate == 2 else x * x
    return _exp(-rate * p.lift(t) / _rc(p))


def current(p: CircuitParams, t):
    if t is INF:
        raise InvalidParameters("current is defined at finite times; use a Decay for limits")
    _check_time(t)
    if not isinstance(t, Decay) and _is_negative(t):
        return p.zero()
    return p.lift(p.q0) / _rc(p) * _decay(p, t, 2)


def power(p: CircuitParams, t):
    if t is INF:
        raise InvalidParameters("power is defined at finite times; use a Decay for limits")
    _check_time(t)
    if not isinstance(t, Decay) and _is_negative(t):
        return p.zero()
    return p.lift(p.q0) * p.lift(p.v0) / _rc(p) * _decay(p, t, 4)


def _before(p: CircuitParams, a, b) -> bool:
    """Whether time ``a`` is strictly earlier than time ``b``."""
    if a is INF:
        return False
    if b is INF:
        return True
    if isinstance(a, Decay) or isinstance(b, Decay):
        # later instants have smaller decay factors
        xa, xb = _decay(p, a, 2), _decay(p, b, 2)
        if p.is_float:
            return xa > xb
        return tf.hv_compare(xa, xb) is tf.Ordering.GREATER
    if isinstance(a, HyperValue) or isinstance(b, HyperValue):
        return tf.hv_compare(p.lift(a), p.lift(b)) is tf.Ordering.LESS
    return a < b


def dissipated(p: CircuitParams, tau, t=INF):
    """Energy dissipated in ``r`` over ``[tau, t)``; ``t`` may be :data:`INF`."""
    if tau is INF:
        raise BadInterval("interval cannot start at infinity")
    _check_time(tau)
    _check_time(t)
    if isinstance(tau, np.ndarray) or isinstance(t, np.ndarray):
        if np.any(np.asarray(tau) >= np.asarray(t if t is not INF else np.inf)):
            raise BadInterval("need tau < t")
    elif not _before(p, tau, t):
        raise BadInterval(f"need tau < t, got tau={tau}, t={t}")
    if not isinstance(tau, Decay) and _is_negative(tau):
        raise BadInterval("interval must start at t >= 0")
    scale = p.lift(p.q0) * p.lift(p.v0) / 4
    return scale * (_decay(p, tau, 4) - _decay(p, t, 4))


def _charges_from_decay(q0, x):
    half = q0 / 2
    return half * (1 + x), half * (1 - x)


def _stored_from_decay(q0, c, x):
    q1, q2 = _charges_from_decay(q0, x)
    return (q1 * q1 + q2 * q2) / (2 * c)


def charges(p: CircuitParams, t):
    """``(q1, q2)``: charge on the initially charged and uncharged capacitor."""
    _check_time(t)
    if not (t is INF or isinstance(t, Decay)) and _is_negative(t):
        return p.lift(p.q0), p.zero()
    return _charges_from_decay(p.lift(p.q0), _decay(p, t, 2))


def stored_energy(p: CircuitParams, t):
    """Total energy ``(q1² + q2²)/(2c)`` held by both capacitors."""
    q1, q2 = charges(p, t)
    return (q1 * q1 + q2 * q2) / (2 * p.lift(p.c))


# symbolic check of the energy balance


class _Poly:
    """Polynomial in the decay factor with coefficients in any field."""

    def __init__(self, coeffs):
        self.coeffs = list(coeffs)

    @staticmethod
    def _of(v):
        return v if isinstance(v, _Poly) else _Poly([v])

    def __add__(self, other):
        o = self._of(other).coeffs
        n = max(len(o), len(self.coeffs))
        pad = lambda cs: cs + [0] * (n - len(cs))  # noqa: E731
        return _Poly([a + b for a, b in zip(pad(self.coeffs), pad(o))])

    __radd__ = __add__

    def __neg__(self):
        return _Poly([-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-self._of(other))

    def __rsub__(self, other):
        return self._of(other) - self

    def __mul__(self, other):
        o = self._of(other).coeffs
        out = [0] * (len(self.coeffs) + len(o) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(o):
                out[i + j] = out[i + j] + a * b
        return _Poly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return _Poly([a / scalar for a in self.coeffs])

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.coeffs)


def balance_residual_polynomial(p: CircuitParams) -> _Poly:
    """``initial - stored(x) - E(0, x)`` as a polynomial in ``x = exp(-2t/(r c))``.

    The dissipated energy uses ``exp(-4t/(r c)) = x²``.  For exact ``q0, c`` the
    polynomial is identically zero.
    """
    x = _Poly([0, 1])
    q0, c = p.q0, p.c
    initial = q0 * q0 / (2 * c)
    energy = (q0 * q0 / c) / 4 * (1 - x * x)
    return initial - _stored_from_decay(q0, c, x) - energy


@dataclass(frozen=True)
class EnergyAudit:
    initial_stored: object
    final_stored: object
    dissipated_total: object
    residual: object
    exact: bool

    def as_dict(self) -> dict:
        return {
            "initial_stored": self.initial_stored,
            "final_stored": self.final_stored,
            "dissipated_total": self.dissipated_total,
            "residual": self.residual,
        }


def energy_audit(p: CircuitParams, t=INF) -> EnergyAudit:
    """Where the initial ``q0 v0/2`` went by time ``t``.

    In exact mode the residual comes from the balance polynomial in the
    decay factor, so it is zero as an identity even when the exponential
    itself is only known to float precision.
    """
    if not _before(p, Fraction(0), t):
        raise InvalidParameters("audit needs t > 0")
    initial = p.lift(p.q0) * p.lift(p.v0) / 2
    final = stored_energy(p, t)
    spent = dissipated(p, Fraction(0), t)
    if p.is_float:
        residual = initial - final - spent
        exact = False
    else:
        poly = balance_residual_polynomial(p)
        residual = p.zero()
        if not poly.is_zero():
            x = _decay(p, t, 2)
            residual = sum((ci * x**i for i, ci in enumerate(poly.coeffs)), p.zero())
        exact = all(
            isinstance(v, HyperValue) and v.exact and not v.is_approx
            for v in (initial, final, spent, residual)
        )
    return EnergyAudit(initial, final, spent, residual, exact)


# classification table


def parse_time_spec(text: str, K: int | None = None):
    """``"<rational>"`` is a real time; ``"<rational>*eps"`` a time in the halo of 0."""
    from .exprlang import eval_grid

    value = eval_grid(text, K=K)
    cls = tf.classify(value)
    if cls.sign <= 0:
        raise InvalidParameters(f"time spec {text!r} must be positive")
    lead_m, _ = value.leading
    if len(value.terms) != 1 or not (lead_m.is_unit() or lead_m == tf.EPS):
        raise InvalidParameters(f"time spec {text!r} must be <rational> or <rational>*eps")
    return value


@dataclass(frozen=True)
class WaveformRow:
    t_spec: str
    class_i: str = ""
    class_p: str = ""
    st_i: object = None
    st_p: object = None
    E_0_t: object = None
    E_t_inf: object = None
    error: str = ""

    COLUMNS = ("t_spec", "class_i", "class_p", "st_i", "st_p", "E_0_t", "E_t_inf")


def _st_or_none(v):
    try:
        return tf.standard_part(v)
    except tf.NoStandardPart:
        return None


def classify_waveforms(p: CircuitParams, times: Iterable) -> list[WaveformRow]:
    """One row per time: classes of ``i`` and ``p``, standard parts, energies.

    Row failures land in the row's ``error`` field instead of aborting.
    """
    if p.is_float:
        raise InvalidParameters("classification needs exact parameters")
    rows = []
    for spec in times:
        label = spec if isinstance(spec, str) else str(spec)
        try:
            t = parse_time_spec(spec, p.K) if isinstance(spec, str) else p.lift(spec)
            i_val, p_val = current(p, t), power(p, t)
            rows.append(
                WaveformRow(
                    t_spec=label,
                    class_i=str(tf.classify(i_val)),
                    class_p=str(tf.classify(p_val)),
                    st_i=_st_or_none(i_val),
                    st_p=_st_or_none(p_val),
                    E_0_t=tf.standard_part(dissipated(p, Fraction(0), t)),
                    E_t_inf=tf.standard_part(dissipated(p, t, INF)),
                )
            )
        except (ArithmeticError, ValueError) as exc:
            rows.append(WaveformRow(t_spec=label, error=f"{type(exc).__name__}: {exc}"))
    return rows
