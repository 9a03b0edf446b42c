"""The switching current as a delta family.

``delta_r(t) = i_r(t) / (q0/2)`` integrates to one and piles up at ``t = 0``
as ``r`` shrinks.  Squaring a delta is meaningless, but the energy
``r * integral(i_r**2)`` is a perfectly good closed form as long as ``r``
stays positive, real or infinitesimal.  The square is never formed on its
own: only the combined integrand is integrated.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import circuit
from . import transfield as tf
from .circuit import CircuitParams


class NonPositiveResistance(ValueError):
    pass


def _require_positive(r):
    if isinstance(r, tf.HyperValue):
        positive = tf.classify(r).sign > 0
    else:
        positive = r > 0
    if not positive:
        raise NonPositiveResistance(f"r must be positive, got {r}")


@dataclass(frozen=True)
class DeltaFamily:
    params: CircuitParams

    def __post_init__(self):
        _require_positive(self.params.r)

    @classmethod
    def from_values(cls, q0, c, r) -> DeltaFamily:
        _require_positive(r)
        return cls(CircuitParams(q0, c, r))

    def density(self, t):
        p = self.params
        return circuit.current(p, t) * 2 / p.lift(p.q0)


def _charge_after(p: CircuitParams, T):
    """``integral of i_r over [T, ∞)`` = ``q0/(r c) * (r c/2) * exp(-2T/(r c))``."""
    rc = p.lift(p.r) * p.lift(p.c)
    x = circuit._decay(p, T, 2)
    return p.lift(p.q0) / rc * (rc / 2) * x


def delta_integral(d: DeltaFamily):
    """Total mass of the family; one for every positive ``r``."""
    p = d.params
    return _charge_after(p, 0) * 2 / p.lift(p.q0)


def tail_mass(d: DeltaFamily, T):
    """Mass beyond ``T > 0``, i.e. ``exp(-2T/(r c))``."""
    p = d.params
    if not circuit._before(p, 0, T):
        raise ValueError("tail_mass needs T > 0")
    return _charge_after(p, T) * 2 / p.lift(p.q0)


def delta_squared_energy(d: DeltaFamily):
    """``(q0/2)**2 * r * integral(delta_r**2)`` over ``t >= 0``.

    Evaluated as ``r * (q0/(r c))**2 * (r c/4)``, where ``r c/4`` is the
    integral of ``exp(-4t/(r c))``.  The ``r`` cancels to ``q0 v0/4``.
    """
    p = d.params
    r = p.lift(p.r)
    rc = r * p.lift(p.c)
    peak = p.lift(p.q0) / rc
    return r * peak * peak * (rc / 4)
