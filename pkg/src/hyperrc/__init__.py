"""Computable hyperreals and the two-capacitor energy audit."""

from .transfield import (
    Classification,
    HyperValue,
    Kind,
    Monomial,
    classify,
    epsilon,
    hv_compare,
    is_in_halo,
    standard_part,
)
from .circuit import INF, CircuitParams, Decay, dissipated, energy_audit

__version__ = "0.1.0"

__all__ = [
    "INF",
    "CircuitParams",
    "Classification",
    "Decay",
    "HyperValue",
    "Kind",
    "Monomial",
    "classify",
    "dissipated",
    "energy_audit",
    "epsilon",
    "hv_compare",
    "is_in_halo",
    "standard_part",
]
