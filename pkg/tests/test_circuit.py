import math
import random
from fractions import Fraction

import numpy as np
import pytest

from hyperrc import circuit
from hyperrc.circuit import (
    INF,
    BadInterval,
    CircuitParams,
    Decay,
    InvalidParameters,
    charges,
    classify_waveforms,
    current,
    dissipated,
    energy_audit,
    power,
    stored_energy,
)
from hyperrc.transfield import (
    Classification,
    HyperValue,
    Kind,
    Ordering,
    classify,
    epsilon,
    hv_compare,
    standard_part,
)

EPS = epsilon()
INF_POS = Classification(Kind.INFINITESIMAL, 1)
UNL_POS = Classification(Kind.UNLIMITED, 1)
HALF = Decay(Fraction(1, 2))


def const(v):
    return HyperValue.const(v)


@pytest.fixture
def real():
    return CircuitParams(2, 1, 1)


@pytest.fixture
def hyper():
    return CircuitParams(2, 1, EPS)


def test_params_validation():
    with pytest.raises(InvalidParameters):
        CircuitParams(0, 1, 1)
    with pytest.raises(InvalidParameters):
        CircuitParams(2, -1, 1)
    with pytest.raises(InvalidParameters):
        CircuitParams(2, 1, -EPS)
    with pytest.raises(InvalidParameters):
        CircuitParams(2, 1, 1 / EPS)
    with pytest.raises(InvalidParameters):
        CircuitParams(2.0, 1, EPS)
    with pytest.raises(InvalidParameters):
        CircuitParams(2, 1, "1")
    with pytest.raises(InvalidParameters):
        Decay(Fraction(3, 2))
    assert CircuitParams(2, 4, 1).v0 == Fraction(1, 2)


def test_current_examples(real, hyper):
    assert current(real, 0) == const(2)
    i1 = current(hyper, 1)
    assert i1 == 2 * EPS**-1 * circuit.tf.hv_exp(-2 / EPS)
    assert classify(i1) == INF_POS
    i_half = current(hyper, EPS / 2)
    assert classify(i_half) == UNL_POS
    (m, c), = i_half.terms
    assert (m.a, m.b) == (-1, 0) and c == pytest.approx(2 * math.exp(-1), rel=1e-15)


def test_power_examples(real, hyper):
    assert power(real, 0) == const(4)
    assert classify(power(hyper, 1)) == INF_POS
    p4 = power(hyper, EPS / 4)
    assert classify(p4) == UNL_POS
    # oracle: the real formula at eps = 1e-6 divided by the leading term's value
    e = 1e-6
    numeric = 2 * 2 / e * math.exp(-4 * (e / 4) / e)
    assert p4.evaluate(e) == pytest.approx(numeric, rel=1e-12)


def test_switch_closed_at_zero(real):
    assert current(real, -1) == const(0)
    assert power(real, const(-1)) == const(0)
    assert charges(real, -3) == (const(2), const(0))
    with pytest.raises(InvalidParameters):
        current(real, INF)


def test_power_identity(hyper):
    for t in (Fraction(1), EPS / 2, EPS * 3, Fraction(1, 10)):
        i = current(hyper, t)
        assert power(hyper, t) == i * i * hyper.r
    rng = random.Random(3)
    for _ in range(50):
        p = CircuitParams(
            Fraction(rng.randint(1, 9), rng.randint(1, 9)),
            Fraction(rng.randint(1, 9), rng.randint(1, 9)),
            Fraction(rng.randint(1, 9), rng.randint(1, 9)),
        )
        x = Decay(Fraction(rng.randint(0, 9), 9))
        i = current(p, x)
        assert power(p, x) == i * i * const(p.r)


def test_dissipated_examples(real, hyper):
    for p in (real, hyper, CircuitParams(2, 1, Fraction(1, 1000)), CircuitParams(2, 1, 1e-6)):
        total = dissipated(p, 0)
        if isinstance(total, HyperValue):
            assert total == const(1)
        else:
            assert total == pytest.approx(1.0, rel=1e-12)
    tail = dissipated(hyper, 1)
    assert tail == circuit.tf.hv_exp(-4 / EPS)
    assert classify(tail) == INF_POS
    head = dissipated(hyper, 0, Fraction(1, 100))
    assert standard_part(head) == 1
    assert hv_compare(head, const(1)) is Ordering.LESS


def test_dissipated_intervals(real, hyper):
    with pytest.raises(BadInterval):
        dissipated(real, 2, 1)
    with pytest.raises(BadInterval):
        dissipated(real, 1, 1)
    with pytest.raises(BadInterval):
        dissipated(real, INF)
    with pytest.raises(BadInterval):
        dissipated(hyper, EPS, EPS / 2)
    assert dissipated(hyper, EPS / 2, EPS) == dissipated(hyper, EPS / 2) - dissipated(hyper, EPS)


@pytest.mark.parametrize("tau", [Fraction(1, 100), Fraction(1, 10), 1, 10])
def test_halo_concentration(hyper, tau):
    assert classify(dissipated(hyper, tau)) == INF_POS
    assert standard_part(dissipated(hyper, 0, tau)) == 1
    assert hv_compare(dissipated(hyper, 0, tau), const(1)) is Ordering.LESS
    assert hv_compare(dissipated(hyper, tau, 2 * tau), dissipated(hyper, tau)) is Ordering.LESS


def test_decay_time_examples(real):
    assert charges(real, HALF) == (const(Fraction(3, 2)), const(Fraction(1, 2)))
    assert stored_energy(real, HALF) == const(Fraction(5, 4))
    # oracle: the float circuit at the instant with exp(-2t/(rc)) = 1/2
    t = math.log(2) / 2
    q1 = 1 + math.exp(-2 * t)
    assert q1 == pytest.approx(1.5, rel=1e-15)
    assert float(stored_energy(real.as_float(), t)) == pytest.approx(1.25, rel=1e-14)


def test_charges_and_stored_endpoints(real, hyper):
    assert charges(real, 0) == (const(2), const(0))
    assert charges(hyper, INF) == (const(1), const(1))
    assert stored_energy(real, 0) == const(2)
    assert stored_energy(hyper, INF) == const(1)


def test_charge_conservation_random():
    rng = random.Random(11)
    for _ in range(100):
        q0 = Fraction(rng.randint(1, 50), rng.randint(1, 10))
        p = CircuitParams(q0, Fraction(rng.randint(1, 9)), EPS * rng.randint(1, 5))
        t = rng.choice([Fraction(rng.randint(1, 30), 7), Decay(Fraction(rng.randint(0, 7), 7)), INF])
        q1, q2 = charges(p, t)
        assert q1 + q2 == const(q0)


def test_charge_conservation_halo_times():
    # exp(-2k/c) is a transcendental constant here, so the sum holds to rounding
    rng = random.Random(12)
    for _ in range(20):
        p = CircuitParams(Fraction(rng.randint(1, 50), 7), 1, EPS)
        q1, q2 = charges(p, EPS * rng.randint(1, 4))
        assert float((q1 + q2).as_scalar()) == pytest.approx(float(p.q0), rel=1e-14)


@pytest.mark.parametrize("r", [1, EPS])
def test_audit_to_infinity(r):
    audit = energy_audit(CircuitParams(2, 1, r))
    assert (audit.initial_stored, audit.final_stored, audit.dissipated_total) == (
        const(2),
        const(1),
        const(1),
    )
    assert audit.residual.is_zero() and audit.exact


def test_audit_finite_time(real):
    audit = energy_audit(real, HALF)
    assert audit.residual.is_zero()
    assert audit.final_stored + audit.dissipated_total == const(2)
    # oracle: the same instant in floats
    f = energy_audit(real.as_float(), math.log(2) / 2)
    assert abs(f.residual) < 1e-12 * f.initial_stored
    with pytest.raises(InvalidParameters):
        energy_audit(real, 0)


def test_audit_is_exact_even_when_exponential_is_not(real):
    audit = energy_audit(real, Fraction(1, 3))
    assert audit.final_stored.is_approx
    assert audit.residual.is_zero()
    assert circuit.balance_residual_polynomial(real).is_zero()


def test_float_mode_vectorised():
    p = CircuitParams(2.0, 1.0, 0.5)
    t = np.linspace(0, 3, 7)
    np.testing.assert_allclose(power(p, t), current(p, t) ** 2 * 0.5, rtol=1e-14)
    with pytest.raises(InvalidParameters):
        current(p, np.array([-1.0, 1.0]))


def test_classification_table(hyper):
    rows = classify_waveforms(hyper, ["1", "eps/2", "eps/4", "2*eps", "eps^2", "0"])
    by = {row.t_spec: row for row in rows}
    assert (by["1"].class_i, by["1"].class_p) == ("Infinitesimal(+)", "Infinitesimal(+)")
    assert by["1"].st_i == 0 and by["1"].E_0_t == 1 and by["1"].E_t_inf == 0
    for spec in ("eps/2", "eps/4", "2*eps"):
        assert (by[spec].class_i, by[spec].class_p) == ("Unlimited(+)", "Unlimited(+)")
        assert by[spec].st_p is None
    assert "InvalidParameters" in by["eps^2"].error
    assert "InvalidParameters" in by["0"].error
