"""Hyperreals as real sequences ``[a_n]``, checked by sampling.

A :class:`SeqHyper` is a deterministic generator ``n -> a_n``.  There is no
computable nonprincipal ultrafilter, so "``{n : P(a_n)}`` is large" is
approximated by the cofinite filter: a property must hold over a trailing
window of sampled indices.  Sequences whose sign or size does not settle
come back :class:`Undecided`.

Internally every sequence is evaluated as a pair ``(sign, log|a_n|)`` over a
numpy array of indices, so ``n * exp(-4n)`` at ``n = 2**26`` is a perfectly
ordinary number rather than a float underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .transfield import Classification, Kind

__all__ = [
    "APPRECIABLE_BAND",
    "INFINITESIMAL_LADDER",
    "UNLIMITED_LADDER",
    "Decided",
    "NumericOverflow",
    "SamplingPlan",
    "SeqHyper",
    "Undecided",
    "UnknownRule",
    "eventual_sign",
    "seq_classify",
    "seq_from_rule",
]

# Thresholds a sequence must cross by the final sampled index.
INFINITESIMAL_LADDER = tuple(10.0**-k for k in range(0, 7))
UNLIMITED_LADDER = tuple(10.0**k for k in range(0, 7))
APPRECIABLE_BAND = (1e-6, 1e6)
APPRECIABLE_SPREAD = 1e-3


class UnknownRule(ValueError):
    pass


class NumericOverflow(ArithmeticError):
    pass


LogPair = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class SeqHyper:
    """A real sequence standing for the hyperreal ``[a_n]``.

    ``kernel`` maps an array of indices to ``(sign, log|a_n|)``; zero entries
    have sign 0 and log ``-inf``.
    """

    kernel: Callable[[np.ndarray], LogPair] = field(repr=False, compare=False)
    label: str = "?"
    # plain float formula for the primitive rules, so gen(n) avoids exp(log)
    direct: Callable[[int], float] | None = field(default=None, repr=False, compare=False)

    def logeval(self, n) -> LogPair:
        idx = np.asarray(n, dtype=np.float64)
        s, lg = self.kernel(np.atleast_1d(idx))
        return np.asarray(s, dtype=np.float64), np.asarray(lg, dtype=np.float64)

    def gen(self, n: int) -> float:
        if self.direct is not None:
            return float(self.direct(n))
        s, lg = self.logeval([n])
        if s[0] == 0:
            return 0.0
        with np.errstate(over="ignore"):
            return float(s[0] * np.exp(lg[0]))

    __call__ = gen

    def __add__(self, other):
        return seq_add(self, _lift(other))

    def __radd__(self, other):
        return seq_add(_lift(other), self)

    def __sub__(self, other):
        return seq_add(self, seq_neg(_lift(other)))

    def __rsub__(self, other):
        return seq_add(_lift(other), seq_neg(self))

    def __mul__(self, other):
        return seq_mul(self, _lift(other))

    def __rmul__(self, other):
        return seq_mul(_lift(other), self)

    def __truediv__(self, other):
        return seq_div(self, _lift(other))

    def __rtruediv__(self, other):
        return seq_div(_lift(other), self)

    def __neg__(self):
        return seq_neg(self)

    def __pow__(self, k: int):
        if not isinstance(k, int) or isinstance(k, bool):
            raise TypeError("only integer powers are supported")
        return seq_ipow(self, k)

    def exp(self):
        return seq_exp(self)


def _lift(x) -> SeqHyper:
    if isinstance(x, SeqHyper):
        return x
    return seq_constant(x)


# -- primitive rules ---------------------------------------------------------


def seq_constant(a) -> SeqHyper:
    a = float(a)
    s = float(np.sign(a))
    lg = math.log(abs(a)) if a != 0 else -math.inf

    def kernel(n):
        return np.full(n.shape, s), np.full(n.shape, lg)

    return SeqHyper(kernel, f"{a!r}", lambda n: a)


def seq_reciprocal() -> SeqHyper:
    def kernel(n):
        return np.ones(n.shape), -np.log1p(n)

    return SeqHyper(kernel, "1/(n+1)", lambda n: 1.0 / (n + 1))


def seq_power(p) -> SeqHyper:
    p = float(Fraction(p))

    def kernel(n):
        return np.ones(n.shape), p * np.log1p(n)

    return SeqHyper(kernel, f"(n+1)^{p!r}", lambda n: (n + 1.0) ** p)


def seq_neg(x: SeqHyper) -> SeqHyper:
    def kernel(n):
        s, lg = x.kernel(n)
        return -s, lg

    return SeqHyper(kernel, f"-({x.label})")


def seq_mul(x: SeqHyper, y: SeqHyper) -> SeqHyper:
    def kernel(n):
        sx, lx = x.kernel(n)
        sy, ly = y.kernel(n)
        s = sx * sy
        with np.errstate(invalid="ignore"):
            lg = np.where(s == 0, -np.inf, lx + ly)
        return s, lg

    return SeqHyper(kernel, f"({x.label})*({y.label})")


def seq_div(x: SeqHyper, y: SeqHyper) -> SeqHyper:
    def kernel(n):
        sx, lx = x.kernel(n)
        sy, ly = y.kernel(n)
        with np.errstate(invalid="ignore"):
            lg = np.where(sx == 0, -np.inf, lx - ly)
            # a zero divisor has no value: flag it as non-finite
            lg = np.where(sy == 0, np.nan, lg)
        s = np.where(sy == 0, 1.0, sx * sy)
        return s, lg

    return SeqHyper(kernel, f"({x.label})/({y.label})")


def signed_logaddexp(sx, lx, sy, ly) -> LogPair:
    """Sum of two signed log-magnitude arrays."""
    sx, lx, sy, ly = np.broadcast_arrays(sx, lx, sy, ly)
    x_big = (sy == 0) | ((sx != 0) & (lx >= ly))
    s_hi = np.where(x_big, sx, sy)
    l_hi = np.where(x_big, lx, ly)
    s_lo = np.where(x_big, sy, sx)
    l_lo = np.where(x_big, ly, lx)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        ratio = np.where(s_lo == 0, 0.0, np.exp(l_lo - l_hi))
        same = s_hi * s_lo >= 0
        lg = l_hi + np.where(same, np.log1p(ratio), np.log1p(-ratio))
    cancelled = (~same) & (ratio == 1.0)
    s = np.where(cancelled, 0.0, s_hi)
    lg = np.where((s == 0) & ~np.isnan(lg), -np.inf, lg)
    return s, lg


def seq_add(x: SeqHyper, y: SeqHyper) -> SeqHyper:
    def kernel(n):
        sx, lx = x.kernel(n)
        sy, ly = y.kernel(n)
        return signed_logaddexp(sx, lx, sy, ly)

    return SeqHyper(kernel, f"({x.label})+({y.label})")


def seq_exp(x: SeqHyper) -> SeqHyper:
    def kernel(n):
        s, lg = x.kernel(n)
        with np.errstate(over="ignore", invalid="ignore"):
            value = np.where(s == 0, 0.0, s * np.exp(lg))
        return np.ones(n.shape), value

    return SeqHyper(kernel, f"exp({x.label})")


def seq_ipow(x: SeqHyper, k: int) -> SeqHyper:
    if k == 0:
        return seq_constant(1)
    if k < 0:
        return seq_div(seq_constant(1), seq_ipow(x, -k))

    def kernel(n):
        s, lg = x.kernel(n)
        with np.errstate(invalid="ignore"):
            out = np.where(s == 0, -np.inf, k * lg)
        return s**k, out

    return SeqHyper(kernel, f"({x.label})^{k}")


_COMPOSITES = {
    "add": (2, seq_add),
    "sub": (2, lambda x, y: seq_add(x, seq_neg(y))),
    "mul": (2, seq_mul),
    "div": (2, seq_div),
    "neg": (1, seq_neg),
    "exp": (1, seq_exp),
}


def seq_from_rule(rule: str, *params) -> SeqHyper:
    """Build a sequence from a named rule.

    ``reciprocal`` gives ``1/(n+1)``, ``constant(a)`` gives ``a``,
    ``power(p)`` gives ``(n+1)**p``; ``add``/``sub``/``mul``/``div``/``neg``/
    ``exp``/``ipow`` compose existing sequences pointwise.
    """
    if rule == "reciprocal":
        return seq_reciprocal()
    if rule == "constant":
        (a,) = params
        return seq_constant(a)
    if rule == "power":
        (p,) = params
        return seq_power(p)
    if rule == "ipow":
        x, k = params
        return seq_ipow(x, int(k))
    if rule in _COMPOSITES:
        arity, fn = _COMPOSITES[rule]
        if len(params) != arity:
            raise TypeError(f"rule {rule!r} takes {arity} sequence(s)")
        return fn(*(_lift(p) for p in params))
    raise UnknownRule(rule)


# -- verdicts ----------------------------------------------------------------


@dataclass(frozen=True)
class SamplingPlan:
    indices: tuple[int, ...] = tuple(2**k for k in range(4, 27))
    stability_window: int = 6

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ValueError("sampling plan needs at least one index")
        if any(b <= a for a, b in zip(idx, idx[1:])) or idx[0] < 0:
            raise ValueError("sampling indices must be strictly increasing naturals")
        if not 1 <= self.stability_window <= len(idx):
            raise ValueError("stability window must fit inside the plan")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def powers_of_two(cls, lo: int = 4, hi: int = 26, window: int = 6) -> SamplingPlan:
        return cls(tuple(2**k for k in range(lo, hi + 1)), window)


@dataclass(frozen=True)
class Decided:
    value: object  # Classification, or a sign in {-1, 0, 1}

    def __str__(self) -> str:
        if isinstance(self.value, int):
            return f"Decided({'+' if self.value > 0 else '-' if self.value < 0 else '0'})"
        return str(self.value)


@dataclass(frozen=True)
class Undecided:
    reason: str

    def __str__(self) -> str:
        return f"Undecided({self.reason})"


def _sample(x: SeqHyper, plan: SamplingPlan) -> LogPair:
    s, lg = x.logeval(plan.indices)
    bad = np.isnan(lg) | ((s != 0) & ~np.isfinite(lg))
    if bad.any():
        i = plan.indices[int(np.argmax(bad))]
        raise NumericOverflow(f"non-finite value at n={i}")
    return s, lg


def _window_sign(s: np.ndarray, w: int) -> int | None:
    tail = s[-w:]
    if np.all(tail == tail[0]):
        return int(tail[0])
    return None


def eventual_sign(x: SeqHyper, plan: SamplingPlan = SamplingPlan()) -> Decided | Undecided:
    try:
        s, _ = _sample(x, plan)
    except NumericOverflow as exc:
        return Undecided(f"NumericOverflow: {exc}")
    sign = _window_sign(s, plan.stability_window)
    if sign is None:
        return Undecided("sign not eventually constant")
    return Decided(sign)


def seq_classify(x: SeqHyper, plan: SamplingPlan = SamplingPlan()) -> Decided | Undecided:
    """Classify ``[a_n]`` from its trailing samples.

    Only the trailing ``stability_window`` samples are consulted, so two
    sequences that agree from some index on get the same verdict once the
    window lies past that index.
    """
    try:
        s, lg = _sample(x, plan)
    except NumericOverflow as exc:
        return Undecided(f"NumericOverflow: {exc}")
    w = plan.stability_window
    sign = _window_sign(s, w)
    if sign is None:
        return Undecided("sign not eventually constant")
    if sign == 0:
        return Decided(Classification(Kind.ZERO))
    tail = lg[-w:]
    steps = np.diff(tail)
    final = tail[-1]
    if np.all(steps < 0) and final < math.log(min(INFINITESIMAL_LADDER)):
        return Decided(Classification(Kind.INFINITESIMAL, sign))
    if np.all(steps > 0) and final > math.log(max(UNLIMITED_LADDER)):
        return Decided(Classification(Kind.UNLIMITED, sign))
    lo, hi = math.log(APPRECIABLE_BAND[0]), math.log(APPRECIABLE_BAND[1])
    if np.all((tail >= lo) & (tail <= hi)):
        spread = 1.0 - math.exp(float(tail.min() - tail.max()))
        if spread < APPRECIABLE_SPREAD:
            return Decided(Classification(Kind.APPRECIABLE, sign))
    return Undecided("magnitude did not settle within the sampling plan")


# -- agreement with the grid backend -----------------------------------------


class BackendError(RuntimeError):
    def __init__(self, backend: str, error: Exception):
        self.backend = backend
        self.error = error
        super().__init__(f"{backend} backend: {type(error).__name__}: {error}")


@dataclass(frozen=True)
class AgreementReport:
    expr: str
    grid: str
    seq: str
    status: str  # match | contradiction | undecided | coverage-gap

    @property
    def match(self) -> bool:
        return self.status == "match"

    @property
    def decided(self) -> bool:
        return self.status in ("match", "contradiction")

    def to_json(self) -> dict:
        return {
            "expr": self.expr,
            "grid": self.grid,
            "seq": self.seq,
            "match": self.match,
            "status": self.status,
        }


def cross_check(expr, bindings=None, plan: SamplingPlan = SamplingPlan(), K=None) -> AgreementReport:
    """Classify ``expr`` on the grid and as a sequence, and compare.

    ``bindings`` maps names to definitions (see :func:`hyperrc.exprlang.bind`);
    ``eps`` is the grid's infinitesimal and the sequence ``1/(n+1)``.
    A grid value off the representable grid is a coverage gap, and an
    undecided sequence is never counted against the grid.
    """
    from . import exprlang, transfield as tf

    text = expr if isinstance(expr, str) else exprlang.to_source(expr)
    ast = exprlang.parse(expr) if isinstance(expr, str) else expr
    lets = bindings or {}

    grid_cls = None
    try:
        value = exprlang.eval_grid(ast, exprlang.bind(lets, "grid", K), K)
        grid_cls = tf.classify(value)
        grid = str(grid_cls)
    except tf.UnsupportedExponential as exc:
        grid = f"UnsupportedExponential: {exc}"
    except (ArithmeticError, NameError, ValueError) as exc:
        raise BackendError("grid", exc) from exc

    try:
        seq_value = exprlang.eval_seq(ast, exprlang.bind(lets, "seq"))
        verdict = seq_classify(seq_value, plan)
    except (ArithmeticError, NameError, ValueError) as exc:
        raise BackendError("seq", exc) from exc

    if grid_cls is None:
        status = "coverage-gap"
    elif isinstance(verdict, Undecided):
        status = "undecided"
    elif verdict.value == grid_cls:
        status = "match"
    else:
        status = "contradiction"
    return AgreementReport(text, grid, str(verdict), status)
