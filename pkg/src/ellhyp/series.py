"""Terminating (mixed-base) elliptic and basic hypergeometric series.

Every sum is expressed as a :class:`MixedSeriesSpec`: groups of Pochhammer
symbols, each with its own base and nome, an optional very-well-poised theta
ratio and a power ``z^k``.  The ``V``, ``phi`` and ``W`` evaluators are thin
translations onto that form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .numerics import (
    DDComplex,
    PrecisionContext,
    SingularInput,
    concat,
    is_mp_value,
    ldexp,
    log2_abs,
    normalize,
    prod_scaled,
    rel_residual,
    to_mp,
)
from .theta import EllipticBase, _grid, powers, theta_batch


class Position(str, Enum):
    NUMERATOR = "numerator"
    DENOMINATOR = "denominator"


@dataclass(frozen=True)
class FactorGroup:
    params: tuple
    base: EllipticBase
    position: Position = Position.NUMERATOR

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "position", Position(self.position))
        if any(abs(x) == 0 for x in self.params):
            raise ValueError("Pochhammer parameters must be nonzero")


def num(params: Sequence, base: EllipticBase) -> FactorGroup:
    return FactorGroup(tuple(params), base, Position.NUMERATOR)


def den(params: Sequence, base: EllipticBase) -> FactorGroup:
    return FactorGroup(tuple(params), base, Position.DENOMINATOR)


@dataclass(frozen=True)
class VWPRatio:
    """The factor θ(a1 q^(2k); p) / θ(a1; p)."""

    a1: object
    base: EllipticBase


@dataclass(frozen=True)
class MixedSeriesSpec:
    groups: tuple
    z: object
    n: int
    vwp: VWPRatio | None = None

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))


class SeriesSum(NamedTuple):
    value: object
    max_term: float
    terms: int
    #: decimal working precision of the final evaluation (tier digits unless escalated)
    working_digits: int = 0


class InvalidSeries(ValueError):
    pass


def _items(x) -> list:
    if isinstance(x, DDComplex):
        return x.tolist()
    if is_mp_value(x):
        return list(np.ravel(x))
    return [complex(v) for v in np.ravel(x)]


def _flat(x):
    return x.reshape(-1) if isinstance(x, DDComplex) else np.ravel(x)


def mixed_terms(spec: MixedSeriesSpec, ctx: PrecisionContext) -> list:
    """The ``n + 1`` terms of the sum (see :func:`_mixed_terms`)."""
    with ctx.working():
        return _mixed_terms(spec, ctx)


def _mixed_terms(spec: MixedSeriesSpec, ctx: PrecisionContext) -> list:
    """The ``n + 1`` terms of the sum, built with incremental Pochhammer updates.

    Theta values travel as ``(mantissa, binary exponent)`` pairs so that the
    individual factors may lie far outside the double range while the terms
    themselves stay representable.
    """
    n = spec.n
    if n < 0:
        raise ValueError("series length must be non-negative")
    one = ctx.num(1)
    if n == 0:
        return [one]
    log_floor = math.log2(ctx.singularity_floor)
    requests = []
    for g in spec.groups:
        requests.append((_flat(_grid(g.params, g.base, n, ctx)), g.base.p))
    if spec.vwp is not None:
        q2 = spec.vwp.base.q * spec.vwp.base.q
        a1 = ctx.num(spec.vwp.a1)
        requests.append((a1 * powers(q2, n + 1, ctx), spec.vwp.base.p))
    values = theta_batch(requests, ctx, scaled=True)

    parts = {Position.NUMERATOR: ([], []), Position.DENOMINATOR: ([], [])}
    for g, (mant, exp) in zip(spec.groups, values):
        m = mant.reshape(len(g.params), n)
        e = exp.reshape(len(g.params), n)
        if g.position is Position.DENOMINATOR:
            small = log2_abs(m, e) < log_floor
            if np.any(small):
                j = int(np.argmax(np.any(small, axis=0)))
                raise SingularInput(f"denominator theta factor below floor at k = {j + 1}", k=j + 1)
        parts[g.position][0].append(m)
        parts[g.position][1].append(e)

    step_m, step_e = None, np.zeros(n, dtype=np.int64)
    for pos, (ms, es) in parts.items():
        if not ms:
            continue
        m, e = prod_scaled(concat(ms, axis=0), np.concatenate(es, axis=0), axis=0)
        if pos is Position.NUMERATOR:
            step_m = m if step_m is None else step_m * m
            step_e = step_e + e
        else:
            step_m = 1 / m if step_m is None else step_m / m
            step_e = step_e - e
    z = ctx.num(spec.z)
    step_m = step_m * z if step_m is not None else _broadcast(z, n, ctx)

    # running product of the step ratios, renormalized at every step
    acc_m, acc_e = normalize(concat([_broadcast(one, 1, ctx), step_m], axis=0))
    acc_e = np.concatenate([[0], step_e]) + acc_e
    mants = acc_m.tolist() if isinstance(acc_m, DDComplex) else list(acc_m)
    exps = acc_e.tolist()
    run_m, run_e = mants[0], exps[0]
    cum_m, cum_e = [run_m], [run_e]
    for mk, ek in zip(mants[1:], exps[1:]):
        x, de = normalize(run_m * mk)
        run_m, run_e = x, run_e + ek + int(de)
        cum_m.append(run_m)
        cum_e.append(run_e)

    if spec.vwp is not None:
        wm, we = values[-1]
        if log2_abs(wm[0], we[0]) < log_floor:
            raise SingularInput("very-well-poised denominator theta(a1; p) below floor", k=0)
        w_m = _items(wm / wm[0])
        w_e = (we - we[0]).tolist()
        cum_m = [cum_m[0]] + [t * w for t, w in zip(cum_m[1:], w_m[1:])]
        cum_e = [cum_e[0]] + [t + w for t, w in zip(cum_e[1:], w_e[1:])]
    return [ldexp(m, int(e)) for m, e in zip(cum_m, cum_e)]


def _broadcast(x, n: int, ctx: PrecisionContext):
    return ctx.array([x] * n)


def eval_mixed(spec: MixedSeriesSpec, ctx: PrecisionContext) -> SeriesSum:
    """Sum of ``spec`` over k = 0..n, with the largest term magnitude.

    If the estimated relative error ``(n+1) · u · max_term / |sum|`` exceeds
    ``ctx.accuracy_goal``, the sum is recomputed in multiprecision with enough
    extra digits to absorb the cancellation; the value returned is then
    correctly rounded to the context's tier.
    """
    with ctx.working():
        terms = _mixed_terms(spec, ctx)
        total = terms[0]
        for t in terms[1:]:
            total = total + t
    max_term = max(float(abs(t)) for t in terms)
    digits = ctx.digits
    loss = _cancellation(total, max_term, len(terms), ctx.unit_roundoff)
    while ctx.accuracy_goal and loss > ctx.accuracy_goal and digits < ctx.max_escalation_digits:
        digits = min(ctx.max_escalation_digits,
                     digits + int(math.ceil(math.log10(loss / ctx.accuracy_goal))) + 8)
        value, max_mp = _mp_sum(spec, digits)
        total = ctx.num(value) if ctx.is_mp else ctx.num(DDComplex.from_mpc(value))
        max_term = max_mp
        loss = _cancellation(total, max_term, len(terms), 10.0 ** -digits)
    return SeriesSum(total, max_term, len(terms), digits)


def _cancellation(total, max_term: float, count: int, unit: float) -> float:
    mag = float(abs(total))
    if mag == 0.0:
        return math.inf if max_term > 0 else 0.0
    return count * unit * max_term / mag


def _mp_sum(spec: MixedSeriesSpec, dps: int):
    """Incremental evaluation of ``spec`` at ``dps`` decimal digits.

    Returns ``(sum, max_term)``.  Singularity screening has already been done
    by the double or double-double pass.
    """
    import mpmath

    from .theta import theta_mp

    with mpmath.workdps(dps):
        groups = []
        for g in spec.groups:
            groups.append(([to_mp(x) for x in g.params], to_mp(g.base.q), to_mp(g.base.p),
                           g.position is Position.DENOMINATOR))
        z = to_mp(spec.z)
        if spec.vwp is not None:
            a1, vq, vp = to_mp(spec.vwp.a1), to_mp(spec.vwp.base.q), to_mp(spec.vwp.base.p)
            w0 = theta_mp(a1, vp)
            vq2 = vq * vq
            wx = a1
        term = mpmath.mpc(1)
        total = mpmath.mpc(1)
        max_term = mpmath.mpf(1)
        for _ in range(spec.n):
            step = z
            for params, q, p, is_den in groups:
                for i, x in enumerate(params):
                    t = theta_mp(x, p)
                    step = step / t if is_den else step * t
                    params[i] = x * q
            term = term * step
            full = term
            if spec.vwp is not None:
                wx = wx * vq2
                full = term * theta_mp(wx, vp) / w0
            total += full
            max_term = max(max_term, abs(full))
        return +total, float(max_term)


# ---------------------------------------------------------------------------
# r+1 V r
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VSeriesSpec:
    a1: object
    upper_params: tuple
    base: EllipticBase
    n: int

    def __post_init__(self):
        object.__setattr__(self, "upper_params", tuple(self.upper_params))


@dataclass(frozen=True)
class VValidation:
    balanced: bool
    terminating: bool
    r: int


def v_to_mixed(spec: VSeriesSpec, ctx: PrecisionContext, z=None) -> MixedSeriesSpec:
    """Very-well-poised term structure with argument ``z`` (``q`` by default)."""
    a1 = ctx.num(spec.a1)
    q = spec.base.q
    ups = [ctx.num(x) for x in spec.upper_params]
    return MixedSeriesSpec(
        groups=(num([a1, *ups], spec.base), den([q, *(a1 * q / x for x in ups)], spec.base)),
        z=q if z is None else z,
        n=spec.n,
        vwp=VWPRatio(a1, spec.base),
    )


def validate_V(spec: VSeriesSpec, ctx: PrecisionContext, tol: float | None = None) -> VValidation:
    """Check the termination and balancing conditions of an r+1 V r series."""
    tol = ctx.rel_tolerance if tol is None else tol
    r = len(spec.upper_params) + 4
    q = spec.base.q
    target = q ** (-spec.n)
    terminating = any(rel_residual(ctx.num(x), target) <= tol for x in spec.upper_params)
    balanced = False
    if r % 2 == 1:
        lhs = ctx.num(q)
        for x in spec.upper_params:
            lhs = lhs * x
        rhs = (ctx.num(spec.a1) * q) ** ((r - 5) // 2)
        balanced = rel_residual(lhs, rhs) <= tol
    return VValidation(balanced, terminating, r)


def eval_V(spec: VSeriesSpec, ctx: PrecisionContext, validate: bool = True) -> SeriesSum:
    """Evaluate r+1 V r(a1; a6, ..., a_{r+1}; q, p) summed to k = n."""
    if validate:
        v = validate_V(spec, ctx)
        if not v.terminating:
            raise InvalidSeries(f"no upper parameter equals q^-{spec.n}: series does not terminate")
        if not v.balanced:
            raise InvalidSeries(f"{v.r + 1}V{v.r} parameters are not balanced")
    return eval_mixed(v_to_mixed(spec, ctx), ctx)


def V(a1, ups: Sequence, base: EllipticBase, n: int) -> VSeriesSpec:
    return VSeriesSpec(a1, tuple(ups), base, n)


# ---------------------------------------------------------------------------
# basic (p = 0) series
# ---------------------------------------------------------------------------

def phi_to_mixed(upper: Sequence, lower: Sequence, q, z, n: int, ctx: PrecisionContext) -> MixedSeriesSpec:
    base = EllipticBase(ctx.num(q), ctx.num(0))
    return MixedSeriesSpec(groups=(num(upper, base), den([base.q, *lower], base)), z=z, n=n)


def eval_phi(upper: Sequence, lower: Sequence, q, z, n: int, ctx: PrecisionContext) -> SeriesSum:
    """r phi s [upper; lower; q, z] summed to k = n."""
    spec = phi_to_mixed([ctx.num(x) for x in upper], [ctx.num(x) for x in lower], q, z, n, ctx)
    e = 1 + len(lower) - len(upper)
    if not e:
        return eval_mixed(spec, ctx)
    terms = mixed_terms(spec, ctx)
    q = ctx.num(q)
    terms = [t * ((-1) ** k * q ** (k * (k - 1) // 2)) ** e for k, t in enumerate(terms)]
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return SeriesSum(total, max(float(abs(t)) for t in terms), len(terms), ctx.digits)


def w_to_mixed(a1, params: Sequence, q, z, n: int, ctx: PrecisionContext) -> MixedSeriesSpec:
    base = EllipticBase(ctx.num(q), ctx.num(0))
    return v_to_mixed(VSeriesSpec(a1, tuple(params), base, n), ctx, z=ctx.num(z))


def eval_W(a1, params: Sequence, q, z, n: int, ctx: PrecisionContext) -> SeriesSum:
    """r+1 W r(a1; params; q, z) summed to k = n."""
    return eval_mixed(w_to_mixed(a1, params, q, z, n, ctx), ctx)
