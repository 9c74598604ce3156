"""Limit lemmas for the Kronecker-delta factors and double-sum proof replays.

The two replays evaluate, at finite ``n``, the double sums that appear when
the bibasic summation and the ``new1`` 12V11 summation are derived from
each other by a pair of mutually inverse triangular matrices.  Both double
sums must equal one; a deviation pinpoints a wrong intermediate step rather
than just a wrong final formula.
"""
from __future__ import annotations

import math
from dataclasses import replace

from ..numerics import DOUBLE_DOUBLE, DDComplex, PrecisionContext, Tier, is_mp_value
from ..series import MixedSeriesSpec, V, VWPRatio, den, eval_mixed, num, v_to_mixed
from ..theta import EllipticBase, PochFactor, poch_quotient

#: first extrapolation step of the adaptive limit, per tier
DEFAULT_EPS = {"double": 1e-6, "double-double": 1e-12, "multiprecision": 1e-20}
#: smallest step each fixed tier resolves: 1 + eps must stay far above rounding
_MIN_EPS = {"double": 1e-7, "double-double": 1e-18}
#: agreement of successive extrapolants that ends the adaptive limit
_LIMIT_RTOL = 1e-10
#: extrapolants below this magnitude are taken as a vanishing limit
_LIMIT_ZERO = 1e-40
_LIMIT_STEPS = 40


def _quot(ctx, top, bottom, floor=None):
    return poch_quotient([PochFactor(*t) for t in top], [PochFactor(*t) for t in bottom], ctx, floor=floor)


def _extrapolate(f, eps: float, ctx: PrecisionContext, with_scale: bool = False):
    """Two-point linear extrapolation to ``eps -> 0`` from ``eps`` and ``eps/10``.

    ``f(eps, ctx)`` must form ``1 + eps`` in the tier's arithmetic: in plain
    floats a step below the double epsilon vanishes and a larger one is
    perturbed by rounding, which biases the extrapolation.  The second step
    is likewise divided in the tier's arithmetic: a float ``eps / 10`` is off
    by one rounding, which the slope of ``f`` turns into an O(eps) error.
    ``with_scale`` also returns max |f| / eps, the slope the extrapolation
    cancels.
    """
    e = ctx.num(eps)
    f1 = f(e, ctx)
    f2 = f(e / 10, ctx)
    x = f2 + (f2 - f1) / 9
    if with_scale:
        return x, max(float(abs(f1)) / eps, 10 * float(abs(f2)) / eps)
    return x


def _limit(f, eps: float | None, ctx: PrecisionContext):
    """lim_{eps -> 0} f(eps) by linear extrapolation.

    With an explicit ``eps`` this is the plain two-point rule.  Otherwise the
    extrapolant x(eps) = L + D·eps² is computed for a shrinking sequence of
    steps.  Two successive extrapolants estimate D and L, which give the
    remainder of the latest one and size the next step; the iteration stops
    once the remainder is below ``_LIMIT_RTOL·|L|`` (``_LIMIT_ZERO`` for a
    vanishing limit).  D can be huge -- products such as (k/a²;q²,p²)_n
    contain factors of size |p²/q^(2j)| -- so the step can lie far below what
    double-double resolves.  The evaluation then moves to the multiprecision
    tier, with digits for the step, for the slope f/eps that the
    extrapolation cancels, and for the goal.
    """
    if eps is not None:
        if not 0 < eps <= 1e-4:
            raise ValueError("eps must lie in (0, 1e-4]")
        return _extrapolate(f, eps, ctx)
    step = DEFAULT_EPS[ctx.tier.value]
    prev = prev_step = None
    slope, goal = 1.0, _LIMIT_ZERO
    for _ in range(_LIMIT_STEPS):
        wctx = _context_for_step(step, slope, goal, ctx)
        with wctx.working():
            x, s = _extrapolate(f, step, wctx, with_scale=True)
            x = wctx.num(x)
            slope = max(slope, s)
            nxt = step / 100
            if prev is not None:
                D = float(abs(x - wctx.num(prev))) / (prev_step ** 2 - step ** 2)
                L = float(abs(x)) if D * step ** 2 < float(abs(x)) else 0.0
                goal = max(_LIMIT_RTOL * L, _LIMIT_ZERO)
                if D * step ** 2 <= goal:
                    return _in_tier(x, ctx)
                nxt = min(nxt, max(step * 1e-20, math.sqrt(goal / (100 * D))))
        prev, prev_step, step = x, step, nxt
    return _in_tier(x, ctx)


def _context_for_step(step: float, slope: float, goal: float, ctx: PrecisionContext) -> PrecisionContext:
    if not ctx.is_mp and step >= _MIN_EPS[ctx.tier.value]:
        return ctx
    # rounding of k perturbs eps by ~10^-digits, moving f by slope·10^-digits
    need = math.log10(max(slope, 1.0)) - math.log10(goal) + 10
    digits = max(ctx.digits, int(math.ceil(max(need, -math.log10(step) + 20))))
    if ctx.is_mp:
        return replace(ctx, mp_digits=digits)
    return replace(ctx, tier=Tier.MULTI, mp_digits=digits)


def _in_tier(x, ctx: PrecisionContext):
    if ctx.is_dd and is_mp_value(x):
        return DDComplex.from_mpc(x)
    return ctx.num(x)


def check_delta_limit_even(a, q, p, n: int, r: int, eps: float | None = None,
                           ctx: PrecisionContext = DOUBLE_DOUBLE):
    """lim_{k -> a²} (k/a²;q²,p²)_n / (a²q^(2-2n)/k;q²,p²)_r, by extrapolation in k = a²(1+eps).

    The limit is ``(-1)^n q^(n²-n)`` when ``r == n`` and zero for ``r < n``.
    The vanishing denominator factor is the designed zero, so no singularity
    floor is applied.  ``eps=None`` selects the adaptive step (see
    :func:`_limit`); the result is in the tier of ``ctx``.
    """
    def f(e, c):
        a_, q_, p_ = c.num(a), c.num(q), c.num(p)
        B2 = EllipticBase(q_ * q_, p_ * p_)
        a2 = a_ * a_
        k = a2 * (1 + c.num(e))
        return _quot(c, [(k / a2, B2, n)], [(a2 * q_ ** (2 - 2 * n) / k, B2, r)], floor=0.0)

    return _limit(f, eps, ctx)


def check_delta_limit_odd(a, q, p, n: int, r: int, eps: float | None = None,
                          ctx: PrecisionContext = DOUBLE_DOUBLE):
    """lim_{k -> a} (k/a;q,p)_n / (aq^(1-n)/k;q,p)_(2r), by extrapolation in k = a(1+eps).

    The limit is ``q^C(n,2)`` when ``n == 2r`` and zero for ``2r < n``.
    """
    def f(e, c):
        a_, q_, p_ = c.num(a), c.num(q), c.num(p)
        B = EllipticBase(q_, p_)
        k = a_ * (1 + c.num(e))
        return _quot(c, [(k / a_, B, n)], [(a_ * q_ ** (1 - n) / k, B, 2 * r)], floor=0.0)

    return _limit(f, eps, ctx)


def delta_even_target(q, n: int, r: int, ctx: PrecisionContext):
    return (-1) ** n * ctx.num(q) ** (n * n - n) if r == n else ctx.num(0)


def delta_odd_target(q, n: int, r: int, ctx: PrecisionContext):
    return ctx.num(q) ** (n * (n - 1) // 2) if n == 2 * r else ctx.num(0)


def replay_biba_double_sum(a, b, q, p, n: int, ctx: PrecisionContext):
    """Σ_s (outer coefficient) · 12V11(inner), which must equal 1."""
    a, b, q, p = (ctx.num(x) for x in (a, b, q, p))
    B = EllipticBase(q, p)
    B2 = EllipticBase(q * q, p * p)
    a2 = a * a
    total = ctx.num(0)
    for s in range(n + 1):
        pre = _quot(ctx,
                    [(-a * q, B, 2 * s), (a2 * q ** 3 / b, B2, 2 * s)]
                    + [(x, B2, s) for x in (a2, b / q, a2 * q ** (2 * n) / (b * b), q ** (-2 * n))],
                    [(-a * q / b, B, 2 * s), (a2, B2, 2 * s)]
                    + [(x, B2, s) for x in (q * q, a2 * q ** 3 / b, b * q ** (3 - 2 * n),
                                            a2 * q ** (2 * n + 3) / b)]) * q ** (3 * s)
        ups = [-a * q ** (2 * s + 1), -a * q ** (2 * s + 2), -a * q ** (2 * s + 1) / p, -a * q ** (2 * s + 2) * p,
               q / b, a2 * q ** (2 * n + 2 * s) / (b * b), q ** (2 * s - 2 * n)]
        inner = eval_mixed(v_to_mixed(V(a2 * q ** (4 * s + 1) / b, ups, B2, n - s), ctx), ctx).value
        total = total + pre * inner
    return total


def replay_new1_double_sum(a, b, q, p, n: int, ctx: PrecisionContext):
    """Double sum with a bibasic inner sum in bases (q²,p²) and (q,p); equals 1."""
    a, b, q, p = (ctx.num(x) for x in (a, b, q, p))
    B = EllipticBase(q, p)
    B2 = EllipticBase(q * q, p * p)
    bb = b * b
    total = ctx.num(0)
    for s in range(n + 1):
        lead = bb * q ** (4 * s - 2)
        pre = _quot(ctx,
                    [(lead, EllipticBase(ctx.num(1), p * p), 1), (bb / (q * q), B2, 2 * s),
                     (a, B2, s), (a * q * q / bb, B2, s), (-a * q ** n / b, B, s), (q ** -n, B, s)],
                    [(bb / (q * q), EllipticBase(ctx.num(1), p * p), 1), (a, B2, 2 * s),
                     (q * q, B2, s), (bb, B2, s), (bb * q ** -n / a, B, s), (-b * q ** n, B, s)]) * (bb / a) ** s
        spec = MixedSeriesSpec(
            groups=(num([lead, bb / (a * q * q)], B2), den([q * q, a * q ** (4 * s + 2)], B2),
                    num([-a * q ** (n + s) / b, q ** (s - n)], B), den([bb * q ** (s - n) / a, -b * q ** (n + s)], B)),
            z=q * q, n=n - s, vwp=VWPRatio(lead, B2))
        total = total + pre * eval_mixed(spec, ctx).value
    return total


__all__ = [
    "check_delta_limit_even", "check_delta_limit_odd", "delta_even_target", "delta_odd_target",
    "replay_biba_double_sum", "replay_new1_double_sum",
]
