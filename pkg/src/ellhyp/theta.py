"""Theta functions, elliptic shifted factorials and the Pochhammer lemmas."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

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
    prod,
    prod_scaled,
    rel_residual,
)

MAX_NOME = 0.95
MAX_DEPTH = 10**6
_CHUNK = 8


@dataclass(frozen=True)
class EllipticBase:
    """Base ``q`` and nome ``p``; ``p == 0`` is the basic (trigonometric) case."""

    q: object
    p: object

    def __post_init__(self):
        if abs(self.p) >= 1:
            raise ValueError(f"nome must satisfy |p| < 1, got |p| = {abs(self.p)}")

    @classmethod
    def make(cls, q, p, ctx: PrecisionContext) -> "EllipticBase":
        return cls(ctx.num(q), ctx.num(p))

    def squared(self) -> "EllipticBase":
        return EllipticBase(self.q * self.q, self.p * self.p)


def _key(x) -> tuple:
    if isinstance(x, DDComplex):
        return x.key()
    if is_mp_value(x):
        return (str(x.real), str(x.imag))
    c = complex(x)
    return (c.real, c.imag)


def truncation_depth(p_abs: float, log_arg_max: float, ctx: PrecisionContext) -> int:
    """Number of factors of each infinite product needed for ``ctx``.

    ``log_arg_max`` is the largest ``|log10 |a||`` in the batch: very small or
    very large arguments delay the point where ``a p^i`` resp. ``p^(i+1)/a``
    drop below the working precision.
    """
    decades = -math.log10(p_abs)
    n = math.ceil((ctx.digits + ctx.theta_truncation_margin + log_arg_max) / decades) + 1
    if n > MAX_DEPTH:
        raise ValueError(f"theta truncation depth {n} exceeds the cap {MAX_DEPTH}")
    return max(n, 1)


@lru_cache(maxsize=256)
def _powers_cached(pkey: tuple, n: int, dd: bool):
    if dd:
        p = DDComplex(*pkey)
        acc = DDComplex(1.0)
        out = [acc]
        for _ in range(n - 1):
            acc = acc * p
            out.append(acc)
        return DDComplex.stack(out)
    p = complex(*pkey)
    out = np.empty(n, dtype=complex)
    acc = 1.0 + 0j
    for i in range(n):
        out[i] = acc
        acc *= p
    return out


def powers(x, n: int, ctx: PrecisionContext):
    """Array ``[1, x, x^2, ..., x^(n-1)]`` in the tier of ``ctx``."""
    if ctx.is_mp:
        x = ctx.num(x)
        out = np.empty(n, dtype=object)
        acc = x * 0 + 1
        for i in range(n):
            out[i] = acc
            acc = acc * x
        return out
    return _powers_cached(_key(ctx.num(x)), n, ctx.is_dd)


def _expand(x):
    if isinstance(x, DDComplex):
        return DDComplex(*(np.asarray(c)[..., None] for c in (x.rh, x.rl, x.ih, x.il)))
    return np.asarray(x)[..., None]


def theta_scaled(a, p, ctx: PrecisionContext):
    """θ(a;p) as ``(mantissa, exponent)`` with value ``mantissa · 2^exponent``.

    Theta values at large or tiny arguments easily exceed the double range
    (log|θ| grows like log²|a| / log(1/|p|)); the exponent keeps products of
    many of them finite.  ``a`` may be a scalar or an array of the context's
    tier; ``p`` is a scalar.  For ``p == 0`` the mantissa is exactly ``1 - a``
    up to a power-of-two scaling.
    """
    a = ctx.num(a)
    p = ctx.num(p)
    p_abs = float(abs(p))
    if p_abs == 0.0:
        return normalize(1 - a)
    if p_abs > MAX_NOME:
        raise ValueError(f"unsupported nome |p| = {p_abs:.3g} > {MAX_NOME}")
    mags = np.asarray(abs(a), dtype=float)
    if np.any(mags == 0):
        raise ValueError("theta(a; p) is undefined at a = 0")
    if ctx.is_mp:
        with ctx.working():
            if isinstance(a, np.ndarray):
                vals = np.empty(a.shape, dtype=object)
                vals.reshape(-1)[:] = [theta_mp(x, p) for x in a.reshape(-1)]
            else:
                vals = theta_mp(a, p)
        return vals, np.zeros(np.shape(vals), dtype=np.int64)
    log_max = float(np.max(np.abs(np.log10(mags))))
    depth = truncation_depth(p_abs, log_max, ctx)
    pw = powers(p, depth + 1, ctx)
    ae = _expand(a)
    first = 1 - ae * pw[:depth]
    # complex division squares |a^chunk|; keep that inside the double range
    chunk = max(1, min(_CHUNK, int(120 // max(log_max, 1.0))))
    # ∏ (1 - p^(i+1)/a) = ∏_chunks ∏ (a - p^(i+1)) / a^chunk; exact zeros survive.
    diff = ae - pw[1:]
    pad = (-depth) % chunk
    if pad:
        diff = concat([diff] + [ae] * pad)
    m = depth + pad
    grouped = diff.reshape(*np.shape(mags), m // chunk, chunk)
    second = prod(grouped) / (ae ** chunk)
    return prod_scaled(concat([first, second]))


def theta(a, p, ctx: PrecisionContext):
    """θ(a;p) = ∏_{i≥0} (1 - a p^i)(1 - p^(i+1)/a).

    ``a`` may be a scalar or an array of the context's tier; ``p`` is a scalar.
    For ``p == 0`` the result is exactly ``1 - a``.  Values beyond the double
    range overflow to infinity; use :func:`theta_scaled` to avoid that.
    """
    a = ctx.num(a)
    if float(abs(ctx.num(p))) == 0.0:
        return 1 - a
    mant, e = theta_scaled(a, p, ctx)
    out = ldexp(mant, e)
    if np.ndim(e) == 0:
        return out.tolist()[0] if isinstance(out, DDComplex) and np.ndim(out.rh) else out
    return out


def theta_mp(a, p):
    """θ(a;p) in the current mpmath precision (``a``, ``p`` are mpc).

    Used by the precision-escalation path of the series engine.
    """
    if p == 0:
        return 1 - a
    import mpmath

    eps = mpmath.ldexp(1, -mpmath.mp.prec - 8)
    scale = max(abs(a), 1 / abs(a))
    out = mpmath.mpc(1)
    pi = mpmath.mpc(1)
    while True:
        out *= (1 - a * pi) * (1 - pi * p / a)
        pi *= p
        if abs(pi) * scale < eps:
            return out


def theta_batch(requests: Sequence[tuple], ctx: PrecisionContext, scaled: bool = False) -> list:
    """Evaluate θ for several ``(arguments, p)`` requests.

    Requests sharing a nome are concatenated into one vectorized product.
    Each ``arguments`` entry is a 1-d array of the context's tier.  With
    ``scaled`` every entry is a ``(mantissa, exponent)`` pair.
    """
    groups: dict[tuple, list[int]] = {}
    for i, (_, p) in enumerate(requests):
        groups.setdefault(_key(ctx.num(p)), []).append(i)
    out: list = [None] * len(requests)
    for idxs in groups.values():
        sizes = [len(requests[i][0]) for i in idxs]
        args = concat([requests[i][0] for i in idxs], axis=0)
        mant, exp = theta_scaled(args, requests[idxs[0]][1], ctx)
        start = 0
        for i, size in zip(idxs, sizes):
            sl = slice(start, start + size)
            out[i] = (mant[sl], exp[sl]) if scaled else ldexp(mant[sl], exp[sl])
            start += size
    return out


def poch_table(params, base: EllipticBase, n: int, ctx: PrecisionContext):
    """Matrix of factors θ(a_i q^j; p), shape ``(len(params), n)``.

    Row i, column j is the multiplier taking (a_i;q,p)_j to (a_i;q,p)_{j+1}.
    """
    mant, e = poch_table_scaled(params, base, n, ctx)
    return ldexp(mant, e)


def poch_table_scaled(params, base: EllipticBase, n: int, ctx: PrecisionContext):
    """:func:`poch_table` as ``(mantissa, exponent)`` arrays."""
    args = _grid(params, base, n, ctx)
    mant, e = theta_batch([(_flat(args), base.p)], ctx, scaled=True)[0]
    return mant.reshape(len(params), n), e.reshape(len(params), n)


def _flat(x):
    return x.reshape(-1) if isinstance(x, DDComplex) else np.ravel(x)


def _grid(params, base: EllipticBase, n: int, ctx: PrecisionContext):
    arr = ctx.array(params)
    qp = powers(base.q, n, ctx)
    return _expand(arr) * (qp.reshape(1, n) if isinstance(qp, DDComplex) else qp[None, :])


def poch(a, base: EllipticBase, n: int, ctx: PrecisionContext):
    """(a;q,p)_n = ∏_{j<n} θ(a q^j; p)."""
    return poch_multi([a], base, n, ctx)


def poch_multi(params: Sequence, base: EllipticBase, n: int, ctx: PrecisionContext):
    """(a_1,...,a_k;q,p)_n."""
    if not len(params):
        raise ValueError("poch_multi needs at least one parameter")
    if n < 0:
        raise ValueError("negative Pochhammer length is not supported")
    if n == 0:
        return ctx.num(1)
    mant, e = poch_table_scaled(params, base, n, ctx)
    m, k = prod_scaled(_flat(mant), e.reshape(-1))
    return _scalar(ldexp(m, k))


def _scalar(x):
    if is_mp_value(x):
        return x[()] if isinstance(x, np.ndarray) else x
    if isinstance(x, DDComplex) and np.ndim(x.rh) == 0:
        return DDComplex(*(float(c) for c in x._parts()))
    return complex(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class PochFactor:
    """One factor (param; base)_n of a closed-form product."""

    param: object
    base: EllipticBase
    n: int


def theta_factor(x, p, ctx: PrecisionContext) -> PochFactor:
    """θ(x;p) written as a length-one Pochhammer factor."""
    return PochFactor(x, EllipticBase(ctx.num(1), ctx.num(p)), 1)


def poch_quotient(num: Sequence[PochFactor], den: Sequence[PochFactor], ctx: PrecisionContext,
                  floor: float | None = None):
    """∏ num / ∏ den, rejecting any denominator theta factor below ``floor``."""
    with ctx.working():
        return _poch_quotient(num, den, ctx, floor)


def _poch_quotient(num, den, ctx, floor):
    floor = ctx.singularity_floor if floor is None else floor
    requests = []
    tags = []
    for tag, facs in ((0, num), (1, den)):
        for f in facs:
            if f.n < 0:
                raise ValueError("negative Pochhammer length is not supported")
            if f.n == 0:
                continue
            args = _grid([f.param], f.base, f.n, ctx)
            requests.append((_flat(args), f.base.p))
            tags.append(tag)
    if not requests:
        return ctx.num(1)
    vals = theta_batch(requests, ctx, scaled=True)
    one = ctx.num(1)

    def side(tag):
        got = [v for v, t in zip(vals, tags) if t == tag]
        if not got:
            return one, 0, None
        mant = concat([g[0] for g in got], axis=0)
        exp = np.concatenate([g[1] for g in got])
        m, e = prod_scaled(mant, exp)
        return m, int(e), (mant, exp)

    nm, ne, _ = side(0)
    dm, de, raw = side(1)
    if raw is not None and floor > 0 and np.any(log2_abs(*raw) < math.log2(floor)):
        raise SingularInput(f"denominator theta factor below singularity floor {floor:g}")
    return _scalar(ldexp(nm / dm, ne - de))


# ---------------------------------------------------------------------------
# rewriting lemmas
# ---------------------------------------------------------------------------

def check_quasi_theta(a, p, ctx: PrecisionContext) -> float:
    """Residual of θ(a;p) = -a θ(ap;p)."""
    a = ctx.num(a)
    p = ctx.num(p)
    return rel_residual(theta(a, p, ctx), -a * theta(a * p, p, ctx))


def check_quasi_poch(a, base: EllipticBase, n: int, ctx: PrecisionContext) -> float:
    """Residual of (a;q,p)_n = (-a)^n q^C(n,2) (ap;q,p)_n."""
    a = ctx.num(a)
    # compared as a quotient: the Pochhammer values themselves may exceed the double range
    lhs = poch_quotient([PochFactor(a, base, n)], [PochFactor(a * base.p, base, n)], ctx)
    return rel_residual(lhs, (-a) ** n * base.q ** (n * (n - 1) // 2))


def double_argument_sides(a, b, base: EllipticBase, n: int, ctx: PrecisionContext):
    """Both sides of (a;q,p)_2n/(b;q,p)_2n = (a,aq,a/p,aqp;q²,p²)_n/(...)_n (b/a)^n."""
    a, b = ctx.num(a), ctx.num(b)
    q, p = base.q, base.p
    lhs = poch_quotient([PochFactor(a, base, 2 * n)], [PochFactor(b, base, 2 * n)], ctx)
    sq = base.squared()
    quad = lambda x: [PochFactor(y, sq, n) for y in (x, x * q, x / p, x * q * p)]
    rhs = poch_quotient(quad(a), quad(b), ctx) * (b / a) ** n
    return lhs, rhs


def check_double_argument(a, b, base: EllipticBase, n: int, ctx: PrecisionContext) -> float:
    return rel_residual(*double_argument_sides(a, b, base, n, ctx))


def quad_ratio_sides(a, b, q, p, n: int, ctx: PrecisionContext):
    """Both sides of (a,-a,a/p,-ap;q,p²)_n/(b,-b,bp,-b/p;q,p²)_n = (a²;q²,p²)_n/(b²;q²,p²)_n (-a/b)^n."""
    a, b, q, p = (ctx.num(x) for x in (a, b, q, p))
    base = EllipticBase(q, p * p)
    sq = EllipticBase(q * q, p * p)
    lhs = poch_quotient([PochFactor(x, base, n) for x in (a, -a, a / p, -a * p)],
                        [PochFactor(x, base, n) for x in (b, -b, b * p, -b / p)], ctx)
    rhs = poch_quotient([PochFactor(a * a, sq, n)], [PochFactor(b * b, sq, n)], ctx) * (-a / b) ** n
    return lhs, rhs


def check_quad_ratio(a, b, q, p, n: int, ctx: PrecisionContext) -> float:
    return rel_residual(*quad_ratio_sides(a, b, q, p, n, ctx))
