"""Precision tiers, double-double complex arithmetic, residuals and sampling.

Every numeric value produced by the engine lives in one of two tiers:

* ``double``: native ``complex`` / ``numpy.complex128``.
* ``double-double``: :class:`DDComplex`, a pair of error-free-transformation
  double-double reals (about 32 significant digits).

:class:`DDComplex` stores its four components either as Python floats
(scalars) or as numpy arrays of equal shape.  The arithmetic is written with
plain operators only, so the same code serves single values and whole
vectorized batches (the theta products use the latter).
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1
_TINY = 1e-300


# ---------------------------------------------------------------------------
# error-free transformations (work on floats and on numpy arrays alike)
# ---------------------------------------------------------------------------

def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    t, f = _two_sum(al, bl)
    s, e = _quick_two_sum(s, e + t)
    return _quick_two_sum(s, e + f)


def _dd_mul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    return _quick_two_sum(p, e + (ah * bl + al * bh))


def _dd_div(ah, al, bh, bl):
    q1 = ah / bh
    ph, pl = _dd_mul(q1, 0.0 * q1, bh, bl)
    rh, rl = _dd_add(ah, al, -ph, -pl)
    q2 = rh / bh
    ph, pl = _dd_mul(q2, 0.0 * q2, bh, bl)
    rh, rl = _dd_add(rh, rl, -ph, -pl)
    q3 = rh / bh
    q1, q2 = _quick_two_sum(q1, q2)
    return _dd_add(q1, q2, q3, 0.0 * q3)


class DDComplex:
    """Complex number (or array of them) in double-double precision."""

    __slots__ = ("rh", "rl", "ih", "il")
    __array_ufunc__ = None  # numpy operands defer to the reflected operators

    def __init__(self, rh, rl=0.0, ih=0.0, il=0.0):
        self.rh = rh
        self.rl = rl
        self.ih = ih
        self.il = il

    # -- construction -----------------------------------------------------
    @classmethod
    def coerce(cls, x) -> "DDComplex":
        if isinstance(x, DDComplex):
            return x
        if isinstance(x, np.ndarray):
            x = np.asarray(x, dtype=complex)
            z = np.zeros(x.shape)
            return cls(x.real.copy(), z, x.imag.copy(), z.copy())
        x = complex(x)
        return cls(x.real, 0.0, x.imag, 0.0)

    @classmethod
    def stack(cls, values) -> "DDComplex":
        vs = [cls.coerce(v) for v in values]
        return cls(np.array([v.rh for v in vs], dtype=float),
                   np.array([v.rl for v in vs], dtype=float),
                   np.array([v.ih for v in vs], dtype=float),
                   np.array([v.il for v in vs], dtype=float))

    @classmethod
    def from_mpc(cls, z) -> "DDComplex":
        import mpmath

        with mpmath.workprec(max(mpmath.mp.prec, 128)):
            re, im = mpmath.mpf(z.real), mpmath.mpf(z.imag)
            rh = float(re)
            ih = float(im)
            return cls(rh, float(re - rh), ih, float(im - ih))

    # -- array protocol ---------------------------------------------------
    @property
    def shape(self) -> tuple:
        return np.shape(self.rh)

    def __len__(self) -> int:
        return len(self.rh)

    def __getitem__(self, idx) -> "DDComplex":
        return DDComplex(self.rh[idx], self.rl[idx], self.ih[idx], self.il[idx])

    def tolist(self) -> list["DDComplex"]:
        return [DDComplex(*c) for c in zip(np.ravel(self.rh).tolist(), np.ravel(self.rl).tolist(),
                                           np.ravel(self.ih).tolist(), np.ravel(self.il).tolist())]

    def reshape(self, *shape) -> "DDComplex":
        return DDComplex(*(np.reshape(c, shape) for c in self._parts()))

    def _parts(self):
        return self.rh, self.rl, self.ih, self.il

    # -- arithmetic -------------------------------------------------------
    def __neg__(self):
        return DDComplex(-self.rh, -self.rl, -self.ih, -self.il)

    def __add__(self, other):
        o = DDComplex.coerce(other)
        rh, rl = _dd_add(self.rh, self.rl, o.rh, o.rl)
        ih, il = _dd_add(self.ih, self.il, o.ih, o.il)
        return DDComplex(rh, rl, ih, il)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-DDComplex.coerce(other))

    def __rsub__(self, other):
        return DDComplex.coerce(other) + (-self)

    def __mul__(self, other):
        o = DDComplex.coerce(other)
        ah, al = _dd_mul(self.rh, self.rl, o.rh, o.rl)
        bh, bl = _dd_mul(self.ih, self.il, o.ih, o.il)
        ch, cl = _dd_mul(self.rh, self.rl, o.ih, o.il)
        dh, dl = _dd_mul(self.ih, self.il, o.rh, o.rl)
        rh, rl = _dd_add(ah, al, -bh, -bl)
        ih, il = _dd_add(ch, cl, dh, dl)
        return DDComplex(rh, rl, ih, il)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = DDComplex.coerce(other)
        # a / b = a * conj(b) / |b|^2
        nh, nl = _dd_add(*_dd_mul(o.rh, o.rl, o.rh, o.rl), *_dd_mul(o.ih, o.il, o.ih, o.il))
        ah, al = _dd_mul(self.rh, self.rl, o.rh, o.rl)
        bh, bl = _dd_mul(self.ih, self.il, o.ih, o.il)
        ch, cl = _dd_mul(self.ih, self.il, o.rh, o.rl)
        dh, dl = _dd_mul(self.rh, self.rl, o.ih, o.il)
        rh, rl = _dd_div(*_dd_add(ah, al, bh, bl), nh, nl)
        ih, il = _dd_div(*_dd_add(ch, cl, -dh, -dl), nh, nl)
        return DDComplex(rh, rl, ih, il)

    def __rtruediv__(self, other):
        return DDComplex.coerce(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("DDComplex only supports integer powers")
        k = int(k)
        if k < 0:
            return 1.0 / (self ** -k)
        result = DDComplex(1.0 + 0.0 * self.rh, 0.0 * self.rh, 0.0 * self.rh, 0.0 * self.rh)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __abs__(self):
        return np.hypot(self.rh + self.rl, self.ih + self.il)

    def conjugate(self):
        return DDComplex(self.rh, self.rl, -self.ih, -self.il)

    def is_zero(self) -> bool:
        return bool(np.all((self.rh == 0) & (self.ih == 0)))

    def __complex__(self):
        return complex(self.rh + self.rl, self.ih + self.il)

    def to_complex(self):
        """Round to the double tier (``complex`` or ``complex128`` array)."""
        if np.ndim(self.rh) == 0:
            return complex(self)
        return (self.rh + self.rl) + 1j * (self.ih + self.il)

    def to_mpc(self):
        import mpmath

        with mpmath.workprec(128):
            return mpmath.mpc(mpmath.mpf(float(self.rh)) + float(self.rl),
                              mpmath.mpf(float(self.ih)) + float(self.il))

    def key(self) -> tuple:
        """Hashable exact identity of a scalar value."""
        return (float(self.rh), float(self.rl), float(self.ih), float(self.il))

    def __repr__(self):
        if np.ndim(self.rh) == 0:
            return f"DDComplex({self.rh!r}, {self.rl!r}, {self.ih!r}, {self.il!r})"
        return f"DDComplex(shape={self.shape})"


# ---------------------------------------------------------------------------
# precision policy
# ---------------------------------------------------------------------------

class Tier(str, Enum):
    DOUBLE = "double"
    DOUBLE_DOUBLE = "double-double"
    MULTI = "multiprecision"


_DIGITS = {Tier.DOUBLE: 16, Tier.DOUBLE_DOUBLE: 32}
_DEFAULT_REL_TOL = {Tier.DOUBLE: 1e-8, Tier.DOUBLE_DOUBLE: 1e-18, Tier.MULTI: 1e-18}
_UNIT_ROUNDOFF = {Tier.DOUBLE: 2.0**-53, Tier.DOUBLE_DOUBLE: 2.0**-104}
_DEFAULT_ACCURACY_GOAL = {Tier.DOUBLE: 1e-11, Tier.DOUBLE_DOUBLE: 1e-21, Tier.MULTI: 1e-21}


@dataclass(frozen=True)
class PrecisionContext:
    """Precision tier plus the truncation, tolerance and escalation policy.

    ``accuracy_goal`` is the relative accuracy a series sum must reach.  When
    cancellation among the terms (estimated as ``max_term / |sum|`` times the
    unit roundoff) would exceed it, the sum is recomputed with multiprecision
    arithmetic.  ``None`` picks the tier default; ``0`` disables escalation.

    The ``multiprecision`` tier computes with mpmath at ``mp_digits`` decimal
    digits; its arrays are numpy object arrays of ``mpc``.  It is slow and
    exists for inputs whose conditioning defeats double-double.
    """

    tier: Tier = Tier.DOUBLE_DOUBLE
    theta_truncation_margin: float = 4.0
    rel_tolerance: float | None = None
    abs_tolerance_scale: float = 1e-6
    singularity_floor: float = 1e-5
    accuracy_goal: float | None = None
    max_escalation_digits: int = 160
    mp_digits: int = 64

    def __post_init__(self):
        object.__setattr__(self, "tier", Tier(self.tier))
        if self.rel_tolerance is None:
            object.__setattr__(self, "rel_tolerance", _DEFAULT_REL_TOL[self.tier])
        if self.accuracy_goal is None:
            object.__setattr__(self, "accuracy_goal", _DEFAULT_ACCURACY_GOAL[self.tier])
        if self.accuracy_goal < 0:
            raise ValueError("accuracy_goal must be non-negative")
        if self.rel_tolerance <= 0 or self.abs_tolerance_scale <= 0:
            raise ValueError("tolerances must be positive")
        if self.mp_digits < 16:
            raise ValueError("mp_digits must be at least 16")

    @property
    def digits(self) -> int:
        return self.mp_digits if self.is_mp else _DIGITS[self.tier]

    @property
    def unit_roundoff(self) -> float:
        return 10.0 ** -self.mp_digits if self.is_mp else _UNIT_ROUNDOFF[self.tier]

    @property
    def zero_tolerance(self) -> float:
        """Threshold for |LHS| / max_term when the exact target is 0."""
        return self.abs_tolerance_scale * math.sqrt(self.rel_tolerance)

    @property
    def is_dd(self) -> bool:
        return self.tier is Tier.DOUBLE_DOUBLE

    @property
    def is_mp(self) -> bool:
        return self.tier is Tier.MULTI

    def working(self):
        """Context manager setting the mpmath precision for the multiprecision tier."""
        if self.is_mp:
            import mpmath

            return mpmath.workdps(self.mp_digits)
        return contextlib.nullcontext()

    def num(self, x):
        """Lift a value into this tier's number type."""
        if self.is_dd:
            if is_mp_value(x):
                return DDComplex.from_mpc(x)
            return DDComplex.coerce(x)
        if self.is_mp:
            return to_mp(x)
        if isinstance(x, DDComplex):
            return x.to_complex()
        if isinstance(x, np.ndarray):
            return x.astype(complex)
        return complex(x)

    def array(self, values):
        """Stack scalars into a 1-d array of this tier."""
        if self.is_dd:
            return DDComplex.stack([self.num(v) for v in values])
        if self.is_mp:
            out = np.empty(len(values), dtype=object)
            out[:] = [self.num(v) for v in values]
            return out
        return np.array([self.num(v) for v in values], dtype=complex)


def is_mp_value(x) -> bool:
    """True for mpmath numbers and numpy object arrays holding them."""
    if isinstance(x, np.ndarray):
        return x.dtype == object
    return type(x).__module__.startswith("mpmath")


def to_mp(x):
    """Exact conversion of a tier value (or object array) to mpmath."""
    import mpmath

    if isinstance(x, np.ndarray) and x.dtype == object:
        return x
    if isinstance(x, np.ndarray):
        out = np.empty(x.shape, dtype=object)
        out[...] = [mpmath.mpc(v) for v in x.ravel()] if x.size else []
        return out
    if isinstance(x, DDComplex):
        if np.ndim(x.rh):
            out = np.empty(x.shape, dtype=object)
            flat = [v.to_mpc() for v in x.tolist()]
            out.reshape(-1)[:] = flat
            return out
        return x.to_mpc()
    if is_mp_value(x):
        return mpmath.mpc(x)
    return mpmath.mpc(complex(x))


DOUBLE = PrecisionContext(Tier.DOUBLE)
DOUBLE_DOUBLE = PrecisionContext(Tier.DOUBLE_DOUBLE)
MULTI = PrecisionContext(Tier.MULTI)


# ---------------------------------------------------------------------------
# tier-generic helpers
# ---------------------------------------------------------------------------

def absval(x):
    """Magnitude as float (or float array)."""
    return abs(x)


def ones_like(x):
    if isinstance(x, DDComplex):
        z = 0.0 * x.rh
        return DDComplex(z + 1.0, z, z, z)
    return np.ones_like(x, dtype=complex) if isinstance(x, np.ndarray) else 1.0 + 0j


def concat(parts, axis=-1):
    if isinstance(parts[0], DDComplex):
        return DDComplex(*(np.concatenate([getattr(p, f) for p in parts], axis=axis)
                           for f in DDComplex.__slots__))
    return np.concatenate(parts, axis=axis)


def prod(x, axis=-1):
    """Product along ``axis`` by pairwise (tree) reduction."""
    if not isinstance(x, DDComplex):
        return np.prod(x, axis=axis)
    if axis != -1:
        x = DDComplex(*(np.moveaxis(c, axis, -1) for c in x._parts()))
    n = x.shape[-1]
    if n == 0:
        return _dd_ones(x.shape[:-1])
    while n > 1:
        if n % 2:
            tail = x[..., n - 1:n]
            x = x[..., : n - 1]
            x = x[..., 0::2] * x[..., 1::2]
            x = concat([x, tail])
        else:
            x = x[..., 0::2] * x[..., 1::2]
        n = x.shape[-1]
    return x[..., 0]


def _exponent(x):
    """Binary exponent ``e`` with ``max(|re|, |im|) = f·2^e``, ``f ∈ [0.5, 1)``; 0 for zeros."""
    if is_mp_value(x):
        return np.zeros(np.shape(x), dtype=np.int64)  # mpmath has an unbounded exponent
    if isinstance(x, DDComplex):
        m = np.maximum(np.abs(x.rh), np.abs(x.ih))
    else:
        xa = np.asarray(x)
        m = np.maximum(np.abs(xa.real), np.abs(xa.imag))
    m = np.where(np.isfinite(m), m, 0.0)
    return np.frexp(m)[1].astype(np.int64)


def ldexp(x, e):
    """``x · 2^e``, exact in every tier (barring underflow to subnormals).

    Raises :class:`OverflowError` when a finite value leaves the double
    exponent range, rather than returning an infinity that would later turn
    into NaN (for instance 0 · inf in a product of Pochhammer symbols).
    """
    scalar = np.ndim(e) == 0 and not np.shape(x)
    if is_mp_value(x):
        import mpmath

        if not np.any(e):
            return x
        if scalar:
            return x * mpmath.ldexp(1, int(e))
        return x * np.vectorize(lambda k: mpmath.ldexp(1, int(k)), otypes=[object])(e)
    try:
        with np.errstate(over="raise"):
            if isinstance(x, DDComplex):
                parts = [np.ldexp(c, e) for c in x._parts()]
                return DDComplex(*(float(c) for c in parts)) if scalar else DDComplex(*parts)
            xa = np.asarray(x)
            out = np.ldexp(xa.real, e) + 1j * np.ldexp(xa.imag, e)
    except FloatingPointError:
        raise OverflowError("value exceeds the double exponent range; use the scaled "
                            "(mantissa, exponent) form, a quotient, or the multiprecision tier") from None
    return complex(out) if scalar else out


def normalize(x):
    """Split ``x`` into a mantissa of magnitude about one and an integer binary exponent."""
    e = _exponent(x)
    return ldexp(x, -e), e


def prod_scaled(x, e=None, axis=-1):
    """Tree product along ``axis`` that cannot overflow.

    ``x`` (optionally with per-entry exponents ``e``, meaning ``x · 2^e``) is
    renormalized after every pairwise level; returns ``(mantissa, exponent)``.
    Scaling by powers of two is exact, so the mantissa carries exactly the
    rounding of :func:`prod`.
    """
    if axis != -1:
        x = _moveaxis(x, axis)
        e = None if e is None else np.moveaxis(e, axis, -1)
    shape = np.shape(x.rh) if isinstance(x, DDComplex) else np.shape(x)
    e = np.zeros(shape, dtype=np.int64) if e is None else np.asarray(e, dtype=np.int64)
    n = shape[-1]
    if is_mp_value(x):
        import mpmath

        out = np.empty(shape[:-1], dtype=object)
        flat = x.reshape(-1, n) if n else np.empty((max(1, int(np.prod(shape[:-1]))), 0), dtype=object)
        out.reshape(-1)[:] = [mpmath.fprod(row) if n else mpmath.mpc(1) for row in flat]
        return (out if out.ndim else out[()]), e.sum(axis=-1)
    if n == 0:
        ones = _dd_ones(shape[:-1]) if isinstance(x, DDComplex) else np.ones(shape[:-1], dtype=complex)
        return ones, np.zeros(shape[:-1], dtype=np.int64)
    x, e0 = normalize(x)
    e = e + e0
    while n > 1:
        tail = None
        if n % 2:
            tail = (x[..., n - 1:n], e[..., n - 1:n])
            x, e = x[..., : n - 1], e[..., : n - 1]
        x = x[..., 0::2] * x[..., 1::2]
        e = e[..., 0::2] + e[..., 1::2]
        x, e1 = normalize(x)
        e = e + e1
        if tail is not None:
            x = concat([x, tail[0]])
            e = np.concatenate([e, tail[1]], axis=-1)
        n = np.shape(e)[-1]
    return x[..., 0], e[..., 0]


def _moveaxis(x, axis):
    if isinstance(x, DDComplex):
        return DDComplex(*(np.moveaxis(c, axis, -1) for c in x._parts()))
    return np.moveaxis(x, axis, -1)


def log2_abs(x, e=0):
    """log2 |x · 2^e| as float array (``-inf`` at zero)."""
    with np.errstate(divide="ignore"):
        return np.log2(np.asarray(abs(x), dtype=float)) + e


def _dd_ones(shape):
    z = np.zeros(shape)
    return DDComplex(z + 1.0, z.copy(), z.copy(), z.copy())


def to_pair(x) -> list[float]:
    """``[re, im]`` rounded to double, for reports."""
    c = complex(x.to_complex() if isinstance(x, DDComplex) else x)
    return [c.real, c.imag]


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def rel_residual(x, y) -> float:
    """Symmetric relative difference |x - y| / (|x| + |y| + tiny)."""
    if not isinstance(x, DDComplex) and isinstance(y, DDComplex):
        x, y = y, x
    d = abs(x - y)
    return float(d / (abs(x) + abs(y) + _TINY))


# ---------------------------------------------------------------------------
# deterministic sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplerConfig:
    magnitude_min: float = 0.3
    magnitude_max: float = 1.5
    q_magnitude_range: tuple[float, float] = (0.2, 0.8)
    p_magnitude_range: tuple[float, float] = (0.05, 0.6)
    singularity_floor: float = 1e-5
    max_retries: int = 200

    def __post_init__(self):
        if not 0 < self.p_magnitude_range[1] < 1:
            raise ValueError("nome magnitude must stay inside the unit disc")
        if not 0 < self.p_magnitude_range[0] <= self.p_magnitude_range[1]:
            raise ValueError("invalid nome magnitude range")
        if self.magnitude_min <= 0 or self.magnitude_max < self.magnitude_min:
            raise ValueError("invalid magnitude range")
        if not 0 < self.q_magnitude_range[0] <= self.q_magnitude_range[1]:
            raise ValueError("invalid base magnitude range")


def sub_seed(master_seed: int, trial_index: int) -> int:
    """Seed for one trial, independent of the order trials are run in."""
    if trial_index < 0:
        raise ValueError("trial_index must be non-negative")
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _polar(rng: np.random.Generator, lo: float, hi: float) -> complex:
    r = rng.uniform(lo, hi)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return complex(r * math.cos(phi), r * math.sin(phi))


def sample_annulus(rng: np.random.Generator, cfg: SamplerConfig) -> complex:
    """Magnitude uniform in [magnitude_min, magnitude_max], phase uniform."""
    return _polar(rng, cfg.magnitude_min, cfg.magnitude_max)


def sample_base(rng: np.random.Generator, cfg: SamplerConfig) -> complex:
    return _polar(rng, *cfg.q_magnitude_range)


def sample_nome(rng: np.random.Generator, cfg: SamplerConfig) -> complex:
    return _polar(rng, *cfg.p_magnitude_range)


def sample_nome_root(rng: np.random.Generator, cfg: SamplerConfig) -> complex:
    """Square root of a nome: its square lands in the nome range."""
    lo, hi = cfg.p_magnitude_range
    return _polar(rng, math.sqrt(lo), math.sqrt(hi))


class SingularInput(ValueError):
    """A denominator theta factor fell below the singularity floor."""

    def __init__(self, message: str, k: int | None = None):
        super().__init__(message)
        self.k = k
