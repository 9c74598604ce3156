"""Every summation, transformation and lemma checked by the harness.

Each :class:`IdentityDef` names its free parameters and sampling roles, a
resolver that computes constrained parameters exactly from the free ones, and
evaluators for both sides.  A side evaluator may return a
:class:`~ellhyp.series.MixedSeriesSpec` (evaluated by the series engine and
available to the naive oracle), a :class:`~ellhyp.series.SeriesSum`, or a
plain number.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..numerics import PrecisionContext
from ..series import (
    MixedSeriesSpec,
    V,
    VWPRatio,
    den,
    eval_mixed,
    num,
    phi_to_mixed,
    v_to_mixed,
    w_to_mixed,
)
from ..theta import (
    EllipticBase,
    PochFactor,
    check_double_argument,
    check_quad_ratio,
    check_quasi_poch,
    check_quasi_theta,
    poch,
    poch_quotient,
    theta,
)
from . import replay

ANNULUS = "annulus"
BASE = "base"
NOME = "nome"
NOME_ROOT = "nome-root"
INT = "int"


@dataclass(frozen=True)
class Param:
    """A free parameter and how it is sampled.

    ``annulus`` values are generic complex numbers; square-root parameters are
    sampled at root level under this role and squared by the resolver.  For
    ``int`` the bounds are inclusive and may be callables of the parameters
    sampled before it; ``hi=None`` means the run's ``n_max``.
    """

    name: str
    role: str = ANNULUS
    lo: int | Callable[[dict], int] = 0
    hi: int | Callable[[dict], int] | None = None


@dataclass(frozen=True)
class IdentityDef:
    name: str
    kind: str
    free_params: tuple[Param, ...]
    lhs: Callable
    rhs: Callable
    resolve: Callable[[dict, PrecisionContext], dict] | None = None
    zero_rhs: Callable[[dict], bool] | None = None
    constraint: Callable[[dict], tuple] | None = None
    tolerance: float | None = None
    description: str = ""
    lifted: dict = field(default_factory=dict)

    def full_params(self, free: dict, ctx: PrecisionContext) -> dict:
        P = {k: (v if isinstance(v, int) else ctx.num(v)) for k, v in free.items()}
        if self.resolve is not None:
            P.update(self.resolve(P, ctx))
        return P

    def param(self, name: str) -> Param:
        for p in self.free_params:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def nome_param(self) -> Param | None:
        for p in self.free_params:
            if p.role in (NOME, NOME_ROOT):
                return p
        return None


_REGISTRY: dict[str, IdentityDef] = {}


def register(d: IdentityDef) -> IdentityDef:
    if d.name in _REGISTRY:
        raise ValueError(f"duplicate identity {d.name}")
    _REGISTRY[d.name] = d
    return d


def list_identities(kind: str | None = None) -> list[str]:
    return [k for k, d in _REGISTRY.items() if kind is None or d.kind == kind]


def get(name: str) -> IdentityDef:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown identity {name!r}") from None


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

A = Param
Q = Param("q", BASE)
P_ = Param("p", NOME)
N = Param("n", INT)


def _quot(ctx, top: Sequence[tuple], bottom: Sequence[tuple] = ()):
    return poch_quotient([PochFactor(*t) for t in top], [PochFactor(*t) for t in bottom], ctx)


def _facs(xs, base, n):
    return [(x, base, n) for x in xs]


def _th(x, p):
    """θ(x;p) as a quotient factor."""
    return (x, EllipticBase(x * 0 + 1, p), 1)


def _bases(P, ctx):
    q, p = P["q"], P.get("p", ctx.num(0))
    return EllipticBase(q, p), EllipticBase(q * q, p * p), EllipticBase(q, p * p)


def _even(P) -> bool:
    return P["n"] % 2 == 0


def _odd(P) -> bool:
    return P["n"] % 2 == 1


def _zero_unless(cond: bool, ctx, build):
    return build() if cond else ctx.num(0)


# ---------------------------------------------------------------------------
# elliptic summations
# ---------------------------------------------------------------------------

def _v109_resolve(P, ctx):
    a, b, c, d, q, n = P["a"], P["b"], P["c"], P["d"], P["q"], P["n"]
    return {"e": a * a * q ** (n + 1) / (b * c * d)}


def _v109_lhs(P, ctx):
    a, b, c, d, e, q, n = (P[k] for k in "abcdeqn")
    return v_to_mixed(V(a, [b, c, d, e, q ** -n], _bases(P, ctx)[0], n), ctx)


def _v109_rhs(P, ctx):
    a, b, c, d, q, n = (P[k] for k in "abcdqn")
    B = _bases(P, ctx)[0]
    aq = a * q
    return _quot(ctx, _facs([aq, aq / (b * c), aq / (b * d), aq / (c * d)], B, n),
                 _facs([aq / b, aq / c, aq / d, aq / (b * c * d)], B, n))


register(IdentityDef(
    "ft_jackson_V109", "summation", (A("a"), A("b"), A("c"), A("d"), Q, P_, N),
    _v109_lhs, _v109_rhs, resolve=_v109_resolve,
    constraint=lambda P: (P["b"] * P["c"] * P["d"] * P["e"], P["a"] ** 2 * P["q"] ** (P["n"] + 1)),
    description="10V9(a;b,c,d,e,q^-n;q,p) elliptic Jackson sum, bcde = a^2 q^(n+1)",
))


def _w02_lhs(P, ctx):
    a, b, c, q, p, n, r = (P[k] for k in "abcqpnr")
    qr = q ** r
    ups = [c, a * b / c]
    ups += [b * q ** i for i in range(1, r + 1)]
    ups += [a * q ** (n + i) for i in range(r)]
    ups.append(qr ** -n)
    return v_to_mixed(V(a * b, ups, EllipticBase(qr, p), n), ctx)


def _w02_rhs(P, ctx):
    a, b, c, q, p, n, r = (P[k] for k in "abcqpnr")
    B = EllipticBase(q, p)
    Br = EllipticBase(q ** r, p)
    qr = Br.q
    return _quot(ctx, _facs([a / c, c / b], B, n) + _facs([qr, a * b * qr], Br, n),
                 _facs([c * qr, a * b * qr / c], Br, n) + _facs([a, 1 / b], B, n))


register(IdentityDef(
    "w02_thm41", "summation", (A("a"), A("b"), A("c"), Q, P_, N, Param("r", INT, 1, 3)),
    _w02_lhs, _w02_rhs,
    description="2r+8 V 2r+7 summation in base q^r with mixed (q,p)/(q^r,p) closed form",
))


def _biba_lhs(P, ctx):
    a, b, q, n = P["a"], P["b"], P["q"], P["n"]
    B, B2, _ = _bases(P, ctx)
    a2 = a * a
    return MixedSeriesSpec(
        groups=(num([a2, b / q], B2), den([B2.q, a2 * q ** 3 / b], B2),
                num([a * q ** n / b, q ** -n], B), den([b * q ** (1 - n), a * q ** (n + 1)], B)),
        z=q * q, n=n, vwp=VWPRatio(a2, B2))


def _biba_rhs(P, ctx):
    a, b, q, n = P["a"], P["b"], P["q"], P["n"]
    B, B2, _ = _bases(P, ctx)
    return _quot(ctx, [_th(-a * q ** (2 * n) / b, B.p)] + _facs([-a / b, a * q], B, n)
                 + [(1 / (b * q), B2, n)],
                 [_th(-a / b, B.p)] + _facs([-q, 1 / b], B, n) + [(a * a * q ** 3 / b, B2, n)]) * q ** n


register(IdentityDef(
    "biba", "summation", (A("a"), A("b"), Q, P_, N), _biba_lhs, _biba_rhs,
    description="bibasic (q^2,p^2)/(q,p) very-well-poised summation",
))


def _new1_lhs(P, ctx):
    a, b, q, p, n = (P[k] for k in "abqpn")
    _, B2, _ = _bases(P, ctx)
    return v_to_mixed(V(a * b, [b, b * q, b / p, b * q * p, a * q * q / b, a * a * q ** (2 * n), q ** (-2 * n)],
                        B2, n), ctx)


def _new1_rhs(P, ctx):
    a, b, q, p, n = (P[k] for k in "abqpn")
    B, B2, _ = _bases(P, ctx)
    return _quot(ctx, [_th(a, p)] + _facs([-q, a * q / b], B, n) + [(a * b * q * q, B2, n)],
                 [_th(a * q ** (2 * n), p)] + _facs([a, -b], B, n) + [(a / b, B2, n)]) * q ** -n


register(IdentityDef(
    "new1_12V11", "summation", (A("a"), A("b"), Q, P_, N), _new1_lhs, _new1_rhs,
    description="12V11(ab;b,bq,b/p,bqp,aq^2/b,a^2q^2n,q^-2n;q^2,p^2) closed form",
))


def _new2_closed(a, b, q, n, Bq2, Bq, ctx, shift=None):
    """χ(n even) (q,a²q²/b²;q²)_{n/2}/(a²q²,b²q;q²)_{n/2} · (x;q)_n/(y;q)_n."""
    h = n // 2
    x, y = shift if shift is not None else (a * b * q, a * q / b)
    return _quot(ctx, _facs([q, a * a * q * q / (b * b)], Bq2, h) + [(x, Bq, n)],
                 _facs([a * a * q * q, b * b * q], Bq2, h) + [(y, Bq, n)])


def _new2_lhs(P, ctx):
    a, b, q, p, n = (P[k] for k in "abqpn")
    _, _, Bp2 = _bases(P, ctx)
    return v_to_mixed(V(a * b, [b, -b, b * p, -b / p, a * q / b, a * a * q ** (n + 1), q ** -n], Bp2, n), ctx)


def _new2_rhs(P, ctx):
    a, b, q, n = P["a"], P["b"], P["q"], P["n"]
    _, B2, Bp2 = _bases(P, ctx)
    return _zero_unless(_even(P), ctx, lambda: _new2_closed(a, b, q, n, B2, Bp2, ctx))


register(IdentityDef(
    "new2_12V11", "summation", (A("a"), A("b"), Q, P_, N), _new2_lhs, _new2_rhs, zero_rhs=_odd,
    description="12V11(ab;b,-b,bp,-b/p,aq/b,a^2q^(n+1),q^-n;q,p^2), zero for odd n",
))


def _new3_rhs_common(P, ctx, x, y):
    b, c, q, n = P["b"], P["c"], P["q"], P["n"]
    _, B2, Bp2 = _bases(P, ctx)
    cq = c * q ** -n
    return _quot(ctx, [(x, Bp2, n), (c / (b * b), Bp2, n), (cq, B2, n)],
                 [(y, Bp2, n), (c, Bp2, n), (cq / (b * b), B2, n)])


def _new3_lhs(P, ctx):
    b, c, q, p, n = (P[k] for k in "bcqpn")
    _, _, Bp2 = _bases(P, ctx)
    return v_to_mixed(V(b, [-b, b * p, -b / p, c / b, b * q / c, q ** (n + 1), q ** -n], Bp2, n), ctx)


def _new3_rhs(P, ctx):
    b, q, n = P["b"], P["q"], P["n"]
    return _new3_rhs_common(P, ctx, b * q, q / b) * (-1 / b) ** n


register(IdentityDef(
    "new3_12V11", "summation", (A("b"), A("c"), Q, P_, N), _new3_lhs, _new3_rhs,
    description="12V11(b;-b,bp,-b/p,c/b,bq/c,q^(n+1),q^-n;q,p^2) closed form",
))


def _new3s_lhs(P, ctx):
    b, c, q, p, n = (P[k] for k in "bcqpn")
    _, _, Bp2 = _bases(P, ctx)
    bp = b * p
    return v_to_mixed(V(bp, [b, -b, -bp, c * p / b, bp * q / c, q ** (n + 1), q ** -n], Bp2, n), ctx)


def _new3s_rhs(P, ctx):
    b, q, p = P["b"], P["q"], P["p"]
    return _new3_rhs_common(P, ctx, b * q * p, q * p / b)


register(IdentityDef(
    "new3_shifted_12V11", "summation", (A("b"), A("c"), Q, P_, N), _new3s_lhs, _new3s_rhs,
    description="b -> bp form of new3_12V11; its p -> 0 limit is the q-Whipple sum",
))


def _linp_lhs(P, ctx):
    a, b, q, p, n = (P[k] for k in "abqpn")
    _, B2, _ = _bases(P, ctx)
    return v_to_mixed(V(a * b * p, [b, b * q, b * p, b * q * p, a * q * q * p / b, a * a * q ** (2 * n),
                                    q ** (-2 * n)], B2, n), ctx)


def _linp_rhs(P, ctx):
    a, b, q, p, n = (P[k] for k in "abqpn")
    B, B2, _ = _bases(P, ctx)
    return _quot(ctx, [_th(a, p)] + _facs([-q, a * q / b], B, n) + [(a * b * q * q * p, B2, n)],
                 [_th(a * q ** (2 * n), p)] + _facs([a, -b], B, n) + [(a * p / b, B2, n)]) * b ** n


register(IdentityDef(
    "linp", "summation", (A("a"), A("b"), Q, P_, N), _linp_lhs, _linp_rhs,
    description="a -> ap form of new1_12V11 (balanced, not very-well-poised at p = 0)",
))


def _linp2_lhs(P, ctx):
    a, b, q, p, n = (P[k] for k in "abqpn")
    _, _, Bp2 = _bases(P, ctx)
    return v_to_mixed(V(a * b * p, [b, -b, b * p, -b * p, a * q * p / b, a * a * q ** (n + 1), q ** -n],
                        Bp2, n), ctx)


def _linp2_rhs(P, ctx):
    a, b, q, p, n = (P[k] for k in "abqpn")
    _, B2, Bp2 = _bases(P, ctx)
    return _zero_unless(_even(P), ctx, lambda: _new2_closed(
        a, b, q, n, B2, Bp2, ctx, shift=(a * b * q * p, a * q * p / b)) * b ** n)


register(IdentityDef(
    "linp2", "summation", (A("a"), A("b"), Q, P_, N), _linp2_lhs, _linp2_rhs, zero_rhs=_odd,
    description="a -> ap form of new2_12V11, zero for odd n",
))


def _ten_v9_adq_resolve(P, ctx):
    return {"e": P["a"] * P["d"] * P["q"] ** P["n"] / (P["b"] * P["c"])}


def _ten_v9_adq_lhs(P, ctx):
    a, b, c, d, e, q, p, n = (P[k] for k in "abcdeqpn")
    _, _, Bp2 = _bases(P, ctx)
    return v_to_mixed(V(a * p, [b, c, a * q * p / d, e * p, q ** -n], Bp2, n), ctx)


def _ten_v9_adq_rhs(P, ctx):
    a, b, c, d, q, p, n = (P[k] for k in "abcdqpn")
    _, _, Bp2 = _bases(P, ctx)
    aqp = a * q * p
    return _quot(ctx, _facs([aqp, aqp / (b * c), d / b, d / c], Bp2, n),
                 _facs([aqp / b, aqp / c, d, d / (b * c)], Bp2, n))


register(IdentityDef(
    "schlosser_10V9", "summation", (A("a"), A("b"), A("c"), A("d"), Q, P_, N),
    _ten_v9_adq_lhs, _ten_v9_adq_rhs, resolve=_ten_v9_adq_resolve,
    constraint=lambda P: (P["b"] * P["c"] * P["e"], P["a"] * P["d"] * P["q"] ** P["n"]),
    description="10V9(ap;b,c,aqp/d,ep,q^-n;q,p^2), bce = adq^n",
))


def _v87_lhs(P, ctx):
    a, b, q, n = P["a"], P["b"], P["q"], P["n"]
    return v_to_mixed(V(a, [b, a * q ** n / b, q ** -n], _bases(P, ctx)[0], n), ctx)


register(IdentityDef(
    "v87_delta", "summation", (A("a"), A("b"), Q, P_, N), _v87_lhs,
    lambda P, ctx: ctx.num(1 if P["n"] == 0 else 0), zero_rhs=lambda P: P["n"] > 0,
    description="8V7(a;b,aq^n/b,q^-n;q,p) = delta_{n,0}",
))


def _v1211_lhs_at(b, c, q, p, n, ctx):
    Bp2 = EllipticBase(q, p * p)
    return v_to_mixed(V(b * b * q ** (-n - 1), [b, -b, b * p, -b / p, c * q ** (-n - 1), b * b * q ** -n / c,
                                                q ** -n], Bp2, n), ctx)


def _v1211_rhs_at(b, c, q, p, n, ctx):
    Bp2 = EllipticBase(q, p * p)
    B2 = EllipticBase(q * q, p * p)
    cq = c * q ** -n
    bb = b * b
    return _quot(ctx, _facs([q / bb, c / bb], Bp2, n) + _facs([q * q, cq], B2, n),
                 _facs([q, c], Bp2, n) + _facs([q * q / bb, cq / bb], B2, n))


def _v1211_lhs(P, ctx):
    return _v1211_lhs_at(P["b"], P["c"], P["q"], P["p"], P["n"], ctx)


def _v1211_rhs(P, ctx):
    return _v1211_rhs_at(P["b"], P["c"], P["q"], P["p"], P["n"], ctx)


register(IdentityDef(
    "v1211", "summation", (A("b"), A("c"), Q, P_, N), _v1211_lhs, _v1211_rhs,
    description="12V11(b^2q^(-n-1);b,-b,bp,-b/p,cq^(-n-1),b^2q^-n/c,q^-n;q,p^2) at generic c",
))

register(IdentityDef(
    "v1211_qpower_c", "summation",
    (A("b"), Q, P_, N, Param("m", INT, lo=lambda v: 2 * v["n"] + 1, hi=lambda v: 2 * v["n"] + 4)),
    _v1211_lhs, _v1211_rhs,
    resolve=lambda P, ctx: {"c": P["q"] ** (P["n"] - P["m"] + 1)},
    description="v1211 at c = q^(n-m+1), m >= 2n+1 (the reduction to new2_12V11)",
))

register(IdentityDef(
    "v1211_c_periodicity", "summation", (A("b"), A("c"), Q, P_, N),
    _v1211_lhs,
    lambda P, ctx: _v1211_lhs_at(P["b"], P["c"] * P["p"] ** 2, P["q"], P["p"], P["n"], ctx),
    description="left side of v1211 is invariant under c -> c p^2",
))

register(IdentityDef(
    "v1211_rhs_periodicity", "summation", (A("b"), A("c"), Q, P_, N),
    _v1211_rhs,
    lambda P, ctx: _v1211_rhs_at(P["b"], P["c"] * P["p"] ** 2, P["q"], P["p"], P["n"], ctx),
    description="right side of v1211 is invariant under c -> c p^2",
))


# ---------------------------------------------------------------------------
# elliptic transformations
# ---------------------------------------------------------------------------

def _sp_resolve(P, ctx):
    a, bh, ch, kh, q = P["a"], P["bh"], P["ch"], P["kh"], P["q"]
    b, c, k = bh * bh, ch * ch, kh * kh
    m = b * c * k / (a * a * q * q)
    return {"b": b, "c": c, "k": k, "m": m, "d": -m / a}


def _sp_lhs(P, ctx):
    a, bh, ch, kh, q, n, m = (P[x] for x in ("a", "bh", "ch", "kh", "q", "n", "m"))
    B = EllipticBase(q, P.get("p", ctx.num(0)))
    khq = kh * q ** n
    qn = q ** -n
    return v_to_mixed(V(a, [a * a * q / m, bh, -bh, ch, -ch, khq, -khq, qn, -qn], B, n), ctx)


def _sp_rhs(P, ctx, basic=False):
    a, b, c, k, q, n, m, d = (P[x] for x in ("a", "b", "c", "k", "q", "n", "m", "d"))
    p = ctx.num(0) if basic else P["p"]
    B2 = EllipticBase(q * q, p * p)
    aq2 = a * a * q * q
    mq2 = m * q * q
    pre = _quot(ctx, _facs([aq2, k / m, mq2 / b, mq2 / c], B2, n),
                _facs([mq2, k / (a * a), aq2 / b, aq2 / c], B2, n))
    if basic:
        spec = w_to_mixed(m, [aq2 / m, d, d * q, b, c, k * q ** (2 * n), q ** (-2 * n)], B2.q, m * q / (a * a), n,
                          ctx)
    else:
        spec = v_to_mixed(V(m, [aq2 / m, d, d * q, d / p, d * q * p, b, c, k * q ** (2 * n), q ** (-2 * n)], B2, n),
                          ctx)
    return pre * eval_mixed(spec, ctx).value


_SP_FREE = (A("a"), A("bh"), A("ch"), A("kh"), Q)
register(IdentityDef(
    "spiridonov_14V13", "transformation", _SP_FREE + (P_, N), _sp_lhs, _sp_rhs, resolve=_sp_resolve,
    constraint=lambda P: (P["m"] * P["a"] ** 2 * P["q"] ** 2, P["b"] * P["c"] * P["k"]),
    description="14V13 in base (q,p) to 14V13 in base (q^2,p^2); m = bck/a^2q^2, d = -m/a; "
                "bh, ch, kh are the square roots of b, c, k",
))


def _wa_resolve(P, ctx):
    t, b, c, k, q = P["t"], P["b"], P["c"], P["k"], P["q"]
    a = q / (t * t)
    m = b * c * k / (a * q)
    out = {"a": a, "m": m, "d": m * t}
    if "s" in P:
        out["p"] = P["s"] * P["s"]
    return out


def _wa_lhs(P, ctx, basic=False):
    a, b, c, k, q, n, m = (P[x] for x in "abckqnm")
    p = ctx.num(0) if basic else P["p"]
    B = EllipticBase(q * q, p)
    ups = [a * a / (m * m), b, b * q, c, c * q, k * q ** n, k * q ** (n + 1), q ** -n, q ** (1 - n)]
    if basic:
        return w_to_mixed(a, ups, q * q, q * q, n // 2, ctx)
    return v_to_mixed(V(a, ups, B, n // 2), ctx)


def _wa_rhs(P, ctx, basic=False):
    a, b, c, k, q, n, m, d = (P[x] for x in "abckqnmd")
    p = ctx.num(0) if basic else P["p"]
    B = EllipticBase(q, p)
    pre = _quot(ctx, _facs([a * q, k / m, m * q / b, m * q / c], B, n),
                _facs([m * q, k / a, a * q / b, a * q / c], B, n))
    if basic:
        spec = w_to_mixed(m, [a / m, d, -d, b, c, k * q ** n, q ** -n], q, -m * q / a, n, ctx)
    else:
        s = P["s"]
        spec = v_to_mixed(V(m, [a / m, d, -d, d * s, -d / s, b, c, k * q ** n, q ** -n], B, n), ctx)
    return pre * eval_mixed(spec, ctx).value


_WA_FREE = (A("t"), A("b"), A("c"), A("k"), Q)
register(IdentityDef(
    "warnaar_14V13", "transformation", _WA_FREE + (Param("s", NOME_ROOT), N), _wa_lhs, _wa_rhs,
    resolve=_wa_resolve,
    constraint=lambda P: (P["m"] * P["a"] * P["q"], P["b"] * P["c"] * P["k"]),
    description="14V13 in base (q^2,p) to 14V13 in base (q,p); m = bck/aq, d = m(q/a)^(1/2); "
                "t = (q/a)^(1/2) and s = p^(1/2) are sampled",
))


def _twelve_v11_transform_resolve(P, ctx):
    a, b, c, d, e, f, q, n = (P[x] for x in "abcdefqn")
    return {"g": a ** 3 * q ** (n + 2) / (b * c * d * e * f), "lam": a * a * q / (b * c * d)}


def _twelve_v11_transform_lhs(P, ctx):
    a, b, c, d, e, f, g, q, n = (P[x] for x in "abcdefgqn")
    return v_to_mixed(V(a, [b, c, d, e, f, g, q ** -n], _bases(P, ctx)[0], n), ctx)


def _twelve_v11_transform_rhs(P, ctx):
    a, b, c, d, e, f, g, q, n, lam = (P[x] for x in ("a", "b", "c", "d", "e", "f", "g", "q", "n", "lam"))
    B = _bases(P, ctx)[0]
    aq = a * q
    pre = _quot(ctx, _facs([aq, aq / (e * f), aq / (f * g), aq / (e * g)], B, n),
                _facs([aq / e, aq / f, aq / g, aq / (e * f * g)], B, n))
    r = lam / a
    spec = v_to_mixed(V(lam, [r * b, r * c, r * d, e, f, g, q ** -n], B, n), ctx)
    return pre * eval_mixed(spec, ctx).value


register(IdentityDef(
    "bailey_12V11", "transformation",
    (A("a"), A("b"), A("c"), A("d"), A("e"), A("f"), Q, P_, N), _twelve_v11_transform_lhs, _twelve_v11_transform_rhs,
    resolve=_twelve_v11_transform_resolve,
    constraint=lambda P: (P["b"] * P["c"] * P["d"] * P["e"] * P["f"] * P["g"], P["a"] ** 3 * P["q"] ** (P["n"] + 2)),
    description="elliptic Bailey 12V11 transformation, bcdefg = a^3 q^(n+2), lambda = a^2q/bcd",
))


# ---------------------------------------------------------------------------
# basic (p = 0) identities and transformations
# ---------------------------------------------------------------------------

def _zero_base(q, ctx):
    return EllipticBase(q, ctx.num(0))


def _bw_closed(a, b, q, n, ctx):
    B0 = _zero_base(q, ctx)
    return _quot(ctx, [(a, B0, 1)] + _facs([-q, a * q / b], B0, n),
                 [(a * q ** (2 * n), B0, 1)] + _facs([a, -b], B0, n))


def _bw_lhs(P, ctx):
    a, b, q, n = (P[x] for x in "abqn")
    q2 = q * q
    return phi_to_mixed([b, b * q, a * a * q ** (2 * n), q ** (-2 * n)], [b * b, a * q, a * q2], q2, q2, n, ctx)


register(IdentityDef(
    "bw_4phi3", "basic", (A("a"), A("b"), Q, N), _bw_lhs,
    lambda P, ctx: _bw_closed(P["a"], P["b"], P["q"], P["n"], ctx) * P["b"] ** P["n"],
    description="4phi3[b,bq,a^2q^2n,q^-2n; b^2,aq,aq^2; q^2,q^2]",
))


def _A_closed(a, b, q, n, ctx, tail=None):
    q0 = _zero_base(q, ctx)
    q02 = _zero_base(q * q, ctx)
    h = n // 2
    top = _facs([q, a * a * q * q / (b * b)], q02, h)
    bottom = _facs([a * a * q * q, b * b * q], q02, h)
    if tail is not None:
        top.append((tail[0], q0, n))
        bottom.append((tail[1], q0, n))
    return _quot(ctx, top, bottom)


def _A_lhs(P, ctx):
    a, b, q, n = (P[x] for x in "abqn")
    return phi_to_mixed([b, -b, a * a * q ** (n + 1), q ** -n], [b * b, a * q, -a * q], q, q, n, ctx)


register(IdentityDef(
    "andrews_q_watson", "basic", (A("a"), A("b"), Q, N), _A_lhs,
    lambda P, ctx: _zero_unless(_even(P), ctx, lambda: _A_closed(P["a"], P["b"], P["q"], P["n"], ctx)
                                * P["b"] ** P["n"]),
    zero_rhs=_odd,
    description="terminating q-analogue of Watson's 3F2 sum, zero for odd n",
))


def _qps_lhs(P, ctx):
    b, c, d, q, n = (P[x] for x in "bcdqn")
    return phi_to_mixed([b, c, q ** -n], [d, b * c * q ** (1 - n) / d], q, q, n, ctx)


def _qps_rhs(P, ctx):
    b, c, d, q, n = (P[x] for x in "bcdqn")
    B0 = _zero_base(q, ctx)
    return _quot(ctx, _facs([d / b, d / c], B0, n), _facs([d, d / (b * c)], B0, n))


register(IdentityDef(
    "q_pfaff_saalschutz", "basic", (A("b"), A("c"), A("d"), Q, N), _qps_lhs, _qps_rhs,
    description="3phi2[b,c,q^-n; d,bcq^(1-n)/d; q,q] = (d/b,d/c;q)_n/(d,d/bc;q)_n",
))


def _qwh_lhs(P, ctx):
    b, c, q, n = (P[x] for x in "bcqn")
    return phi_to_mixed([b, -b, q ** (n + 1), q ** -n], [-q, c, b * b * q / c], q, q, n, ctx)


def _qwh_rhs(P, ctx):
    b, c, q, n = (P[x] for x in "bcqn")
    B0 = _zero_base(q, ctx)
    B02 = _zero_base(q * q, ctx)
    cq = c * q ** -n
    return _quot(ctx, [(c / (b * b), B0, n), (cq, B02, n)], [(c, B0, n), (cq / (b * b), B02, n)])


register(IdentityDef(
    "andrews_q_whipple", "basic", (A("b"), A("c"), Q, N), _qwh_lhs, _qwh_rhs,
    description="terminating q-analogue of Whipple's 3F2 sum",
))


def _new1_p0_lhs(P, ctx):
    a, b, q, n = (P[x] for x in "abqn")
    return w_to_mixed(a * b, [b, b * q, a * q * q / b, a * a * q ** (2 * n), q ** (-2 * n)], q * q, b * q / a, n, ctx)


def _new1_p0_factor(a, b, q, n, ctx):
    B02 = _zero_base(q * q, ctx)
    return _quot(ctx, [(a * b * q * q, B02, n)], [(a / b, B02, n)])


register(IdentityDef(
    "new1_p0_8W7", "basic", (A("a"), A("b"), Q, N), _new1_p0_lhs,
    lambda P, ctx: _bw_closed(P["a"], P["b"], P["q"], P["n"], ctx)
    * _new1_p0_factor(P["a"], P["b"], P["q"], P["n"], ctx) * P["q"] ** -P["n"],
    description="8W7(ab;b,bq,aq^2/b,a^2q^2n,q^-2n;q^2,bq/a), the p -> 0 limit of new1_12V11",
))

register(IdentityDef(
    "watson_8phi7", "basic", (A("a"), A("b"), Q, N), _new1_p0_lhs,
    lambda P, ctx: _new1_p0_factor(P["a"], P["b"], P["q"], P["n"], ctx) * (P["b"] * P["q"]) ** -P["n"]
    * eval_mixed(_bw_lhs(P, ctx), ctx).value,
    description="the 8W7 of new1_p0_8W7 as (abq^2;q^2)_n/(a/b;q^2)_n (bq)^-n times the 4phi3 of bw_4phi3",
))


def _new2_p0_lhs(P, ctx):
    a, b, q, n = (P[x] for x in "abqn")
    return w_to_mixed(a * b, [b, -b, a * q / b, a * a * q ** (n + 1), q ** -n], q, -b / a, n, ctx)


register(IdentityDef(
    "new2_p0_8W7", "basic", (A("a"), A("b"), Q, N), _new2_p0_lhs,
    lambda P, ctx: _zero_unless(_even(P), ctx, lambda: _A_closed(
        P["a"], P["b"], P["q"], P["n"], ctx, tail=(P["a"] * P["b"] * P["q"], P["a"] * P["q"] / P["b"]))),
    zero_rhs=_odd,
    description="8W7(ab;b,-b,aq/b,a^2q^(n+1),q^-n;q,-b/a), the p -> 0 limit of new2_12V11",
))


def _nr414_lhs(P, ctx):
    a, bh, ch, kh, q, n, m = (P[x] for x in ("a", "bh", "ch", "kh", "q", "n", "m"))
    khq = kh * q ** n
    qn = q ** -n
    return w_to_mixed(a, [a * a * q / m, bh, -bh, ch, -ch, khq, -khq, qn, -qn], q, q, n, ctx)


register(IdentityDef(
    "nr414_transform", "basic", _SP_FREE + (N,), _nr414_lhs, lambda P, ctx: _sp_rhs(P, ctx, basic=True),
    resolve=_sp_resolve,
    description="bibasic 12W11 -> 10W9 transformation, the p -> 0 limit of spiridonov_14V13",
))

register(IdentityDef(
    "rv78_transform", "basic", _WA_FREE + (N,), lambda P, ctx: _wa_lhs(P, ctx, basic=True),
    lambda P, ctx: _wa_rhs(P, ctx, basic=True), resolve=_wa_resolve,
    description="12W11 in base q^2 -> 10W9 in base q, the p -> 0 limit of warnaar_14V13",
))


def _biba_p0(P, ctx):
    return dict(P, p=ctx.num(0))


register(IdentityDef(
    "biba_p0", "basic", (A("a"), A("b"), Q, N),
    lambda P, ctx: _biba_lhs(_biba_p0(P, ctx), ctx), lambda P, ctx: _biba_rhs(_biba_p0(P, ctx), ctx),
    description="p = 0 case of biba: a bibasic summation in bases q and q^2",
))


# ---------------------------------------------------------------------------
# theta / Pochhammer lemmas
# ---------------------------------------------------------------------------

register(IdentityDef(
    "theta_quasi1", "lemma", (A("a"), P_),
    lambda P, ctx: theta(P["a"], P["p"], ctx),
    lambda P, ctx: -P["a"] * theta(P["a"] * P["p"], P["p"], ctx),
    description="theta(a;p) = -a theta(ap;p)",
))

def _poch_quasi2_lhs(P, ctx):
    B = EllipticBase(P["q"], P["p"])
    return _quot(ctx, [(P["a"], B, P["n"])], [(P["a"] * P["p"], B, P["n"])])


register(IdentityDef(
    "poch_quasi2", "lemma", (A("a"), Q, P_, N), _poch_quasi2_lhs,
    lambda P, ctx: (-P["a"]) ** P["n"] * P["q"] ** (P["n"] * (P["n"] - 1) // 2),
    description="(a;q,p)_n / (ap;q,p)_n = (-a)^n q^C(n,2); the quotient form keeps huge "
                "Pochhammer values in range",
))


def _double_arg(P, ctx, side):
    from ..theta import double_argument_sides

    return double_argument_sides(P["a"], P["b"], EllipticBase(P["q"], P["p"]), P["n"], ctx)[side]


register(IdentityDef(
    "double_argument_id", "lemma", (A("a"), A("b"), Q, P_, N),
    lambda P, ctx: _double_arg(P, ctx, 0), lambda P, ctx: _double_arg(P, ctx, 1),
    description="(a;q,p)_2n/(b;q,p)_2n in terms of (q^2,p^2) Pochhammers",
))


def _quad(P, ctx, side):
    from ..theta import quad_ratio_sides

    return quad_ratio_sides(P["a"], P["b"], P["q"], P["p"], P["n"], ctx)[side]


register(IdentityDef(
    "quad_ratio", "lemma", (A("a"), A("b"), Q, P_, N),
    lambda P, ctx: _quad(P, ctx, 0), lambda P, ctx: _quad(P, ctx, 1),
    description="(a,-a,a/p,-ap;q,p^2)_n/(b,-b,bp,-b/p;q,p^2)_n = (a^2;q^2,p^2)_n/(b^2;q^2,p^2)_n (-a/b)^n",
))

def _poch_split_lhs(P, ctx):
    B = EllipticBase(P["q"], P["p"])
    a, q, m, n = P["a"], P["q"], P["m"], P["n"]
    return _quot(ctx, [(a, B, m + n)], [(a, B, m), (a * q ** m, B, n)])


register(IdentityDef(
    "poch_split", "lemma", (A("a"), Q, P_, N, Param("m", INT)), _poch_split_lhs,
    lambda P, ctx: ctx.num(1),
    description="(a;q,p)_(m+n) / ((a;q,p)_m (aq^m;q,p)_n) = 1",
))

register(IdentityDef(
    "delta_limit_even", "lemma",
    (A("a"), Q, P_, Param("n", INT, 0, 6), Param("r", INT, 0, lambda v: v["n"])),
    lambda P, ctx: replay.check_delta_limit_even(P["a"], P["q"], P["p"], P["n"], P["r"], ctx=ctx),
    lambda P, ctx: replay.delta_even_target(P["q"], P["n"], P["r"], ctx),
    zero_rhs=lambda P: P["r"] != P["n"], tolerance=1e-4,
    description="lim_{k->a^2} (k/a^2;q^2,p^2)_n/(a^2q^(2-2n)/k;q^2,p^2)_r = (-1)^n q^(n^2-n) delta_{n,r}",
))

register(IdentityDef(
    "delta_limit_odd", "lemma",
    (A("a"), Q, P_, Param("n", INT, 0, 6), Param("r", INT, 0, lambda v: v["n"] // 2)),
    lambda P, ctx: replay.check_delta_limit_odd(P["a"], P["q"], P["p"], P["n"], P["r"], ctx=ctx),
    lambda P, ctx: replay.delta_odd_target(P["q"], P["n"], P["r"], ctx),
    zero_rhs=lambda P: 2 * P["r"] != P["n"], tolerance=1e-4,
    description="lim_{k->a} (k/a;q,p)_n/(aq^(1-n)/k;q,p)_2r = q^C(n,2) delta_{n,2r}",
))


# ---------------------------------------------------------------------------
# proof replays
# ---------------------------------------------------------------------------

register(IdentityDef(
    "biba_double_sum", "replay", (A("a"), A("b"), Q, P_, Param("n", INT, 0, 6)),
    lambda P, ctx: replay.replay_biba_double_sum(P["a"], P["b"], P["q"], P["p"], P["n"], ctx),
    lambda P, ctx: ctx.num(1), tolerance=1e-15,
    description="double sum with inner 12V11 from the derivation of biba; equals 1",
))

register(IdentityDef(
    "new1_double_sum", "replay", (A("a"), A("b"), Q, P_, Param("n", INT, 0, 6)),
    lambda P, ctx: replay.replay_new1_double_sum(P["a"], P["b"], P["q"], P["p"], P["n"], ctx),
    lambda P, ctx: ctx.num(1), tolerance=1e-15,
    description="double sum with inner bibasic sum from the derivation of new1_12V11; equals 1",
))

# the lemma checks in theta are re-exported for callers that want residuals directly
__all__ = [
    "IdentityDef", "Param", "get", "list_identities", "register",
    "check_quasi_theta", "check_quasi_poch", "check_double_argument", "check_quad_ratio",
]
