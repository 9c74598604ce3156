"""Naive multiprecision re-evaluation of a :class:`MixedSeriesSpec`.

Used to cross-check the incremental double-double engine.  Nothing here shares
code with :mod:`ellhyp.theta` or :mod:`ellhyp.series`: the theta product, the
Pochhammer symbols and every term are rebuilt from scratch in mpmath, which
costs O(n^2) theta evaluations per series.
"""
from __future__ import annotations

import math

import mpmath

from .numerics import DDComplex
from .series import MixedSeriesSpec, Position


def _mp(x):
    if isinstance(x, DDComplex):
        return x.to_mpc()
    return mpmath.mpc(x)


def mp_theta(a, p):
    """θ(a;p) by its product, truncated below the working precision."""
    if p == 0:
        return 1 - a
    # |p|^i · max(|a|, 1/|a|) < 2^-(prec+10) for every omitted factor
    log_p = float(mpmath.log(abs(p)))
    log_a = abs(float(mpmath.log(abs(a))))
    count = max(3, math.ceil(((mpmath.mp.prec + 10) * math.log(2) + log_a) / -log_p) + 1)
    result = mpmath.mpc(1)
    up = a            # a p^i
    down = p / a      # p^(i+1) / a
    for _ in range(count):
        result *= (1 - up) * (1 - down)
        up *= p
        down *= p
    return result


def mp_poch(a, q, p, k):
    """(a;q,p)_k = ∏_{j<k} θ(a q^j; p)."""
    return mpmath.fprod(mp_theta(a * q ** j, p) for j in range(k))


def naive_sum(spec: MixedSeriesSpec, dps: int = 45):
    """Σ_k term_k with each term rebuilt independently; returns an mpc.

    Term ``k`` is the product of the ``O(k)`` theta values it contains, so a
    length-``n`` series costs ``O(n²)`` multiplications; the theta values
    θ(x q^j; p) themselves are computed once and shared between terms.
    """
    with mpmath.workdps(dps):
        groups = [([_mp(x) for x in g.params], _mp(g.base.q), _mp(g.base.p), g.position)
                  for g in spec.groups]
        z = _mp(spec.z)
        thetas: dict = {}

        def factor(gi: int, xi: int, j: int):
            key = (gi, xi, j)
            if key not in thetas:
                params, q, p, _ = groups[gi]
                thetas[key] = mp_theta(params[xi] * q ** j, p)
            return thetas[key]

        total = mpmath.mpc(0)
        for k in range(spec.n + 1):
            term = z ** k
            if spec.vwp is not None:
                a1, q, p = _mp(spec.vwp.a1), _mp(spec.vwp.base.q), _mp(spec.vwp.base.p)
                term *= mp_theta(a1 * q ** (2 * k), p) / mp_theta(a1, p)
            for gi, (params, _, _, pos) in enumerate(groups):
                for xi in range(len(params)):
                    f = mpmath.fprod(factor(gi, xi, j) for j in range(k))
                    term = term / f if pos is Position.DENOMINATOR else term * f
            total += term
        return +total
