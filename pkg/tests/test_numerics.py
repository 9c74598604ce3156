import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ellhyp.numerics import (
    DOUBLE,
    DOUBLE_DOUBLE,
    MULTI,
    DDComplex,
    PrecisionContext,
    SamplerConfig,
    Tier,
    prod_scaled,
    rel_residual,
    sample_annulus,
    sample_base,
    sample_nome,
    sample_nome_root,
    sub_seed,
    to_mp,
    to_pair,
)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).filter(lambda x: abs(x) > 1e-6 or x == 0)
complexes = st.builds(complex, finite, finite)


def dd_of(z: complex, tweak: float = 0.0) -> DDComplex:
    """A double-double with a nonzero low word so both halves are exercised."""
    return DDComplex(z.real, z.real * tweak * 2.0**-60, z.imag, z.imag * tweak * 2.0**-61)


# -- rel_residual ---------------------------------------------------------

def test_rel_residual_identical_inputs():
    assert rel_residual(1, 1) == 0


def test_rel_residual_zero_inputs_guarded():
    assert rel_residual(0, 0) == 0


def test_rel_residual_matches_direct_formula_at_double_double():
    x, y = DOUBLE_DOUBLE.num(1 + 0j), DOUBLE_DOUBLE.num(1 + 1e-10j)
    with mpmath.workdps(50):
        X, Y = to_mp(x), to_mp(y)
        expected = abs(X - Y) / (abs(X) + abs(Y))
        assert rel_residual(x, y) == pytest.approx(float(expected), rel=1e-14)


@given(complexes, complexes)
def test_rel_residual_symmetric_and_bounded(x, y):
    r = rel_residual(x, y)
    assert r == rel_residual(y, x)
    assert 0 <= r <= 1 + 1e-15
    assert (r == 0) == (x == y)


# -- double-double arithmetic ----------------------------------------------

@given(complexes, complexes)
def test_dd_add_mul_at_least_30_digits(x, y):
    a, b = dd_of(x, 1.0), dd_of(y, -1.0)
    with mpmath.workdps(60):
        A, B = to_mp(a), to_mp(b)
        for got, want in ((a + b, A + B), (a * b, A * B), (a - b, A - B)):
            scale = max(abs(A) * abs(B), abs(A) + abs(B), mpmath.mpf("1e-300"))
            assert abs(to_mp(got) - want) <= mpmath.mpf("1e-30") * scale


@given(complexes, complexes.filter(lambda z: abs(z) > 1e-3))
def test_dd_division_relative_accuracy(x, y):
    a, b = dd_of(x, 1.0), dd_of(y, 1.0)
    with mpmath.workdps(60):
        want = to_mp(a) / to_mp(b)
        assert abs(to_mp(a / b) - want) <= mpmath.mpf("1e-30") * max(abs(want), mpmath.mpf("1e-300"))


def test_dd_arithmetic_is_deterministic():
    a, b = DDComplex(0.1, 1e-18, 0.7, -3e-18), DDComplex(-2.3, 0.0, 1.1, 4e-17)
    first = (a * b / (a - b)).key()
    for _ in range(5):
        assert (a * b / (a - b)).key() == first


def test_dd_array_and_scalar_agree():
    xs = DDComplex.stack([0.5 + 0.1j, -1.5 + 2j, 0.25j])
    ys = DDComplex.stack([2 - 1j, 0.3, 1 + 1j])
    prod = xs * ys
    for i, (x, y) in enumerate(zip(xs.tolist(), ys.tolist())):
        assert prod[i].key() == (x * y).key()


def test_from_mpc_round_trip():
    with mpmath.workdps(40):
        z = mpmath.mpc(mpmath.pi, -mpmath.e)
        d = DDComplex.from_mpc(z)
        assert abs(to_mp(d) - z) < mpmath.mpf("1e-31")


# -- precision contexts ------------------------------------------------------

def test_default_tolerances_per_tier():
    assert DOUBLE.rel_tolerance == 1e-8
    assert DOUBLE_DOUBLE.rel_tolerance == 1e-18
    assert DOUBLE_DOUBLE.abs_tolerance_scale == 1e-6
    assert DOUBLE_DOUBLE.theta_truncation_margin == 4
    assert DOUBLE_DOUBLE.zero_tolerance == pytest.approx(1e-6 * math.sqrt(1e-18))


@pytest.mark.parametrize("kw", [{"rel_tolerance": 0.0}, {"abs_tolerance_scale": -1.0}, {"mp_digits": 8}])
def test_invalid_context_rejected(kw):
    with pytest.raises(ValueError):
        PrecisionContext(Tier.DOUBLE_DOUBLE, **kw)


def test_multiprecision_context_uses_mpmath():
    with MULTI.working():
        assert mpmath.mp.dps == MULTI.mp_digits
        x = MULTI.num(0.5 + 0.25j)
        assert isinstance(x, mpmath.mpc)


def test_to_pair_for_every_tier():
    for ctx in (DOUBLE, DOUBLE_DOUBLE, MULTI):
        assert to_pair(ctx.num(0.5 - 2j)) == [0.5, -2.0]


def test_prod_scaled_survives_double_overflow():
    big = DOUBLE_DOUBLE.array([1e200, 1e200, 1e-150, 3.0])
    mant, exp = prod_scaled(big)
    log10 = math.log10(abs(mant.to_complex())) + float(exp) * math.log10(2)
    assert log10 == pytest.approx(250 + math.log10(3), abs=1e-12)


def test_tier_refinement_on_non_cancelling_product():
    from ellhyp.theta import EllipticBase, poch

    d = poch(0.4 + 0.2j, EllipticBase(0.5 + 0.1j, 0.2), 6, DOUBLE)
    e = poch(0.4 + 0.2j, EllipticBase.make(0.5 + 0.1j, 0.2, DOUBLE_DOUBLE), 6, DOUBLE_DOUBLE)
    assert rel_residual(d, e.to_complex()) <= 1e-6


# -- sampling ----------------------------------------------------------------

def test_sampler_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(p_magnitude_range=(0.1, 1.0))
    with pytest.raises(ValueError):
        SamplerConfig(magnitude_min=0.0)


def test_sample_annulus_deterministic_and_in_range(cfg):
    a = [sample_annulus(np.random.default_rng(7), cfg) for _ in range(3)]
    assert a[0] == a[1] == a[2]
    rng = np.random.default_rng(1)
    draws = np.array([sample_annulus(rng, cfg) for _ in range(10_000)])
    assert np.all((np.abs(draws) >= cfg.magnitude_min) & (np.abs(draws) <= cfg.magnitude_max))
    assert len(np.unique(draws)) == len(draws)


def test_other_samplers_in_range(cfg):
    rng = np.random.default_rng(3)
    for _ in range(1000):
        assert cfg.q_magnitude_range[0] <= abs(sample_base(rng, cfg)) <= cfg.q_magnitude_range[1]
        assert cfg.p_magnitude_range[0] <= abs(sample_nome(rng, cfg)) <= cfg.p_magnitude_range[1]
        s = sample_nome_root(rng, cfg)
        assert cfg.p_magnitude_range[0] - 1e-12 <= abs(s) ** 2 <= cfg.p_magnitude_range[1] + 1e-12


def test_sub_seed_distinct_and_deterministic():
    assert sub_seed(42, 0) != sub_seed(42, 1)
    assert sub_seed(42, 7) == sub_seed(42, 7)
    seeds = {sub_seed(42, i) for i in range(100_000)}
    assert len(seeds) == 100_000


def test_sub_seed_rejects_negative_index():
    with pytest.raises(ValueError):
        sub_seed(1, -1)
