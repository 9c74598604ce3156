"""Acceptance suite: one test per acceptance criterion, each printing a
single ``PASS/FAIL criterion N: ...`` line (repeated in the terminal summary).
"""
import math
import re
import time
from dataclasses import replace

import mpmath
import numpy as np
import pytest

from ellhyp.cli import Command, RunConfig, run
from ellhyp.identities import (
    check_delta_limit_even,
    check_delta_limit_odd,
    get,
    list_identities,
    verify_many,
)
from ellhyp.identities.replay import delta_even_target, delta_odd_target
from ellhyp.identities.verify import sample_free
from ellhyp.limits import list_pairs, run_degeneration
from ellhyp.numerics import (
    DOUBLE_DOUBLE,
    SamplerConfig,
    SingularInput,
    sample_annulus,
    sample_base,
    sample_nome,
    sub_seed,
    to_mp,
    to_pair,
)
from ellhyp.oracle import naive_sum
from ellhyp.series import MixedSeriesSpec, eval_mixed

pytestmark = pytest.mark.slow

DD = DOUBLE_DOUBLE
SEED = 1
REL_TOL = 1e-18
ZERO_TOL = 1e-12

SUMMATIONS = ["ft_jackson_V109", "w02_thm41", "biba", "new1_12V11", "new2_12V11", "new3_12V11", "linp", "linp2",
              "schlosser_10V9", "v87_delta", "v1211"]
TRANSFORMATIONS = ["spiridonov_14V13", "warnaar_14V13", "bailey_12V11", "watson_8phi7", "nr414_transform",
                   "rv78_transform"]
LEMMAS = ["theta_quasi1", "poch_quasi2", "double_argument_id", "quad_ratio"]
REPLAYS = ["biba_double_sum", "new1_double_sum"]


def _suite(names, trials, n_max=8, tolerance=None):
    """Verify ``names``; returns (failure messages, escalated trial count)."""
    bad, escalated = [], 0
    for name in names:
        r = verify_many(name, trials, SEED, DD, n_max=n_max, tolerance=tolerance)
        escalated += r.escalated
        rel_limit = tolerance if tolerance is not None else REL_TOL
        if not (r.passed and r.max_residual <= rel_limit and r.max_zero_residual <= ZERO_TOL
                and r.rejected <= trials):
            bad.append(f"{name}: max_residual={r.max_residual:.2e} zero={r.max_zero_residual:.2e} "
                       f"failures={len(r.failures)}")
    return bad, escalated


def test_criterion_1_summation_suite(criterion):
    with criterion(1, "summation suite, 100 trials each, n in 0..8, <= 1e-18 (zero targets <= 1e-12), < 60 s") as c:
        start = time.perf_counter()
        bad, escalated = _suite(SUMMATIONS, 100)
        elapsed = time.perf_counter() - start
        c.detail = f"{len(SUMMATIONS)} identities in {elapsed:.1f} s, escalated trials: {escalated}"
        assert not bad, "; ".join(bad)
        assert elapsed < 60, f"took {elapsed:.1f} s"


def test_criterion_2_transformation_suite(criterion):
    with criterion(2, "transformation suite, 100 trials each, same tolerances") as c:
        bad, escalated = _suite(TRANSFORMATIONS, 100)
        c.detail = f"{len(TRANSFORMATIONS)} identities, escalated trials: {escalated}"
        assert not bad, "; ".join(bad)


def _delta_errors(points: int):
    cfg = SamplerConfig()
    worst = 0.0
    cases = 0
    for i in range(points):
        rng = np.random.default_rng(sub_seed(SEED, 1000 + i))
        a, q, p = sample_annulus(rng, cfg), sample_base(rng, cfg), sample_nome(rng, cfg)
        for n in range(7):
            for r in range(n + 1):
                value = complex(*to_pair(check_delta_limit_even(a, q, p, n, r)))
                target = complex(*to_pair(delta_even_target(q, n, r, DD)))
                worst = max(worst, abs(value - target) / (abs(target) if r == n else 1.0))
                cases += 1
            for r in range(n // 2 + 1):
                value = complex(*to_pair(check_delta_limit_odd(a, q, p, n, r)))
                target = complex(*to_pair(delta_odd_target(q, n, r, DD)))
                worst = max(worst, abs(value - target) / (abs(target) if n == 2 * r else 1.0))
                cases += 1
    return worst, cases


def test_criterion_3_lemma_suite(criterion):
    with criterion(3, "lemma suite, 200 trials each <= 1e-18; delta limits for all (n, r), n <= 6, to 1e-4") as c:
        bad, _ = _suite(LEMMAS, 200)
        worst, cases = _delta_errors(points=4)
        c.detail = f"worst delta-limit error {worst:.1e} over {cases} cases"
        assert not bad, "; ".join(bad)
        assert worst <= 1e-4


def test_criterion_4_proof_replay(criterion):
    with criterion(4, "proof replays equal 1 within 1e-15, 25 points each, n <= 6") as c:
        bad, _ = _suite(REPLAYS, 25, n_max=6, tolerance=1e-15)
        c.detail = f"{len(REPLAYS)} replays"
        assert not bad, "; ".join(bad)


def test_criterion_5_degeneration_suite(criterion):
    with criterion(5, "all degeneration pairs order_ok on 25 draws (shrink <= 0.2 from p=1e-2 to 1e-3)") as c:
        pairs = list_pairs()
        summaries = [run_degeneration(pair, 25, SEED, DD) for pair in pairs]
        bad = [f"{s.pair.elliptic}: {len(s.failures)} order failures" for s in summaries if not s.passed]
        worst = max(s.max_error for s in summaries)
        c.detail = f"{len(pairs)} pairs, largest error at p=1e-3: {worst:.1e}"
        assert len(pairs) == 9
        assert not bad, "; ".join(bad)


def _oracle_cases(defn, index, cfg, draws, n_max):
    """Seeded ``(n, LHS series)`` draws of ``defn``; the last one has the largest admissible n."""
    rng = np.random.default_rng(sub_seed(SEED, 7000 + index))
    specs = []
    for _ in range(400):
        if len(specs) >= draws:
            break
        free = sample_free(defn, rng, cfg, n_max)
        want_max = len(specs) == draws - 1 and "n" in free
        if want_max and free["n"] != _largest_n(defn, free, n_max):
            continue
        try:
            P = defn.full_params(free, DD)
            spec = defn.lhs(P, DD)
        except SingularInput:
            continue
        if not isinstance(spec, MixedSeriesSpec):
            return []
        specs.append((free.get("n"), spec))
    return specs


def _largest_n(defn, free, n_max):
    prm = defn.param("n")
    if prm.hi is None or callable(prm.hi):
        return n_max
    return min(int(prm.hi), n_max)


def test_criterion_6_oracle_equivalence(criterion):
    with criterion(6, "eval_mixed matches the naive oracle to 1e-25 on every registry series LHS, n <= 12") as c:
        # the goal asks eval_mixed to escalate when cancellation would cost
        # more than the 1e-25 requirement
        ctx = replace(DD, accuracy_goal=1e-27)
        cfg = SamplerConfig()
        worst, checked, largest_n, bad = 0.0, 0, 0, []
        for index, name in enumerate(list_identities()):
            defn = get(name)
            for n, spec in _oracle_cases(defn, index, cfg, draws=3, n_max=12):
                with ctx.working():
                    result = eval_mixed(spec, ctx)
                value = to_mp(result.value)
                loss = result.max_term / max(float(abs(value)), 1e-300)
                dps = 40 + int(min(max(math.log10(max(loss, 1.0)), 0), 160))
                exact = naive_sum(spec, dps=dps)
                # vanishing sums are compared on the scale of their largest term
                scale = max(abs(exact), mpmath.mpf(result.max_term) * mpmath.mpf("1e-30"))
                err = float(abs(value - exact) / scale)
                worst = max(worst, err)
                checked += 1
                largest_n = max(largest_n, n or 0)
                if not err <= 1e-25:
                    bad.append(f"{name} n={n}: {err:.1e}")
        c.detail = f"{checked} series, largest n {largest_n}, worst relative error {worst:.1e}"
        assert checked > 0 and largest_n == 12
        assert not bad, "; ".join(bad)


_ELAPSED = re.compile(r'^\s*"elapsed_ms": .*$\n?', re.MULTILINE)


def test_criterion_7_determinism(criterion, tmp_path):
    with criterion(7, "verify-all --seed 1 twice gives byte-identical JSON modulo elapsed_ms") as c:
        texts, codes = [], []
        for i in range(2):
            path = tmp_path / f"report{i}.json"
            codes.append(run(RunConfig(Command.VERIFY_ALL, seed=1, json_path=path)))
            texts.append(_ELAPSED.sub("", path.read_text()))
        count = texts[0].count('"identity"')
        c.detail = f"{count} identities, exit codes {codes}"
        assert texts[0] == texts[1]
        assert codes == [0, 0]
