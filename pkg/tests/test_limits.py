import math

import numpy as np
import pytest

from ellhyp.limits import (
    DEGENERATION_SAMPLER,
    SHRINK_FACTOR,
    DegenerationPair,
    check_degeneration,
    get_pair,
    list_pairs,
    run_degeneration,
    sample_degeneration,
)
from ellhyp.numerics import DOUBLE_DOUBLE, sub_seed

DD = DOUBLE_DOUBLE
A, B, Q = 0.9 + 0.25j, 1.1 - 0.2j, 0.88 + 0.12j


def test_pair_census():
    pairs = list_pairs()
    assert len(pairs) == 9
    links = {p.elliptic: p.basic for p in pairs}
    assert links["biba"] == "biba_p0"
    assert links["spiridonov_14V13"] == "nr414_transform"
    assert links["warnaar_14V13"] == "rv78_transform"
    assert links["linp"] == "bw_4phi3"
    assert len(set(links)) == 9


def test_get_pair_unknown():
    with pytest.raises(KeyError):
        get_pair("no_such_pair")


def test_link_must_be_total():
    with pytest.raises(ValueError):
        DegenerationPair("linp", "bw_4phi3", {"a": "a", "q": "q", "n": "n"})


def test_link_rejects_unknown_parameter():
    with pytest.raises(ValueError):
        DegenerationPair("linp", "bw_4phi3", {"a": "a", "b": "b", "q": "q", "n": "n", "zz": "a"})


def test_nome_must_exist():
    with pytest.raises(ValueError):
        DegenerationPair("linp", "bw_4phi3", {"a": "a", "b": "b", "q": "q", "n": "n"}, nome="s")


def test_linp_degenerates_linearly():
    rep = check_degeneration(get_pair("linp"), {"a": A, "b": B, "q": Q, "n": 3})
    assert rep.order_ok
    e1, e2 = rep.errors
    assert e2 <= SHRINK_FACTOR * e1
    # O(p): one decade of p buys about one decade of error
    assert 0.05 < e2 / e1 < 0.15


def test_parameter_without_basic_counterpart():
    pair = get_pair("schlosser_10V9")
    assert [p.name for p in pair.extra_params] == ["a"]
    rep = check_degeneration(pair, {"b": B, "c": 0.8 - 0.3j, "d": 1.2 + 0.1j, "q": Q, "n": 2},
                             extra={"a": 0.95 + 0.2j})
    assert rep.order_ok
    assert set(rep.params) == {"a", "b", "c", "d", "q", "n"}


def test_missing_extra_parameter():
    with pytest.raises(ValueError):
        check_degeneration(get_pair("schlosser_10V9"), {"b": B, "c": 0.8, "d": 1.2, "q": Q, "n": 2})


def test_zero_nome_lands_on_noise_floor():
    rep = check_degeneration(get_pair("biba"), {"a": A, "b": B, "q": Q, "n": 3},
                             p_sequence=(1e-2, 1e-3, 0.0))
    assert rep.order_ok
    assert rep.errors[-1] <= rep.noise_floor


def test_square_root_nome_map():
    pair = get_pair("warnaar_14V13")
    assert pair.nome == "s"
    params = pair.elliptic_params({"t": A, "b": B, "c": 0.9, "k": 1.1, "q": Q, "n": 2}, {}, 1e-2)
    assert params["s"] == pytest.approx(0.1)


def test_failing_order_detected():
    # a basic counterpart that is not the p -> 0 limit never shrinks
    bogus = DegenerationPair("linp2", "bw_4phi3", {"a": "a", "b": "b", "q": "q", "n": "n"})
    rep = check_degeneration(bogus, {"a": A, "b": B, "q": Q, "n": 3})
    assert not rep.order_ok


@pytest.mark.parametrize("pair", list_pairs(), ids=lambda p: p.elliptic)
def test_each_pair_small_run(pair):
    summary = run_degeneration(pair, 3, 11)
    assert summary.passed, [r.errors for r in summary.failures]
    assert all(math.isfinite(e) for r in summary.reports for e in r.errors)


def test_run_is_deterministic():
    s1 = run_degeneration("new1_12V11", 4, 5)
    s2 = run_degeneration("new1_12V11", 4, 5)
    j1, j2 = s1.to_json(), s2.to_json()
    j1.pop("elapsed_ms"), j2.pop("elapsed_ms")
    assert j1 == j2
    assert [r.errors for r in s1.reports] == [r.errors for r in s2.reports]


def test_sampler_respects_schema():
    pair = get_pair("schlosser_10V9")
    basic, extra = sample_degeneration(pair, np.random.default_rng(sub_seed(3, 0)), DEGENERATION_SAMPLER)
    assert set(basic) == {"b", "c", "d", "q", "n"}
    assert set(extra) == {"a"}
    assert 0 <= basic["n"] <= 3


def test_draws_must_be_positive():
    with pytest.raises(ValueError):
        run_degeneration("biba", 0, 1)
