"""Numerical checks of p -> 0 degenerations of elliptic identities.

Each :class:`DegenerationPair` couples an elliptic registry entry with the
basic (p = 0) registry entry it reduces to.  :func:`check_degeneration`
evaluates the elliptic left-hand side along a decreasing sequence of real
nomes and compares it with the basic right-hand side at p = 0; the error
must vanish at least linearly, i.e. shrink by a factor of 0.2 or better per
decade of p.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .identities.registry import INT, get
from .identities.verify import _SAMPLERS, evaluate_side, params_to_json, sample_free
from .numerics import DOUBLE_DOUBLE, PrecisionContext, SamplerConfig, SingularInput, sub_seed

DEFAULT_P_SEQUENCE = (1e-2, 1e-3)
#: required shrink factor of the error between consecutive nomes
SHRINK_FACTOR = 0.2
#: The p -> 0 limit is not uniform: θ(x;p) ≈ (1 - x)(1 - p/x), so the O(p)
#: regime needs p·max(|x|, 1/|x|) « 1 for every theta argument x, and
#: arguments such as q^(-2n) grow quickly with n and shrinking |q|.  Random
#: degeneration draws therefore keep |q| close to 1, the parameters close to
#: the unit circle and n small, so p = 1e-2 lies inside the linear regime.
DEGENERATION_SAMPLER = SamplerConfig(magnitude_min=0.7, magnitude_max=1.4, q_magnitude_range=(0.85, 0.95))
DEGENERATION_N_MAX = 3


def _identity(p: float) -> float:
    return p


@dataclass(frozen=True)
class DegenerationPair:
    """An elliptic identity and the basic identity it becomes at p = 0.

    ``parameter_link`` maps each elliptic free parameter to the basic free
    parameter it takes its value from.  Elliptic free parameters absent from
    the link (besides the nome) have no basic counterpart; they are drawn
    independently.  The elliptic nome parameter ``nome`` is set to
    ``nome_map(p)`` for each ``p`` of ``p_sequence``.
    """

    elliptic: str
    basic: str
    parameter_link: Mapping[str, str]
    nome: str = "p"
    nome_map: Callable[[float], float] = _identity
    p_sequence: tuple = DEFAULT_P_SEQUENCE
    description: str = ""

    def __post_init__(self):
        ell, bas = get(self.elliptic), get(self.basic)
        names = {p.name for p in ell.free_params}
        if self.nome not in names:
            raise ValueError(f"{self.elliptic} has no nome parameter {self.nome!r}")
        unknown = set(self.parameter_link) - names
        if unknown:
            raise ValueError(f"{self.elliptic}: link names unknown parameters {sorted(unknown)}")
        basic_names = {p.name for p in bas.free_params}
        missing = basic_names - set(self.parameter_link.values())
        if missing or not set(self.parameter_link.values()) <= basic_names:
            raise ValueError(f"link {self.elliptic} -> {self.basic} is not total on {sorted(basic_names)}")

    @property
    def extra_params(self) -> list:
        """Elliptic free parameters without a basic counterpart."""
        return [p for p in get(self.elliptic).free_params
                if p.name not in self.parameter_link and p.name != self.nome]

    def elliptic_params(self, basic_free: Mapping, extra: Mapping, p: float) -> dict:
        out = {e: basic_free[b] for e, b in self.parameter_link.items()}
        out.update(extra)
        out[self.nome] = complex(self.nome_map(p))
        return out


@dataclass
class DegenerationReport:
    pair: DegenerationPair
    params: dict
    p_sequence: tuple
    errors: list
    order_ok: bool
    noise_floor: float

    def to_json(self) -> dict:
        return {
            "elliptic": self.pair.elliptic,
            "basic": self.pair.basic,
            "params": params_to_json(self.params),
            "p_sequence": list(self.p_sequence),
            "errors": [float(e) for e in self.errors],
            "order_ok": self.order_ok,
        }


def _same(*names):
    return {n: n for n in names}


_PAIRS = (
    DegenerationPair("linp", "bw_4phi3", _same("a", "b", "q", "n"),
                     description="broken very-well-poisedness leaves a 4phi3"),
    DegenerationPair("linp2", "andrews_q_watson", _same("a", "b", "q", "n")),
    DegenerationPair("schlosser_10V9", "q_pfaff_saalschutz", _same("b", "c", "d", "q", "n"),
                     description="the parameter a drops out at p = 0"),
    DegenerationPair("new3_shifted_12V11", "andrews_q_whipple", _same("b", "c", "q", "n")),
    DegenerationPair("biba", "biba_p0", _same("a", "b", "q", "n")),
    DegenerationPair("spiridonov_14V13", "nr414_transform", _same("a", "bh", "ch", "kh", "q", "n")),
    DegenerationPair("warnaar_14V13", "rv78_transform", _same("t", "b", "c", "k", "q", "n"),
                     nome="s", nome_map=math.sqrt,
                     description="the entry is parametrised by s with p = s^2"),
    DegenerationPair("new1_12V11", "new1_p0_8W7", _same("a", "b", "q", "n")),
    DegenerationPair("new2_12V11", "new2_p0_8W7", _same("a", "b", "q", "n")),
)


def list_pairs() -> list[DegenerationPair]:
    """All registered degeneration pairs, in a fixed order."""
    return list(_PAIRS)


def get_pair(elliptic: str) -> DegenerationPair:
    for pair in _PAIRS:
        if pair.elliptic == elliptic:
            return pair
    raise KeyError(f"no degeneration pair for {elliptic!r}; known: {[p.elliptic for p in _PAIRS]}")


def _noise_floor(ctx: PrecisionContext) -> float:
    return ctx.zero_tolerance


def check_degeneration(pair: DegenerationPair, free_params: Mapping, ctx: PrecisionContext = DOUBLE_DOUBLE,
                       extra: Mapping | None = None, p_sequence=None) -> DegenerationReport:
    """Errors of the elliptic LHS against the basic RHS along ``p_sequence``.

    ``free_params`` are the basic identity's free parameters; ``extra`` holds
    values for elliptic parameters that have no basic counterpart.  The error
    is relative to the basic right-hand side, or scaled by the largest term
    of the elliptic sum when the basic right-hand side vanishes identically.
    ``order_ok`` requires every error to be at most ``SHRINK_FACTOR`` times
    its predecessor, except that errors at the tier's noise floor count as
    converged; a ``p`` of exactly zero compares the basic identity's two
    sides and must land at that floor.  Raises :class:`SingularInput` for
    inadmissible parameters.
    """
    ell, bas = get(pair.elliptic), get(pair.basic)
    extra = dict(extra or {})
    missing = {p.name for p in pair.extra_params} - set(extra)
    if missing:
        raise ValueError(f"{pair.elliptic}: missing values for {sorted(missing)}")
    seq = tuple(pair.p_sequence if p_sequence is None else p_sequence)
    with ctx.working():
        B = bas.full_params(dict(free_params), ctx)
        basic_zero = bool(bas.zero_rhs(B)) if bas.zero_rhs is not None else False
        target, _ = evaluate_side(bas.rhs(B, ctx), ctx)
        errors = []
        for p in seq:
            if p == 0:
                # shifted arguments such as θ(xp;p²) have no literal p = 0 form;
                # by definition of the limit the elliptic side is the basic LHS
                value, max_term = evaluate_side(bas.lhs(B, ctx), ctx)
            else:
                E = ell.full_params(pair.elliptic_params(free_params, extra, p), ctx)
                value, max_term = evaluate_side(ell.lhs(E, ctx), ctx)
            scale = max_term if basic_zero else float(abs(target))
            errors.append(float(abs(value - target)) / max(scale, 1e-300))
    floor = _noise_floor(ctx)
    ok = all(np.isfinite(errors)) and all(
        later <= max(SHRINK_FACTOR * earlier, floor) for earlier, later in zip(errors, errors[1:]))
    if 0.0 in seq:
        ok = ok and all(e <= floor for e, p in zip(errors, seq) if p == 0.0)
    shown = {**dict(free_params), **extra}
    return DegenerationReport(pair, shown, seq, errors, bool(ok), floor)


@dataclass
class DegenerationSummary:
    """Aggregate of ``draws`` seeded random checks of one pair."""

    pair: DegenerationPair
    seed: int
    draws: int
    precision: str
    reports: list = field(default_factory=list)
    rejected: int = 0
    elapsed_ms: float = 0.0

    @property
    def failures(self) -> list:
        return [r for r in self.reports if not r.order_ok]

    @property
    def passed(self) -> bool:
        return len(self.reports) == self.draws and not self.failures

    @property
    def max_error(self) -> float:
        return max((r.errors[-1] for r in self.reports), default=0.0)

    def to_json(self) -> dict:
        return {
            "identity": self.pair.elliptic,
            "basic": self.pair.basic,
            "seed": self.seed,
            "trials": self.draws,
            "precision": self.precision,
            "p_sequence": list(self.pair.p_sequence),
            "max_error": self.max_error,
            "shrink_factor": SHRINK_FACTOR,
            "rejected": self.rejected,
            "status": "pass" if self.passed else "fail",
            "failures": [r.to_json() for r in self.failures],
            "elapsed_ms": self.elapsed_ms,
        }


def sample_degeneration(pair: DegenerationPair, rng: np.random.Generator, cfg: SamplerConfig,
                        n_max: int = DEGENERATION_N_MAX) -> tuple[dict, dict]:
    """Draw ``(basic free params, elliptic-only params)`` for ``pair``."""
    basic = sample_free(get(pair.basic), rng, cfg, n_max)
    values: dict = {}
    for prm in pair.extra_params:
        if prm.role == INT:
            raise ValueError("integer elliptic-only parameters are not supported")
        values[prm.name] = _SAMPLERS[prm.role](rng, cfg)
    return basic, values


def run_degeneration(pair: DegenerationPair | str, draws: int, master_seed: int,
                     ctx: PrecisionContext = DOUBLE_DOUBLE, cfg: SamplerConfig | None = None,
                     n_max: int = DEGENERATION_N_MAX) -> DegenerationSummary:
    """``draws`` independently sub-seeded degeneration checks of ``pair``.

    ``cfg`` defaults to :data:`DEGENERATION_SAMPLER`.
    """
    if isinstance(pair, str):
        pair = get_pair(pair)
    if draws < 1:
        raise ValueError("draws must be >= 1")
    cfg = cfg or replace(DEGENERATION_SAMPLER, singularity_floor=ctx.singularity_floor)
    if cfg.singularity_floor != ctx.singularity_floor:
        ctx = replace(ctx, singularity_floor=cfg.singularity_floor)
    summary = DegenerationSummary(pair, master_seed, draws, ctx.tier.value)
    start = time.perf_counter()
    for i in range(draws):
        rng = np.random.default_rng(sub_seed(master_seed, i))
        for _ in range(cfg.max_retries + 1):
            basic, extra = sample_degeneration(pair, rng, cfg, n_max)
            try:
                summary.reports.append(check_degeneration(pair, basic, ctx, extra))
                break
            except SingularInput:
                summary.rejected += 1
    summary.elapsed_ms = (time.perf_counter() - start) * 1e3
    return summary


__all__ = [
    "DEFAULT_P_SEQUENCE", "DEGENERATION_N_MAX", "DEGENERATION_SAMPLER", "SHRINK_FACTOR", "DegenerationPair", "DegenerationReport", "DegenerationSummary",
    "check_degeneration", "get_pair", "list_pairs", "run_degeneration", "sample_degeneration",
]
