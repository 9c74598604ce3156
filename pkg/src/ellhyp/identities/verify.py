"""Randomized, seeded verification of registry entries."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from ..numerics import (
    DOUBLE_DOUBLE,
    PrecisionContext,
    SamplerConfig,
    SingularInput,
    Tier,
    rel_residual,
    sample_annulus,
    sample_base,
    sample_nome,
    sample_nome_root,
    sub_seed,
    to_pair,
)
from ..series import MixedSeriesSpec, SeriesSum, eval_mixed
from .registry import ANNULUS, BASE, INT, NOME, NOME_ROOT, IdentityDef, get

DEFAULT_N_MAX = 8

_SAMPLERS = {
    ANNULUS: sample_annulus,
    BASE: sample_base,
    NOME: sample_nome,
    NOME_ROOT: sample_nome_root,
}


class TrialStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    REJECTED = "rejected-singular"


@dataclass
class TrialRecord:
    params: dict
    residual: float
    max_term: float
    status: TrialStatus
    zero_target: bool = False
    tolerance: float = 0.0
    #: decimal digits of the evaluation that produced ``residual``
    working_digits: int = 0
    escalated: bool = False

    def to_json(self) -> dict:
        return {"params": params_to_json(self.params), "residual": self.residual,
                "working_digits": self.working_digits}


@dataclass
class VerificationReport:
    identity: str
    master_seed: int
    trials: int
    precision: str
    tolerance: float
    zero_tolerance: float
    max_residual: float = 0.0
    max_zero_residual: float = 0.0
    rejected: int = 0
    escalated: int = 0
    failures: list = field(default_factory=list)
    elapsed_ms: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures and self.max_residual <= self.tolerance \
            and self.max_zero_residual <= self.zero_tolerance

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "seed": self.master_seed,
            "trials": self.trials,
            "precision": self.precision,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "max_zero_residual": self.max_zero_residual,
            "zero_tolerance": self.zero_tolerance,
            "rejected": self.rejected,
            "escalated": self.escalated,
            "status": self.status,
            "failures": [f.to_json() for f in self.failures],
            "elapsed_ms": self.elapsed_ms,
        }


def params_to_json(params: dict) -> dict:
    return {k: (v if isinstance(v, (int, np.integer)) and not isinstance(v, bool) else to_pair(v))
            for k, v in params.items()}


def _bound(b, values: dict, default: int) -> int:
    if b is None:
        return default
    return int(b(values)) if callable(b) else int(b)


def sample_free(defn: IdentityDef, rng: np.random.Generator, cfg: SamplerConfig,
                n_max: int = DEFAULT_N_MAX) -> dict:
    """Draw the free parameters of ``defn`` in schema order."""
    values: dict = {}
    for prm in defn.free_params:
        if prm.role == INT:
            lo = _bound(prm.lo, values, 0)
            hi = _bound(prm.hi, values, n_max)
            if prm.hi is not None and not callable(prm.hi) and prm.name == "n":
                hi = min(hi, n_max)
            values[prm.name] = int(rng.integers(lo, max(lo, hi) + 1))
        else:
            values[prm.name] = _SAMPLERS[prm.role](rng, cfg)
    return values


def evaluate_side(side, ctx: PrecisionContext) -> tuple:
    """``(value, max_term)`` of a side evaluator's result."""
    if isinstance(side, MixedSeriesSpec):
        side = eval_mixed(side, ctx)
    if isinstance(side, SeriesSum):
        return side.value, side.max_term
    return side, 1.0


def tolerances(defn: IdentityDef, ctx: PrecisionContext, override: float | None = None) -> tuple[float, float]:
    """(relative, zero-target) tolerances for ``defn`` under ``ctx``."""
    t = override if override is not None else defn.tolerance
    if t is not None:
        return t, t
    return ctx.rel_tolerance, ctx.zero_tolerance


def verify_once(name: str | IdentityDef, free_params: dict, ctx: PrecisionContext = DOUBLE_DOUBLE,
                tolerance: float | None = None, escalate: bool = True) -> TrialRecord:
    """Resolve, evaluate both sides and score one parameter point.

    With ``escalate``, a trial that fails in the tier of ``ctx`` is re-run end
    to end (constraint resolution included) in the multiprecision tier at
    increasing precision, up to ``ctx.max_escalation_digits``.  Ill-conditioned
    points, where ``max_term / |sum|`` amplifies the rounding of derived
    parameters, then pass; a wrong formula fails at every precision.  The
    tolerances stay those of ``ctx``.
    """
    defn = get(name) if isinstance(name, str) else name
    missing = {p.name for p in defn.free_params} - set(free_params)
    if missing:
        raise ValueError(f"{defn.name}: missing free parameters {sorted(missing)}")
    rel_tol, zero_tol = tolerances(defn, ctx, tolerance)
    rec = _score(defn, free_params, ctx, rel_tol, zero_tol)
    if not escalate or rec.status is not TrialStatus.FAIL:
        return rec
    digits = max(64, 2 * ctx.digits)
    while digits <= ctx.max_escalation_digits:
        mctx = replace(ctx, tier=Tier.MULTI, mp_digits=digits, rel_tolerance=ctx.rel_tolerance)
        rec = _score(defn, free_params, mctx, rel_tol, zero_tol)
        rec.escalated = True
        if rec.status is not TrialStatus.FAIL:
            break
        digits *= 2
    return rec


def _score(defn: IdentityDef, free_params: dict, ctx: PrecisionContext, rel_tol: float,
           zero_tol: float) -> TrialRecord:
    shown = {k: (v if isinstance(v, int) else complex(v)) for k, v in free_params.items()}
    with ctx.working():
        try:
            P = defn.full_params(free_params, ctx)
            zero = bool(defn.zero_rhs(P)) if defn.zero_rhs is not None else False
            ectx = ctx
            if zero:
                # an exact-zero target is scored against max_term; chasing relative
                # accuracy of a vanishing sum by escalating precision is pointless
                ectx = replace(ctx, accuracy_goal=0.0)
            lhs, lhs_max = evaluate_side(defn.lhs(P, ectx), ectx)
            if zero:
                residual = float(abs(lhs)) / max(lhs_max, 1e-300)
            else:
                rhs, _ = evaluate_side(defn.rhs(P, ectx), ectx)
                residual = rel_residual(lhs, rhs)
        except SingularInput:
            return TrialRecord(shown, 0.0, 0.0, TrialStatus.REJECTED, working_digits=ctx.digits)
        except OverflowError:
            # a value beyond the tier's exponent range: a failure of this tier,
            # which escalation to multiprecision can repair
            return TrialRecord(shown, math.inf, 0.0, TrialStatus.FAIL, working_digits=ctx.digits)
        shown = {k: (v if isinstance(v, int) else complex(to_pair_complex(v))) for k, v in P.items()}
    tol = zero_tol if zero else rel_tol
    ok = residual <= tol  # NaN fails
    return TrialRecord(shown, residual, float(lhs_max), TrialStatus.PASS if ok else TrialStatus.FAIL,
                       zero, tol, working_digits=ctx.digits)


def to_pair_complex(v) -> complex:
    re, im = to_pair(v)
    return complex(re, im)


def run_trial(name: str, master_seed: int, index: int, ctx: PrecisionContext, cfg: SamplerConfig,
              n_max: int = DEFAULT_N_MAX, tolerance: float | None = None,
              escalate: bool = True) -> tuple[TrialRecord, int]:
    """One trial with rejection resampling; returns the record and the number of rejections."""
    defn = get(name)
    rng = np.random.default_rng(sub_seed(master_seed, index))
    for attempt in range(cfg.max_retries + 1):
        rec = verify_once(defn, sample_free(defn, rng, cfg, n_max), ctx, tolerance, escalate)
        if rec.status is not TrialStatus.REJECTED:
            return rec, attempt
    return rec, cfg.max_retries + 1


def verify_many(name: str, trials: int, master_seed: int, ctx: PrecisionContext = DOUBLE_DOUBLE,
                cfg: SamplerConfig | None = None, n_max: int = DEFAULT_N_MAX,
                tolerance: float | None = None, jobs: int = 1, escalate: bool = True) -> VerificationReport:
    """Run ``trials`` independently sub-seeded trials of ``name``.

    The aggregate depends only on the inputs, not on ``jobs`` or the order in
    which trials complete.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    defn = get(name)
    cfg = cfg or SamplerConfig(singularity_floor=ctx.singularity_floor)
    ctx_run = ctx
    if cfg.singularity_floor != ctx.singularity_floor:
        ctx_run = replace(ctx, singularity_floor=cfg.singularity_floor)
    rel_tol, zero_tol = tolerances(defn, ctx_run, tolerance)
    start = time.perf_counter()
    args = [(name, master_seed, i, ctx_run, cfg, n_max, tolerance, escalate) for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial_star, args))
    else:
        results = [run_trial(*a) for a in args]
    report = VerificationReport(name, master_seed, trials, ctx_run.tier.value, rel_tol, zero_tol)
    for rec, rejected in results:
        report.rejected += rejected
        report.escalated += rec.escalated
        if rec.status is TrialStatus.REJECTED:
            report.failures.append(rec)
            continue
        if rec.zero_target:
            report.max_zero_residual = max(report.max_zero_residual, rec.residual)
        else:
            report.max_residual = max(report.max_residual, rec.residual)
        if rec.status is TrialStatus.FAIL:
            report.failures.append(rec)
    report.elapsed_ms = (time.perf_counter() - start) * 1e3
    return report


def _run_trial_star(a):
    return run_trial(*a)
