"""Command-line front end: run verification suites, degeneration checks and
single series evaluations, and write machine-readable reports.

Exit codes: 0 when every executed check passed, 1 on a verification failure,
2 on a usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from . import __version__
from .identities import list_identities, verify_many
from .identities.registry import get
from .limits import DEGENERATION_N_MAX, get_pair, list_pairs, run_degeneration
from .numerics import PrecisionContext, SingularInput, Tier, to_pair
from .series import FactorGroup, InvalidSeries, MixedSeriesSpec, Position, VWPRatio, eval_mixed
from .theta import EllipticBase

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class Command(str, Enum):
    LIST = "list"
    VERIFY = "verify"
    VERIFY_ALL = "verify-all"
    LIMIT = "limit"
    LIMIT_ALL = "limit-all"
    REPLAY = "replay"
    EVAL = "eval"


class UsageError(Exception):
    """Invalid command-line configuration (exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    command: Command
    identity: str | None = None
    trials: int | None = None
    seed: int = 1
    precision: Tier = Tier.DOUBLE_DOUBLE
    tolerance: float | None = None
    n_max: int | None = None
    json_path: Path | None = None
    kind: str | None = None
    jobs: int = 1
    escalate: bool = True
    spec_path: str | None = None

    def __post_init__(self):
        if self.trials is not None and self.trials < 1:
            raise UsageError("--trials must be >= 1")
        if self.n_max is not None and self.n_max < 0:
            raise UsageError("--n-max must be >= 0")
        if self.tolerance is not None and not self.tolerance > 0:
            raise UsageError("--tolerance must be positive")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")

    @property
    def ctx(self) -> PrecisionContext:
        return PrecisionContext(self.precision)


DEFAULT_TRIALS = 100
DEFAULT_N_MAX = 8
#: defaults of the degeneration and proof-replay suites
DEFAULT_LIMIT_DRAWS = 25
DEFAULT_REPLAY_TRIALS = 25
DEFAULT_REPLAY_N_MAX = 6


def _finite(obj):
    """Replace non-finite floats by ``None`` so the report is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_finite(obj), indent=2, allow_nan=False) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.3e}" if math.isfinite(x) else str(x)


def _table(rows: list[tuple], header: tuple, out) -> None:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    for row in [header, *rows]:
        print("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip(), file=out)


def _check_identity(name: str | None, valid: list[str]) -> str:
    if name is None:
        raise UsageError("--identity is required for this command")
    if name not in valid:
        raise UsageError(f"unknown identity {name!r}; valid names:\n  " + "\n  ".join(valid))
    return name


def _run_verify(cfg: RunConfig, names: list[str], trials: int, n_max: int, out) -> tuple[int, list]:
    reports = [verify_many(name, trials, cfg.seed, cfg.ctx, n_max=n_max, tolerance=cfg.tolerance,
                           jobs=cfg.jobs, escalate=cfg.escalate) for name in names]
    rows = [(r.identity, r.trials, _fmt(r.max_residual), _fmt(r.tolerance), _fmt(r.max_zero_residual),
             r.escalated, r.status, f"{r.elapsed_ms / 1e3:.2f}s") for r in reports]
    _table(rows, ("identity", "trials", "max_residual", "tolerance", "max_zero_residual", "escalated",
                  "status", "time"), out)
    ok = all(r.passed for r in reports)
    return (EXIT_OK if ok else EXIT_FAILURE), [r.to_json() for r in reports]


def _run_limits(cfg: RunConfig, names: list[str], out) -> tuple[int, list]:
    draws = cfg.trials or DEFAULT_LIMIT_DRAWS
    n_max = DEGENERATION_N_MAX if cfg.n_max is None else cfg.n_max
    summaries = [run_degeneration(get_pair(name), draws, cfg.seed, cfg.ctx, n_max=n_max) for name in names]
    rows = [(s.pair.elliptic, s.pair.basic, s.draws, _fmt(s.max_error), len(s.failures),
             "pass" if s.passed else "fail", f"{s.elapsed_ms / 1e3:.2f}s") for s in summaries]
    _table(rows, ("elliptic", "basic", "draws", "max_error", "order_failures", "status", "time"), out)
    ok = all(s.passed for s in summaries)
    return (EXIT_OK if ok else EXIT_FAILURE), [s.to_json() for s in summaries]


def _complex(value, what: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise UsageError(f"{what}: expected a number or an [re, im] pair, got {value!r}")


def _base(obj, what: str, ctx: PrecisionContext) -> EllipticBase:
    if not isinstance(obj, dict) or "q" not in obj:
        raise UsageError(f"{what}: expected an object with 'q' and optional 'p'")
    try:
        return EllipticBase.make(_complex(obj["q"], f"{what}.q"), _complex(obj.get("p", 0), f"{what}.p"), ctx)
    except ValueError as exc:
        raise UsageError(f"{what}: {exc}") from exc


def parse_series(doc, ctx: PrecisionContext) -> MixedSeriesSpec:
    """Build a :class:`MixedSeriesSpec` from its JSON description.

    ``{"n": 3, "z": [re, im], "vwp": {"a1": .., "base": {"q": .., "p": ..}},
    "groups": [{"position": "numerator", "base": {..}, "params": [..]}]}``;
    complex numbers are ``[re, im]`` pairs or plain reals, ``vwp`` is optional.
    """
    if not isinstance(doc, dict):
        raise UsageError("series description must be a JSON object")
    unknown = set(doc) - {"n", "z", "vwp", "groups"}
    if unknown:
        raise UsageError(f"unknown series fields {sorted(unknown)}")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise UsageError("'n' must be a non-negative integer")
    groups = []
    for i, g in enumerate(doc.get("groups", [])):
        if not isinstance(g, dict):
            raise UsageError(f"groups[{i}] must be an object")
        try:
            position = Position(g.get("position", "numerator"))
        except ValueError as exc:
            raise UsageError(f"groups[{i}].position must be 'numerator' or 'denominator'") from exc
        params = [ctx.num(_complex(x, f"groups[{i}].params")) for x in g.get("params", [])]
        try:
            groups.append(FactorGroup(tuple(params), _base(g.get("base"), f"groups[{i}].base", ctx), position))
        except ValueError as exc:
            raise UsageError(f"groups[{i}]: {exc}") from exc
    vwp = None
    if doc.get("vwp") is not None:
        v = doc["vwp"]
        if not isinstance(v, dict) or "a1" not in v:
            raise UsageError("'vwp' must be an object with 'a1' and 'base'")
        vwp = VWPRatio(ctx.num(_complex(v["a1"], "vwp.a1")), _base(v.get("base"), "vwp.base", ctx))
    return MixedSeriesSpec(groups=tuple(groups), z=ctx.num(_complex(doc.get("z", 1), "z")), n=n, vwp=vwp)


def _run_eval(cfg: RunConfig, out) -> tuple[int, list]:
    if cfg.spec_path is None:
        raise UsageError("eval needs a series description file (or '-' for stdin)")
    try:
        text = sys.stdin.read() if cfg.spec_path == "-" else Path(cfg.spec_path).read_text()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read series description: {exc}") from exc
    ctx = cfg.ctx
    spec = parse_series(doc, ctx)
    try:
        with ctx.working():
            result = eval_mixed(spec, ctx)
    except (SingularInput, InvalidSeries) as exc:
        raise UsageError(f"series cannot be evaluated: {exc}") from exc
    record = {"value": to_pair(result.value), "max_term": float(result.max_term), "terms": result.terms,
              "precision": ctx.tier.value, "working_digits": result.working_digits}
    print(f"value = {complex(*record['value'])!r}  max_term = {_fmt(record['max_term'])}  "
          f"terms = {record['terms']}", file=out)
    return EXIT_OK, [record]


def run(cfg: RunConfig, out=None) -> int:
    """Execute ``cfg``; returns the process exit code."""
    out = out or sys.stdout
    try:
        code, report = _dispatch(cfg, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.json_path is not None and report is not None:
        try:
            Path(cfg.json_path).write_text(dump_json(report))
        except OSError as exc:
            print(f"error: cannot write {cfg.json_path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    return code


def _dispatch(cfg: RunConfig, out) -> tuple[int, list | None]:
    cmd = cfg.command
    if cmd is Command.LIST:
        names = list_identities(cfg.kind)
        _table([(n, get(n).kind, get(n).description) for n in names], ("identity", "kind", "description"), out)
        return EXIT_OK, [{"identity": n, "kind": get(n).kind, "description": get(n).description} for n in names]
    trials = cfg.trials or DEFAULT_TRIALS
    n_max = DEFAULT_N_MAX if cfg.n_max is None else cfg.n_max
    if cmd is Command.VERIFY:
        return _run_verify(cfg, [_check_identity(cfg.identity, list_identities())], trials, n_max, out)
    if cmd is Command.VERIFY_ALL:
        names = list_identities(cfg.kind)
        if not names:
            raise UsageError(f"no identities of kind {cfg.kind!r}")
        return _run_verify(cfg, names, trials, n_max, out)
    if cmd is Command.REPLAY:
        valid = list_identities("replay")
        names = [_check_identity(cfg.identity, valid)] if cfg.identity else valid
        n_max = DEFAULT_REPLAY_N_MAX if cfg.n_max is None else cfg.n_max
        return _run_verify(cfg, names, cfg.trials or DEFAULT_REPLAY_TRIALS, n_max, out)
    if cmd is Command.LIMIT:
        return _run_limits(cfg, [_check_identity(cfg.identity, [p.elliptic for p in list_pairs()])], out)
    if cmd is Command.LIMIT_ALL:
        return _run_limits(cfg, [p.elliptic for p in list_pairs()], out)
    if cmd is Command.EVAL:
        return _run_eval(cfg, out)
    raise UsageError(f"unknown command {cmd!r}")  # pragma: no cover


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellhyp", description="Evaluate and numerically verify elliptic hypergeometric series identities.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    common.add_argument("--precision", choices=[t.value for t in Tier], default=Tier.DOUBLE_DOUBLE.value,
                        help="arithmetic tier (default double-double)")
    common.add_argument("--json", dest="json_path", type=Path, help="write the JSON report to this file")
    run_opts = argparse.ArgumentParser(add_help=False)
    run_opts.add_argument("--trials", type=int, help="random trials per identity (default 100; 25 for replay/limit)")
    run_opts.add_argument("--tolerance", type=float, help="override the relative and zero-target tolerances")
    run_opts.add_argument("--n-max", dest="n_max", type=int, help="largest sampled series length n")
    run_opts.add_argument("--jobs", type=int, default=1, help="worker processes per identity (default 1)")
    run_opts.add_argument("--no-escalate", dest="escalate", action="store_false",
                          help="do not re-run failing trials in multiprecision")
    ident = argparse.ArgumentParser(add_help=False)
    ident.add_argument("--identity", help="registry name")

    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    p = sub.add_parser("list", parents=[common], help="list registered identities")
    p.add_argument("--kind", help="only identities of this kind")
    sub.add_parser("verify", parents=[common, run_opts, ident], help="verify one identity")
    p = sub.add_parser("verify-all", parents=[common, run_opts], help="verify every registered identity")
    p.add_argument("--kind", help="only identities of this kind")
    sub.add_parser("limit", parents=[common, run_opts, ident], help="check one p -> 0 degeneration")
    sub.add_parser("limit-all", parents=[common, run_opts], help="check every p -> 0 degeneration")
    sub.add_parser("replay", parents=[common, run_opts, ident], help="run the double-sum proof replays")
    p = sub.add_parser("eval", parents=[common], help="evaluate a series given as JSON")
    p.add_argument("spec", help="path of the JSON series description, '-' for stdin")
    return parser


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    fields = vars(ns)
    try:
        return RunConfig(
            command=Command(fields["command"]),
            identity=fields.get("identity"),
            trials=fields.get("trials"),
            seed=fields["seed"],
            precision=Tier(fields["precision"]),
            tolerance=fields.get("tolerance"),
            n_max=fields.get("n_max"),
            json_path=fields.get("json_path"),
            kind=fields.get("kind"),
            jobs=fields.get("jobs", 1),
            escalate=fields.get("escalate", True),
            spec_path=fields.get("spec"),
        )
    except UsageError as exc:
        build_parser().error(str(exc))


def main(argv: Sequence[str] | None = None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
