import json
import subprocess
import sys

import mpmath
import pytest

from ellhyp.cli import (
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_USAGE,
    Command,
    RunConfig,
    UsageError,
    dump_json,
    main,
    parse_args,
    parse_series,
    run,
)
from ellhyp.numerics import DOUBLE_DOUBLE
from ellhyp.oracle import naive_sum

REPORT_FIELDS = {"identity", "seed", "trials", "precision", "max_residual", "tolerance", "status",
                 "failures", "elapsed_ms"}

SERIES = {
    "n": 4,
    "z": [0.7, 0.1],
    "vwp": {"a1": [0.8, 0.3], "base": {"q": [0.55, 0.3], "p": [0.2, -0.1]}},
    "groups": [
        {"position": "numerator", "base": {"q": [0.55, 0.3], "p": [0.2, -0.1]}, "params": [[1.1, 0.2], 0.9]},
        {"position": "denominator", "base": {"q": [0.55, 0.3], "p": [0.2, -0.1]}, "params": [[0.6, -0.4]]},
        {"position": "numerator", "base": {"q": 0.5, "p": 0.1}, "params": [[0.3, 0.7]]},
    ],
}


def _report(tmp_path, argv):
    path = tmp_path / "r.json"
    code = main([*argv, "--json", str(path)])
    return code, json.loads(path.read_text())


def test_verify_passes(tmp_path, capsys):
    code, report = _report(tmp_path, ["verify", "--identity", "v87_delta", "--trials", "50"])
    assert code == EXIT_OK
    assert isinstance(report, list) and len(report) == 1
    entry = report[0]
    assert REPORT_FIELDS <= set(entry)
    assert entry["identity"] == "v87_delta"
    assert entry["trials"] == 50
    assert entry["status"] == "pass"
    assert entry["max_residual"] <= entry["tolerance"]
    assert "v87_delta" in capsys.readouterr().out


def test_verification_failure_exit_code(tmp_path):
    code, report = _report(tmp_path, ["verify", "--identity", "biba", "--trials", "3", "--tolerance", "1e-40",
                                      "--no-escalate"])
    assert code == EXIT_FAILURE
    entry = report[0]
    assert entry["status"] == "fail"
    assert entry["failures"]
    failure = entry["failures"][0]
    assert {"params", "residual"} <= set(failure)
    for v in failure["params"].values():
        assert isinstance(v, int) or (isinstance(v, list) and len(v) == 2)


def test_unknown_identity_is_usage_error(capsys):
    assert main(["verify", "--identity", "no_such_thing"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "no_such_thing" in err and "v87_delta" in err


def test_bad_trials_exit_two():
    with pytest.raises(SystemExit) as exc:
        parse_args(["verify", "--identity", "biba", "--trials", "0"])
    assert exc.value.code == EXIT_USAGE


def test_missing_subcommand_exit_two():
    with pytest.raises(SystemExit) as exc:
        parse_args([])
    assert exc.value.code == EXIT_USAGE


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig(Command.VERIFY, tolerance=-1.0)
    with pytest.raises(UsageError):
        RunConfig(Command.VERIFY, jobs=0)
    with pytest.raises(UsageError):
        RunConfig(Command.VERIFY, n_max=-1)


def test_list_json(tmp_path):
    code, report = _report(tmp_path, ["list", "--kind", "lemma"])
    assert code == EXIT_OK
    names = {e["identity"] for e in report}
    assert {"theta_quasi1", "poch_quasi2", "double_argument_id", "quad_ratio"} <= names
    assert all(e["kind"] == "lemma" for e in report)


def test_verify_all_kind(tmp_path):
    code, report = _report(tmp_path, ["verify-all", "--kind", "lemma", "--trials", "5"])
    assert code == EXIT_OK
    assert all(e["status"] == "pass" for e in report)


def test_verify_all_unknown_kind():
    assert main(["verify-all", "--kind", "no_such_kind", "--trials", "1"]) == EXIT_USAGE


def test_limit_command(tmp_path):
    code, report = _report(tmp_path, ["limit", "--identity", "biba", "--trials", "3"])
    assert code == EXIT_OK
    assert report[0]["identity"] == "biba" and report[0]["basic"] == "biba_p0"
    assert report[0]["status"] == "pass"


def test_replay_command(tmp_path):
    code, report = _report(tmp_path, ["replay", "--trials", "3"])
    assert code == EXIT_OK
    assert {e["identity"] for e in report} == {"biba_double_sum", "new1_double_sum"}


def test_eval_matches_oracle(tmp_path, capsys):
    spec_file = tmp_path / "s.json"
    spec_file.write_text(json.dumps(SERIES))
    code, report = _report(tmp_path, ["eval", str(spec_file)])
    assert code == EXIT_OK
    rec = report[0]
    assert rec["terms"] == 5 and rec["precision"] == "double-double"
    exact = naive_sum(parse_series(SERIES, DOUBLE_DOUBLE), dps=40)
    got = mpmath.mpc(*rec["value"])
    assert abs(got - exact) <= 1e-15 * abs(exact)


def test_eval_rejects_bad_description(tmp_path):
    spec_file = tmp_path / "s.json"
    spec_file.write_text(json.dumps({**SERIES, "n": -1}))
    assert main(["eval", str(spec_file)]) == EXIT_USAGE
    spec_file.write_text(json.dumps({**SERIES, "bogus": 1}))
    assert main(["eval", str(spec_file)]) == EXIT_USAGE
    spec_file.write_text("{not json")
    assert main(["eval", str(spec_file)]) == EXIT_USAGE
    assert main(["eval", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_parse_series_values():
    spec = parse_series(SERIES, DOUBLE_DOUBLE)
    assert spec.n == 4
    assert len(spec.groups) == 3
    assert spec.vwp is not None
    with pytest.raises(UsageError):
        parse_series({"n": 1, "groups": [{"base": {"q": 0.5, "p": 1.5}, "params": [0.3]}]}, DOUBLE_DOUBLE)
    with pytest.raises(UsageError):
        parse_series({"n": 1, "z": "x"}, DOUBLE_DOUBLE)


def test_dump_json_is_strict():
    text = dump_json([{"a": float("nan"), "b": [float("inf"), 1.0]}])
    assert json.loads(text) == [{"a": None, "b": [None, 1.0]}]


def test_json_is_deterministic(tmp_path):
    reports = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert run(RunConfig(Command.VERIFY, identity="new2_12V11", trials=10, seed=3, json_path=path)) == EXIT_OK
        doc = json.loads(path.read_text())
        for e in doc:
            e.pop("elapsed_ms")
        reports.append(json.dumps(doc, sort_keys=True))
    assert reports[0] == reports[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ellhyp", "verify", "--identity", "no_such_thing"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
