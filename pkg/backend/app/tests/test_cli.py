import json
import math

import pytest

from backend.app import cli
from backend.app.models.dto import CheckResult, VerifySummary


def _run(capsys, *argv):
    status = cli.run(list(argv))
    captured = capsys.readouterr()
    return status, captured.out, captured.err


def test_counterexample_json_passes(capsys):
    status, out, _ = _run(capsys, "counterexample", "--n", "500,1000,5000", "--format", "json")
    assert status == cli.EXIT_OK
    body = json.loads(out)
    assert body["verdict"] == "pass"
    assert body["decisive_n"] == 5000
    assert [row["n"] for row in body["rows"]] == [500, 1000, 5000]


def test_counterexample_small_n_fails(capsys):
    status, out, err = _run(capsys, "counterexample", "--n", "10")
    assert status == cli.EXIT_FAILED
    assert out.splitlines()[0] == "n,q_log,rate"
    assert "verdict failed" in err


def test_figure1_csv(capsys):
    status, out, _ = _run(capsys, "figure1")
    assert status == cli.EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 1002
    assert lines[0] == "x,I_p,I"
    x, i_p, i = lines[-1].split(",")
    assert float(x) == 1.0
    assert float(i_p) == pytest.approx(math.log(2.0), abs=1e-11)
    assert float(i) == pytest.approx(math.log(4.0 / 3.0), abs=1e-11)


def test_exposed_defaults_to_json(capsys):
    status, out, _ = _run(capsys, "exposed", "--y", "0.1")
    assert status == cli.EXIT_OK
    body = json.loads(out)
    assert body["exposed"] is True
    assert body["hyperplane"] == pytest.approx(math.log(1.0 / 3.0), abs=1e-12)


def test_exposed_gamma_variant(capsys):
    status, out, _ = _run(capsys, "exposed", "--y", "0.5", "--variant", "gamma")
    assert status == cli.EXIT_OK
    assert json.loads(out)["side_conditions"]["limit_exists"] is True


def test_rate_csv_writes_infinity(capsys):
    status, out, _ = _run(capsys, "rate", "--grid", "-0.1:1.1:0.1")
    assert status == cli.EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "x,rate"
    assert lines[1] == "-0.1,inf"
    assert lines[-1] == "1.1,inf"


def test_rate_json_writes_infinity_as_string(capsys):
    status, out, _ = _run(capsys, "rate", "--kind", "bernoulli", "--grid", "1:1.1:0.1", "--format", "json")
    assert status == cli.EXIT_OK
    assert json.loads(out)[-1] == {"x": 1.1, "rate": "inf"}


@pytest.mark.parametrize(
    "argv",
    [
        ["nonsense"],
        ["exposed"],
        ["rate", "--p", "1.5"],
        ["rate", "--grid", "1:0:0.1"],
        ["rate", "--grid", "zero:one:tenth"],
        ["counterexample", "--a", "0.2", "--b", "0.2"],
        ["counterexample", "--n", "0"],
        ["bounds", "--intervals", "0.5"],
        ["chernoff", "--c", "0.7"],
        ["figure1", "--grid", "-0.5:1:0.5"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    status, out, _ = _run(capsys, *argv)
    assert status == cli.EXIT_USAGE
    assert out == ""


def test_negative_values_can_follow_their_option(capsys):
    status, out, err = _run(capsys, "cgf", "--which", "lambda", "--grid", "-2:2:1")
    assert status == cli.EXIT_OK, err
    lines = out.splitlines()
    assert lines[0] == "lam,value"
    assert lines[1].startswith("-2,")
    assert lines[3] == "0,0"
    assert len(lines) == 6

    status, out, err = _run(capsys, "bounds", "--intervals", "-0.1:0.1", "--n", "2000")
    assert status == cli.EXIT_OK, err


def test_attach_signed_values():
    assert cli._attach_signed_values(["cgf", "--grid", "-2:2:1", "--p", "0.3"]) == [
        "cgf",
        "--grid=-2:2:1",
        "--p",
        "0.3",
    ]
    assert cli._attach_signed_values(["rate", "--grid", "--p", "0.5"]) == [
        "rate",
        "--grid",
        "--p",
        "0.5",
    ]
    assert cli._attach_signed_values(["rate", "--grid"]) == ["rate", "--grid"]


def test_output_is_deterministic(capsys):
    first = _run(capsys, "cgf", "--which", "gamma", "--n", "50", "--grid", "-2:2:0.5")
    second = _run(capsys, "cgf", "--which", "gamma", "--n", "50", "--grid", "-2:2:0.5")
    assert first == second
    assert first[1].splitlines()[0] == "lam,value"


def test_out_writes_file(capsys, tmp_path):
    target = tmp_path / "figure.csv"
    status, out, _ = _run(capsys, "figure1", "--grid", "0:1:0.25", "--out", str(target))
    assert status == cli.EXIT_OK
    assert out == ""
    assert target.read_text(encoding="utf-8").splitlines()[0] == "x,I_p,I"
    assert len(target.read_text(encoding="utf-8").splitlines()) == 6


def test_fenchel_table(capsys):
    status, out, _ = _run(capsys, "fenchel", "--grid", "0:1:0.1")
    assert status == cli.EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "x,numeric,closed_form,abs_error"
    for line in lines[1:]:
        assert float(line.split(",")[3]) <= 1e-8


def test_bounds_upper_and_lower(capsys):
    status, out, _ = _run(capsys, "bounds", "--intervals", "0.6:0.8,0:0.1", "--format", "json")
    assert status == cli.EXIT_OK
    body = json.loads(out)
    assert body["kind"] == "upper"
    assert body["holds"] is True
    assert len(body["intervals"]) == 2

    status, out, _ = _run(capsys, "bounds", "--kind", "lower", "--intervals", "0.05:0.2")
    assert status == cli.EXIT_OK
    assert out.splitlines()[1].endswith(",true")


def test_chernoff_table(capsys):
    status, out, _ = _run(capsys, "chernoff", "--n", "100,1000", "--lam", "1,2")
    assert status == cli.EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "n,lam,lhs,markov_bound,chernoff_bound,envelope,margin"
    assert len(lines) == 5


def test_verify_failure_exits_one(capsys, monkeypatch):
    summary = VerifySummary(
        seed=7, checks=[CheckResult(name="stub.check", passed=False, margin=-0.5, detail="forced")]
    )
    monkeypatch.setattr(cli, "run_suite", lambda seed=None: summary)
    status, out, err = _run(capsys, "verify", "--seed", "7")
    assert status == cli.EXIT_FAILED
    assert "stub.check" in out
    assert "FAILED stub.check margin=-0.5" in err


def test_verify_success_exits_zero(capsys, monkeypatch):
    summary = VerifySummary(seed=7, checks=[CheckResult(name="stub.check", passed=True, margin=0.5)])
    monkeypatch.setattr(cli, "run_suite", lambda seed=None: summary)
    status, out, _ = _run(capsys, "verify", "--format", "json")
    assert status == cli.EXIT_OK
    assert json.loads(out)["passed"] is True


def test_settings_drive_defaults(capsys, lab_env):
    lab_env({"LDP_LAB_DEFAULT_GRID": "0:1:0.5", "LDP_LAB_CSV_DIGITS": "4"})
    status, out, _ = _run(capsys, "figure1")
    assert status == cli.EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 4
    assert lines[-1] == "1,0.6931,0.2877"
