"""Command-line front end: ``python -m backend.app.cli <subcommand> ...``.

Reports go to stdout (or ``--out``), logs and errors to stderr. Exit status is 0 on
success, 1 when a verdict or invariant fails and 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ValidationError

from backend.app.core.config import get_settings
from backend.app.core.errors import LabError, LabInputError
from backend.app.core.log import configure_logging
from backend.app.lab.cgf import bernoulli_cgf, gamma_finite_n, lambda_chen_feng
from backend.app.lab.extended import to_float
from backend.app.lab.fenchel import (
    ConjugateSearch,
    bernoulli_rate,
    corrected_rate,
    exposed_point_test,
    fenchel_conjugate_numeric,
    gamma_exposed_point_test,
)
from backend.app.lab.grids import (
    make_grid,
    parse_float_list,
    parse_grid_spec,
    parse_int_list,
    parse_intervals,
)
from backend.app.lab.ldp_lab import (
    IntervalEvent,
    counterexample_report,
    figure1_data,
    lower_bound_check,
    tightness_bound_check,
    upper_bound_check,
)
from backend.app.lab.verify import run_suite
from backend.app.models.dto import RunConfig, rows_to_jsonable, to_jsonable

logger = logging.getLogger("ldp-lab")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

Table = Tuple[List[str], List[List[Any]]]
Outcome = Tuple[str, int]


def _cell(value: Any, digits: int) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, f".{digits}g")
    if value is None:
        return ""
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    digits = get_settings().csv_digits
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value, digits) for value in row])
    return buffer.getvalue()


def render_json(payload: BaseModel | List[BaseModel]) -> str:
    return json.dumps(to_jsonable(payload), indent=2) + "\n"


def _render_table(config: RunConfig, table: Table) -> str:
    if config.output_format == "json":
        return json.dumps(rows_to_jsonable(*table), indent=2) + "\n"
    return render_csv(*table)


def _render(config: RunConfig, table: Table, payload: BaseModel | List[BaseModel]) -> str:
    if config.output_format == "json":
        return render_json(payload)
    return render_csv(*table)


def _grid(config: RunConfig):
    assert config.grid is not None
    return make_grid(*config.grid)


def _cmd_rate(args: argparse.Namespace, config: RunConfig) -> Outcome:
    t = args.t if args.t is not None else config.p
    rows = []
    for x in _grid(config):
        x = float(x)
        value = bernoulli_rate(t, x) if args.kind == "bernoulli" else corrected_rate(config.p, x)
        rows.append([x, to_float(value)])
    table = (["x", "rate"], rows)
    return _render_table(config, table), EXIT_OK


def _cmd_cgf(args: argparse.Namespace, config: RunConfig) -> Outcome:
    evaluate: Callable[[float], float]
    if args.which == "bernoulli":
        evaluate = lambda lam: bernoulli_cgf(config.p, lam)  # noqa: E731
    elif args.which == "gamma":
        evaluate = lambda lam: gamma_finite_n(config.p, lam, args.n)  # noqa: E731
    else:
        evaluate = lambda lam: lambda_chen_feng(config.p, lam)  # noqa: E731
    table = (["lam", "value"], [[float(lam), evaluate(float(lam))] for lam in _grid(config)])
    return _render_table(config, table), EXIT_OK


def _cmd_fenchel(args: argparse.Namespace, config: RunConfig) -> Outcome:
    opts = ConjugateSearch.from_settings()
    p = config.p
    if args.which == "bernoulli":
        f, closed = (lambda lam: bernoulli_cgf(p, lam)), (lambda x: bernoulli_rate(p, x))
    else:
        f, closed = (lambda lam: lambda_chen_feng(p, lam)), (lambda x: corrected_rate(p, x))
    rows = []
    for x in _grid(config):
        x = float(x)
        numeric, exact = to_float(fenchel_conjugate_numeric(f, x, opts)), to_float(closed(x))
        error = 0.0 if numeric == exact else abs(numeric - exact)
        rows.append([x, numeric, exact, error])
    table = (["x", "numeric", "closed_form", "abs_error"], rows)
    return _render_table(config, table), EXIT_OK


def _cmd_counterexample(args: argparse.Namespace, config: RunConfig) -> Outcome:
    report = counterexample_report(
        config.p,
        args.a,
        args.b,
        config.n_list,
        tol_true=args.tol_true,
        sep_min=args.sep_min,
        n_min=args.n_min,
    )
    rows = [[row.n, row.q_log, row.rate] for row in report.rows]
    text = _render(config, (["n", "q_log", "rate"], rows), report)
    if report.verdict != "pass":
        print(
            f"counterexample verdict failed: true_gap={report.true_gap} "
            f"refuted_gap={report.refuted_gap}",
            file=sys.stderr,
        )
        return text, EXIT_FAILED
    return text, EXIT_OK


def _cmd_exposed(args: argparse.Namespace, config: RunConfig) -> Outcome:
    test = gamma_exposed_point_test if args.variant == "gamma" else exposed_point_test
    verdict = test(config.p, args.y)
    table = (
        ["point", "exposed", "hyperplane", "margin"],
        [[verdict.point, verdict.is_exposed, verdict.hyperplane, verdict.margin]],
    )
    return _render(config, table, verdict), EXIT_OK


def _cmd_figure1(args: argparse.Namespace, config: RunConfig) -> Outcome:
    rows = figure1_data(config.p, _grid(config))
    table = (["x", "I_p", "I"], [[row.x, row.I_p, row.I] for row in rows])
    return _render(config, table, rows), EXIT_OK


def _cmd_verify(args: argparse.Namespace, config: RunConfig) -> Outcome:
    summary = run_suite(seed=args.seed)
    rows = [[c.name, c.passed, c.margin, c.detail] for c in summary.checks]
    text = _render(config, (["name", "passed", "margin", "detail"], rows), summary)
    for check in summary.checks:
        if not check.passed:
            print(f"FAILED {check.name} margin={check.margin!r}", file=sys.stderr)
    return text, EXIT_OK if summary.passed else EXIT_FAILED


def _cmd_bounds(args: argparse.Namespace, config: RunConfig) -> Outcome:
    bounds = parse_intervals(args.intervals)
    if args.kind == "upper":
        report = upper_bound_check(config.p, [IntervalEvent.closed(a, b) for a, b in bounds], args.n)
    else:
        report = lower_bound_check(config.p, [IntervalEvent.open(a, b) for a, b in bounds], args.n)
    table = (
        ["kind", "n", "rate", "cramer_bound", "slack", "corrected_bound", "margin", "holds"],
        [[report.kind, report.n, report.rate, report.cramer_bound, report.slack,
          report.corrected_bound, report.margin, report.holds]],
    )
    return _render(config, table, report), EXIT_OK if report.holds else EXIT_FAILED


def _cmd_chernoff(args: argparse.Namespace, config: RunConfig) -> Outcome:
    report = tightness_bound_check(config.p, args.c, parse_float_list(args.lam), config.n_list)
    rows = [
        [row.n, row.lam, row.lhs, row.markov_bound, row.chernoff_bound, row.envelope, row.margin]
        for row in report.rows
    ]
    table = (["n", "lam", "lhs", "markov_bound", "chernoff_bound", "envelope", "margin"], rows)
    return _render(config, table, report), EXIT_OK if report.all_hold else EXIT_FAILED


HANDLERS: Dict[str, Callable[[argparse.Namespace, RunConfig], Outcome]] = {
    "rate": _cmd_rate,
    "cgf": _cmd_cgf,
    "fenchel": _cmd_fenchel,
    "counterexample": _cmd_counterexample,
    "exposed": _cmd_exposed,
    "figure1": _cmd_figure1,
    "verify": _cmd_verify,
    "bounds": _cmd_bounds,
    "chernoff": _cmd_chernoff,
}

GRID_COMMANDS = {"rate", "cgf", "fenchel", "figure1"}
SIZE_COMMANDS = {"counterexample", "chernoff"}
# options whose values may start with "-" (negative lambdas, grids and intervals)
SIGNED_OPTIONS = {"--grid", "--intervals", "--lam", "--p", "--t", "--y", "--a", "--b", "--c"}


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, default=settings.default_p, help="Bernoulli parameter in (0, 1)")
    common.add_argument("--format", dest="output_format", choices=["csv", "json"], default=None)
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    gridded = argparse.ArgumentParser(add_help=False)
    gridded.add_argument("--grid", default=settings.default_grid, help="start:stop:step")

    sized = argparse.ArgumentParser(add_help=False)
    sized.add_argument("--n", dest="n_list", default=settings.default_n_list, help="n1,n2,...")

    parser = argparse.ArgumentParser(
        prog="ldp-lab", description="Finite-n large deviations under the capacity V = P(2 - P)."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rate = sub.add_parser("rate", parents=[common, gridded], help="rate function on a grid")
    rate.add_argument("--kind", choices=["bernoulli", "corrected"], default="corrected")
    rate.add_argument("--t", type=float, default=None, help="Bernoulli parameter (defaults to p)")

    cgf = sub.add_parser("cgf", parents=[common, gridded], help="CGF curve on a lambda grid")
    cgf.add_argument("--which", choices=["lambda", "bernoulli", "gamma"], default="lambda")
    cgf.add_argument("--n", type=int, default=100, help="sample size for gamma")

    fenchel = sub.add_parser("fenchel", parents=[common, gridded], help="numeric vs closed-form conjugate")
    fenchel.add_argument("--which", choices=["lambda", "bernoulli"], default="lambda")

    counter = sub.add_parser("counterexample", parents=[common, sized], help="counterexample report")
    counter.add_argument("--a", type=float, default=0.05)
    counter.add_argument("--b", type=float, default=0.2)
    counter.add_argument("--tol-true", type=float, default=None)
    counter.add_argument("--sep-min", type=float, default=None)
    counter.add_argument("--n-min", type=int, default=None)

    exposed = sub.add_parser("exposed", parents=[common], help="exposed-point verdict")
    exposed.add_argument("--y", type=float, required=True)
    exposed.add_argument("--variant", choices=["corrected", "gamma"], default="corrected")

    sub.add_parser("figure1", parents=[common, gridded], help="both rate functions on a grid")

    verify = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    verify.add_argument("--seed", type=int, default=settings.verify_seed)

    bounds = sub.add_parser("bounds", parents=[common], help="finite-n upper/lower bound check")
    bounds.add_argument("--kind", choices=["upper", "lower"], default="upper")
    bounds.add_argument("--intervals", required=True, help="a:b[,c:d...]")
    bounds.add_argument("--n", type=int, default=2000)

    chernoff = sub.add_parser("chernoff", parents=[common, sized], help="Chernoff chain check")
    chernoff.add_argument("--c", type=float, default=0.8)
    chernoff.add_argument("--lam", default="0.5,1,2,4", help="l1,l2,...")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    default_format = "json" if args.command == "exposed" else "csv"
    grid = parse_grid_spec(args.grid) if args.command in GRID_COMMANDS else None
    n_list = parse_int_list(args.n_list) if args.command in SIZE_COMMANDS else []
    options = {
        key: value
        for key, value in vars(args).items()
        if key not in {"command", "p", "grid", "n_list", "output_format", "out"}
    }
    return RunConfig(
        subcommand=args.command,
        p=args.p,
        grid=grid,
        n_list=n_list,
        output_format=args.output_format or default_format,
        out=args.out,
        options=options,
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _attach_signed_values(argv: Sequence[str]) -> List[str]:
    """Rewrite `--grid -2:2:1` as `--grid=-2:2:1` so argparse does not read the value as a flag."""
    joined: List[str] = []
    tokens = iter(argv)
    for token in tokens:
        if token in SIGNED_OPTIONS:
            value = next(tokens, None)
            if value is None:
                joined.append(token)
            elif value.startswith("-") and not value.startswith("--"):
                joined.append(f"{token}={value}")
            else:
                joined.extend((token, value))
        else:
            joined.append(token)
    return joined


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, dispatch, emit the report and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(_attach_signed_values(sys.argv[1:] if argv is None else argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        config = _run_config(args)
        text, status = HANDLERS[args.command](args, config)
    except ValidationError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LabInputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LabError as exc:
        logger.warning("%s refused: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(text, config.out)
    return status


def main() -> None:
    configure_logging()
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
