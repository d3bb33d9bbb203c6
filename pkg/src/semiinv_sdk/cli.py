"""``semiinv`` command line: classify scenarios, run the checks, verify the suite."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence, TextIO

from .analyzer import SubmersionAnalyzer
from .errors import ExpressionError, NumericalDegeneracy, ScenarioError
from .reports import CheckReport, Status
from .scenarios import REGISTRY, SUITE_EXPECTATIONS, builtin, resolve

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_COLOURS = {
    Status.PASS: "\033[32m",
    Status.FAIL: "\033[31m",
    Status.NOT_APPLICABLE: "\033[33m",
    Status.THEOREM_VIOLATION: "\033[35m",
}
_RESET = "\033[0m"


def _parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="semiinv", description="Numerical checks for semi-invariant submersions.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log per-point evaluation to stderr.")
    parser.add_argument("--seed", type=int, default=None, help="Sampling seed (default: scenario option, then 42).")
    parser.add_argument("--samples", type=int, default=None, help="Sample points per scenario (default 16).")
    parser.add_argument("--tol-scale", type=float, default=None, help="Multiply every tolerance by this factor.")
    parser.add_argument("--json", action="store_true", help="Emit one JSON object per line.")

    sub = parser.add_subparsers(dest="command", required=True)
    classify = sub.add_parser("classify", help="Print the classification of a scenario.")
    classify.add_argument("scenario", help="Scenario file or builtin:NAME.")
    analyze = sub.add_parser("analyze", help="Run every check on a scenario.")
    analyze.add_argument("scenario", help="Scenario file or builtin:NAME.")
    verify = sub.add_parser("verify", help="Run the acceptance suite over the built-ins.")
    verify.add_argument("--suite", action="store_true", required=True, help="Run every built-in scenario.")
    sub.add_parser("list", help="List the built-in scenarios.")
    return parser.parse_args(argv)


def _configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("semiinv_sdk")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)


def _colour(status: Status, text: str, stream: TextIO) -> str:
    if os.environ.get("NO_COLOR") or not stream.isatty():
        return text
    return f"{_COLOURS[status]}{text}{_RESET}"


def _emit_reports(reports: Sequence[CheckReport], as_json: bool, out: TextIO, prefix: str = "") -> None:
    if as_json:
        for report in reports:
            out.write(report.to_json_line() + "\n")
        return
    width = max((len(r.check_name) for r in reports), default=0)
    for r in reports:
        status = _colour(r.status, f"{r.status.value:<17}", out)
        line = f"{prefix}{r.check_name:<{width}}  {status} {r.max_residual:.3e} (tol {r.tolerance:.1e})"
        if r.reason:
            line += f"  {r.reason}"
        out.write(line.rstrip() + "\n")


def _exit_code(reports: Sequence[CheckReport]) -> int:
    bad = (Status.FAIL, Status.THEOREM_VIOLATION)
    return EXIT_FAILED if any(r.status in bad for r in reports) else EXIT_OK


def _analyzer(reference: str, args: argparse.Namespace) -> SubmersionAnalyzer:
    return SubmersionAnalyzer(resolve(reference), seed=args.seed, samples=args.samples, tol_scale=args.tol_scale)


def cmd_classify(args: argparse.Namespace, out: TextIO) -> int:
    result = _analyzer(args.scenario, args).classify()
    if args.json:
        payload = {
            "kind": result.kind,
            "dim_d1": result.dim_d1,
            "dim_d2": result.dim_d2,
            "dim_mu": result.dim_mu,
            "spectrum_summary": result.spectrum_summary,
        }
        out.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        out.write(result.to_line() + "\n")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace, out: TextIO) -> int:
    reports = _analyzer(args.scenario, args).analyze()
    _emit_reports(reports, args.json, out)
    return _exit_code(reports)


def _suite_mismatches(name: str, analyzer: SubmersionAnalyzer, reports: Sequence[CheckReport]) -> list[str]:
    expected = SUITE_EXPECTATIONS.get(name)
    problems = [f"{r.check_name}: {r.reason or r.status.value}" for r in reports if r.reason == "disagreement"]
    problems += [f"{r.check_name}: theorem violation" for r in reports if r.status == Status.THEOREM_VIOLATION]
    if expected is None:
        return problems
    kind = analyzer.classification()
    if kind.kind != expected.kind or (kind.dim_d1, kind.dim_d2, kind.dim_mu) != expected.dims:
        problems.append(f"classification {kind.to_line()} != {expected.kind} {expected.dims}")
    by_name = {r.check_name: r for r in reports}
    for check, status in expected.statuses.items():
        got = by_name.get(check)
        if got is None or got.status != status:
            problems.append(f"{check}: expected {status.value}, got {got.status.value if got else 'nothing'}")
    return problems


def cmd_verify(args: argparse.Namespace, out: TextIO) -> int:
    failed = False
    for name in REGISTRY:
        analyzer = SubmersionAnalyzer(builtin(name), seed=args.seed, samples=args.samples, tol_scale=args.tol_scale)
        reports = analyzer.analyze()
        problems = _suite_mismatches(name, analyzer, reports)
        failed = failed or bool(problems)
        if args.json:
            for report in reports:
                out.write(report.to_json_line(scenario=name) + "\n")
            out.write(json.dumps({"scenario": name, "suite_ok": not problems, "problems": problems}, sort_keys=True) + "\n")
        else:
            verdict = "ok" if not problems else "MISMATCH"
            out.write(f"{name}: {verdict}\n")
            for problem in problems:
                out.write(f"  {problem}\n")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_list(args: argparse.Namespace, out: TextIO) -> int:
    for name in REGISTRY:
        spec = builtin(name)
        if args.json:
            out.write(json.dumps({"name": name, "label": spec.label}, sort_keys=True) + "\n")
        else:
            out.write(f"{name:<20} {spec.label}\n")
    return EXIT_OK


COMMANDS = {"classify": cmd_classify, "analyze": cmd_analyze, "verify": cmd_verify, "list": cmd_list}


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    args = _parse_args(argv)
    _configure_logging(args.verbose)
    out = out or sys.stdout
    try:
        return COMMANDS[args.command](args, out)
    except (ExpressionError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalDegeneracy as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
