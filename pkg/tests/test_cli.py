"""Tests for the ``semiinv`` command line and analyzer configuration."""

from __future__ import annotations

import io
import json
from pathlib import Path

import pytest

from semiinv_sdk import SubmersionAnalyzer, builtin
from semiinv_sdk.analyzer import TOL_SCALE_ENV
from semiinv_sdk.cli import EXIT_FAILED, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, main
from semiinv_sdk.scenarios import REGISTRY

FAST = ["--samples", "3"]

DEGENERATE = """
total {
  dim 2
  coords x1 x2
  metric diag(1, x1)
  J rows [ [0, -1] [1, 0] ]
  domain x1 in (-1, -0.5)
}
base { dim 1 coords y1 metric diag(1) }
map { y1 = x2 }
"""


def run(*argv: str) -> tuple[int, str]:
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


class TestClassify:
    def test_example(self):
        code, out = run(*FAST, "classify", "builtin:example3")
        assert code == EXIT_OK
        assert out == "CLASSIFICATION semi_invariant dimD1=2 dimD2=1 dimMu=2\n"

    def test_generic_is_not_an_error(self):
        code, out = run(*FAST, "classify", "builtin:generic_rotated")
        assert code == EXIT_OK
        assert out.startswith("CLASSIFICATION generic")

    def test_json(self):
        code, out = run(*FAST, "--json", "classify", "builtin:scaled_fiber")
        payload = json.loads(out)
        assert code == EXIT_OK
        assert (payload["kind"], payload["dim_d1"], payload["dim_d2"], payload["dim_mu"]) == ("semi_invariant", 2, 1, 0)

    def test_scenario_file(self):
        path = Path(__file__).resolve().parent.parent / "scenarios" / "example3.scn"
        code, out = run(*FAST, "classify", str(path))
        assert code == EXIT_OK
        assert "dimD1=2" in out


class TestAnalyze:
    def test_all_pass(self):
        code, out = run(*FAST, "analyze", "builtin:example3")
        assert code == EXIT_OK
        lines = out.splitlines()
        assert any(line.startswith("riemannian_submersion") and "PASS" in line for line in lines)
        assert "\033[" not in out

    def test_failure_exit_code(self):
        code, out = run(*FAST, "analyze", "builtin:scaled_fiber")
        assert code == EXIT_FAILED
        assert "FAIL" in out

    def test_json_is_deterministic(self):
        first = run(*FAST, "--json", "analyze", "builtin:anti_invariant_r2")[1]
        second = run(*FAST, "--json", "analyze", "builtin:anti_invariant_r2")[1]
        assert first == second
        records = [json.loads(line) for line in first.splitlines()]
        names = [r["check_name"] for r in records]
        assert names == sorted(names)
        assert {r["status"] for r in records} <= {"PASS", "NOT-APPLICABLE"}

    def test_seed_changes_points(self):
        first = run("--samples", "2", "--seed", "1", "--json", "analyze", "builtin:umbilical_witness")[1]
        second = run("--samples", "2", "--seed", "2", "--json", "analyze", "builtin:umbilical_witness")[1]
        assert first != second


class TestExitCodes:
    def test_malformed_file(self, tmp_path: Path, capsys):
        path = tmp_path / "broken.scn"
        path.write_text("total {\n  dim x\n}\n", encoding="utf-8")
        code, _ = run("classify", str(path))
        assert code == EXIT_INPUT
        assert "line 2" in capsys.readouterr().err

    def test_missing_file(self, tmp_path: Path):
        assert run("analyze", str(tmp_path / "absent.scn"))[0] == EXIT_INPUT

    def test_unknown_builtin(self):
        assert run("classify", "builtin:nope")[0] == EXIT_INPUT

    def test_degenerate_metric(self, tmp_path: Path, capsys):
        path = tmp_path / "degenerate.scn"
        path.write_text(DEGENERATE, encoding="utf-8")
        code, _ = run(*FAST, "classify", str(path))
        assert code == EXIT_NUMERICAL
        assert "numerical degeneracy" in capsys.readouterr().err

    def test_verify_needs_suite_flag(self):
        with pytest.raises(SystemExit) as info:
            main(["verify"], out=io.StringIO())
        assert info.value.code == 2


class TestListAndVerify:
    def test_list(self):
        code, out = run("list")
        assert code == EXIT_OK
        assert [line.split()[0] for line in out.splitlines()] == list(REGISTRY)

    def test_verify_suite_at_default_samples(self):
        code, out = run("--json", "verify", "--suite")
        again, repeat = run("--json", "verify", "--suite")
        assert repeat == out
        assert again == code
        summaries = [json.loads(line) for line in out.splitlines() if '"suite_ok"' in line]
        assert [s["scenario"] for s in summaries] == list(REGISTRY)
        assert all(s["suite_ok"] for s in summaries), [s for s in summaries if not s["suite_ok"]]
        assert code == EXIT_OK


class TestConfiguration:
    def test_tolerance_scale_from_env(self, monkeypatch):
        monkeypatch.setenv(TOL_SCALE_ENV, "10")
        a = SubmersionAnalyzer(builtin("anti_invariant_r2"), samples=1)
        assert a.tol_scale == 10.0
        assert a.tolerances.membership == pytest.approx(1e-6)

    def test_keyword_beats_env(self, monkeypatch):
        monkeypatch.setenv(TOL_SCALE_ENV, "10")
        a = SubmersionAnalyzer(builtin("anti_invariant_r2"), samples=1, tol_scale=1.0)
        assert a.tolerances.membership == pytest.approx(1e-7)

    def test_scenario_options_are_defaults(self):
        spec = builtin("example3")
        a = SubmersionAnalyzer(spec)
        assert (a.seed, a.samples) == (spec.seed, spec.samples)
        assert len(a.points) == spec.samples
        assert "example3" in repr(a)
