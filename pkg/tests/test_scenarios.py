"""Tests for scenario parsing, validation, printing and the built-in registry."""

from __future__ import annotations

from pathlib import Path

import pytest

from semiinv_sdk import ScenarioSpec, builtin, dump_scenario, load_scenario
from semiinv_sdk.errors import LexError, ParseError, UnknownScenario, ValidationError
from semiinv_sdk.expr import parse
from semiinv_sdk.scenarios import REGISTRY, SUITE_EXPECTATIONS, load_scenario_file, resolve

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

LINE = """
# anti-invariant projection of the plane
total {
  dim 2
  coords x1 x2
  metric diag(1, 1)
  J rows [ [0, -1] [1, 0] ]
  domain x1 in (-1.5, 1.5) x2 in (-1, 1)
}
base { dim 1 coords y1 metric diag(1) }
map { y1 = x2 }
seed 7
samples 5
label "line"
"""


def _replace(old: str, new: str) -> str:
    assert old in LINE
    return LINE.replace(old, new)


class TestLoad:
    def test_fields(self):
        spec = load_scenario(LINE)
        assert isinstance(spec, ScenarioSpec)
        assert spec.total.coords == ("x1", "x2")
        assert spec.total.domain == ((-1.5, 1.5), (-1.0, 1.0))
        assert spec.base.J is None
        assert (spec.seed, spec.samples, spec.label) == (7, 5, "line")
        assert spec.map.components == (parse("x2"),)

    def test_defaults(self):
        spec = load_scenario(LINE.replace("seed 7\nsamples 5\n", "").replace("  domain x1 in (-1.5, 1.5) x2 in (-1, 1)\n", ""))
        assert (spec.seed, spec.samples) == (42, 16)
        assert spec.total.domain == ()
        lo, hi = spec.total.sampling_box()
        assert list(hi) == pytest.approx([1.8, 1.8])

    def test_example_file_matches_builtin(self):
        from_file = load_scenario_file(SCENARIO_DIR / "example3.scn")
        assert from_file == builtin("example3")
        assert resolve(str(SCENARIO_DIR / "example3.scn")) == from_file

    def test_map_components_are_parsed_expressions(self):
        spec = builtin("example3")
        assert spec.map.components == tuple(parse(s) for s in ["(x1 + x2)/sqrt(2)", "(x3 + x5)/sqrt(2)", "(x4 + x6)/sqrt(2)"])

    def test_rows_metric(self):
        spec = load_scenario(_replace("metric diag(1, 1)", "metric rows [ [2, 1] [1, 2] ]"))
        assert spec.total.metric_expr(1, 0) == parse("1")


class TestErrors:
    def test_parse_error_position(self):
        with pytest.raises(ParseError) as info:
            load_scenario(_replace("dim 2", "dim two"))
        assert info.value.line == 4
        assert info.value.expected == "integer"

    def test_lex_error(self):
        with pytest.raises(LexError):
            load_scenario(_replace("map { y1 = x2 }", "map { y1 = x2 ; }"))

    def test_base_not_smaller(self):
        source = _replace("base { dim 1 coords y1 metric diag(1) }", "base { dim 2 coords y1 y2 metric diag(1, 1) }")
        source = source.replace("map { y1 = x2 }", "map { y1 = x2 y2 = x1 }")
        with pytest.raises(ValidationError) as info:
            load_scenario(source)
        assert "must be smaller" in info.value.invariant

    def test_undeclared_variable(self):
        with pytest.raises(ValidationError) as info:
            load_scenario(_replace("metric diag(1, 1)", "metric diag(1, 1 + z^2)"))
        assert info.value.invariant == "undeclared variable 'z' in total metric"

    def test_undeclared_variable_in_map(self):
        with pytest.raises(ValidationError):
            load_scenario(_replace("y1 = x2", "y1 = y1"))

    def test_asymmetric_rows(self):
        with pytest.raises(ValidationError) as info:
            load_scenario(_replace("metric diag(1, 1)", "metric rows [ [2, x1] [0, 2] ]"))
        assert "not symmetric" in info.value.invariant

    def test_non_square_metric(self):
        with pytest.raises(ValidationError):
            load_scenario(_replace("metric diag(1, 1)", "metric diag(1, 1, 1)"))

    def test_missing_component(self):
        with pytest.raises(ValidationError):
            load_scenario(_replace("map { y1 = x2 }", "map { }"))

    def test_duplicate_component(self):
        with pytest.raises(ValidationError):
            load_scenario(_replace("map { y1 = x2 }", "map { y1 = x2 y1 = x1 }"))

    def test_empty_domain(self):
        with pytest.raises(ValidationError):
            load_scenario(_replace("x2 in (-1, 1)", "x2 in (1, -1)"))

    def test_reserved_coordinate(self):
        with pytest.raises(ValidationError):
            load_scenario(LINE.replace("x1", "dim"))

    def test_shared_coordinates(self):
        with pytest.raises(ValidationError):
            load_scenario(LINE.replace("y1", "x1"))

    def test_unknown_builtin(self):
        with pytest.raises(UnknownScenario):
            resolve("builtin:nope")

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(OSError):
            load_scenario_file(tmp_path / "absent.scn")


class TestRegistry:
    @pytest.mark.parametrize("name", REGISTRY)
    def test_dump_then_load(self, name: str):
        spec = builtin(name)
        assert load_scenario(dump_scenario(spec)) == spec

    def test_every_builtin_has_expectations(self):
        assert set(SUITE_EXPECTATIONS) == set(REGISTRY)
        assert len(REGISTRY) == 9

    def test_labels_name_the_scenario(self):
        for name in REGISTRY:
            assert builtin(name).label.startswith(name)
