"""Scenario files and the built-in scenario registry.

A scenario names a total space (metric and almost complex structure), a base
space and the map between them::

    total {
      dim 2
      coords x1 x2
      metric diag(1, 1)
      J rows [ [0, -1] [1, 0] ]
    }
    base { dim 1 coords y1 metric diag(1) }
    map { y1 = x2 }
    label "anti-invariant line projection"
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ExpressionError, UnknownScenario, ValidationError
from .expr import EOF, IDENT, NUMBER, STRING, Const, Expression, Parser, eval, free_variables, parse, to_source, tokenize
from .geometry import DEFAULT_SAMPLES, DEFAULT_SEED, ManifoldSpec, sample_points
from .reports import Status
from .submersion import SmoothMapSpec

logger = logging.getLogger(__name__)

SYMMETRY_SAMPLES = 8
SYMMETRY_TOLERANCE = 1e-10
KEYWORDS = {"dim", "coords", "metric", "J", "domain", "in"}

Matrix = tuple[tuple[Expression, ...], ...]


@dataclass(frozen=True)
class ScenarioSpec:
    """Total space, base space, the map between them and sampling options."""

    total: ManifoldSpec
    base: ManifoldSpec
    map: SmoothMapSpec
    seed: int = DEFAULT_SEED
    samples: int = DEFAULT_SAMPLES
    label: str = ""

    def __post_init__(self) -> None:
        if self.map.source != self.total or self.map.target != self.base:
            raise ValidationError("map must go from the total space to the base space")
        shared = set(self.total.coords) & set(self.base.coords)
        if shared:
            raise ValidationError(f"coordinate names shared by total and base: {', '.join(sorted(shared))}")


# ---- parsing -------------------------------------------------------------------


class ScenarioParser(Parser):
    """Recursive-descent reader for the scenario grammar, sharing the expression parser."""

    def keyword(self, text: str) -> None:
        self.expect(IDENT, text, what=repr(text))

    def at_keyword(self, text: str) -> bool:
        return self.check(IDENT, text)

    def integer(self) -> int:
        tok = self.current
        if tok.kind != NUMBER or not tok.text.isdigit():
            self.fail("integer")
        self.advance()
        return int(tok.text)

    def number(self) -> float:
        sign = 1.0
        if self.check("MINUS"):
            self.advance()
            sign = -1.0
        tok = self.expect(NUMBER, what="number")
        return sign * float(tok.text)

    def scenario(self) -> ScenarioSpec:
        total = self.manifold("total", with_structure=True)
        base = self.manifold("base", with_structure=False)
        components = self.map_block()
        options: dict[str, object] = {}
        while not self.check(EOF):
            if self.at_keyword("seed") or self.at_keyword("samples"):
                options[self.advance().text] = self.integer()
            elif self.at_keyword("label"):
                self.advance()
                options["label"] = self.expect(STRING, what="quoted label").text
            else:
                self.fail("'seed', 'samples', 'label' or end of file")
        return build_scenario(total, base, components, **options)

    def manifold(self, kind: str, with_structure: bool) -> ManifoldSpec:
        self.keyword(kind)
        self.expect("LBRACE", what="'{'")
        self.keyword("dim")
        dim = self.integer()
        self.keyword("coords")
        coords = []
        while self.check(IDENT) and not self.at_keyword("metric"):
            coords.append(self.advance().text)
        if not coords:
            self.fail("coordinate name")
        self.keyword("metric")
        metric = self.matrix()
        J = None
        if with_structure:
            self.keyword("J")
            J = self.matrix()
        domain: list[tuple[str, float, float]] = []
        if self.at_keyword("domain"):
            self.advance()
            while self.check(IDENT):
                name = self.advance().text
                self.keyword("in")
                self.expect("LPAREN", what="'('")
                lo = self.number()
                self.expect("COMMA", what="','")
                hi = self.number()
                self.expect("RPAREN", what="')'")
                domain.append((name, lo, hi))
        self.expect("RBRACE", what="'}'")
        return build_manifold(kind, dim, tuple(coords), metric, J, domain)

    def matrix(self) -> Matrix:
        if self.at_keyword("diag"):
            self.advance()
            self.expect("LPAREN", what="'('")
            entries = self.expression_list("RPAREN")
            n = len(entries)
            return tuple(tuple(entries[i] if i == j else Const(0.0) for j in range(n)) for i in range(n))
        if self.at_keyword("rows"):
            self.advance()
            self.expect("LBRACKET", what="'['")
            rows = []
            while self.check("LBRACKET"):
                self.advance()
                rows.append(tuple(self.expression_list("RBRACKET")))
            if not rows:
                self.fail("'['")
            self.expect("RBRACKET", what="']'")
            return tuple(rows)
        self.fail("'diag' or 'rows'")
        raise AssertionError("unreachable")

    def expression_list(self, closing: str) -> list[Expression]:
        entries = [self.expression()]
        while self.check("COMMA"):
            self.advance()
            entries.append(self.expression())
        self.expect(closing, what="',' or closing bracket")
        return entries

    def map_block(self) -> dict[str, Expression]:
        self.keyword("map")
        self.expect("LBRACE", what="'{'")
        components: dict[str, Expression] = {}
        while self.check(IDENT):
            name = self.advance().text
            self.expect("EQUALS", what="'='")
            if name in components:
                raise ValidationError(f"map component {name!r} given twice")
            components[name] = self.expression()
        self.expect("RBRACE", what="'}'")
        return components


def _check_square(matrix: Matrix, dim: int, what: str) -> None:
    if len(matrix) != dim or any(len(row) != dim for row in matrix):
        raise ValidationError(f"{what} must be {dim}x{dim}")


def _check_variables(entries: list[Expression], coords: tuple[str, ...], what: str) -> None:
    for e in entries:
        undeclared = sorted(free_variables(e) - set(coords))
        if undeclared:
            raise ValidationError(f"undeclared variable {undeclared[0]!r} in {what}")


def _check_symmetric(m: ManifoldSpec, rows: Matrix) -> None:
    """Compare ``g_ij`` with ``g_ji`` numerically at a few sample points."""
    for p in sample_points(m, SYMMETRY_SAMPLES, DEFAULT_SEED):
        env = {name: float(p[i]) for i, name in enumerate(m.coords)}
        for i in range(m.dim):
            for j in range(i + 1, m.dim):
                try:
                    gap = abs(eval(rows[i][j], env) - eval(rows[j][i], env))
                except ExpressionError as exc:
                    raise ValidationError(f"{m.label} metric not evaluable at sample point: {exc}") from exc
                if gap > SYMMETRY_TOLERANCE:
                    raise ValidationError(f"{m.label} metric is not symmetric (entry {i + 1},{j + 1})")


def build_manifold(
    kind: str,
    dim: int,
    coords: tuple[str, ...],
    metric: Matrix,
    J: Matrix | None = None,
    domain: list[tuple[str, float, float]] | None = None,
) -> ManifoldSpec:
    """Validate one manifold block and turn it into a :class:`ManifoldSpec`."""
    if len(coords) != dim:
        raise ValidationError(f"{kind} declares dim {dim} but {len(coords)} coordinates")
    if len(set(coords)) != dim:
        raise ValidationError(f"{kind} coordinate names must be distinct")
    clash = sorted(set(coords) & KEYWORDS)
    if clash:
        raise ValidationError(f"{kind} coordinate name {clash[0]!r} is reserved")
    _check_square(metric, dim, f"{kind} metric")
    _check_variables([e for row in metric for e in row], coords, f"{kind} metric")
    if J is not None:
        _check_square(J, dim, f"{kind} J")
        _check_variables([e for row in J for e in row], coords, f"{kind} J")

    bounds = {name: (-2.0, 2.0) for name in coords}
    for name, lo, hi in domain or []:
        if name not in bounds:
            raise ValidationError(f"domain names undeclared coordinate {name!r}")
        if not lo < hi:
            raise ValidationError(f"empty domain for {name!r}")
        bounds[name] = (lo, hi)

    m = ManifoldSpec(
        dim=dim,
        coords=coords,
        metric_upper=tuple(tuple(metric[i][i:]) for i in range(dim)),
        J=J,
        domain=tuple(bounds[name] for name in coords) if domain else (),
        label=kind,
    )
    _check_symmetric(m, metric)
    return m


def build_scenario(
    total: ManifoldSpec,
    base: ManifoldSpec,
    components: Mapping[str, Expression],
    seed: int = DEFAULT_SEED,
    samples: int = DEFAULT_SAMPLES,
    label: str = "",
) -> ScenarioSpec:
    if base.dim >= total.dim:
        raise ValidationError(f"base dim {base.dim} must be smaller than total dim {total.dim}")
    missing = [name for name in base.coords if name not in components]
    if missing:
        raise ValidationError(f"map has no component for base coordinate {missing[0]!r}")
    extra = sorted(set(components) - set(base.coords))
    if extra:
        raise ValidationError(f"map component {extra[0]!r} is not a base coordinate")
    ordered = tuple(components[name] for name in base.coords)
    _check_variables(list(ordered), total.coords, "map")
    if samples < 1:
        raise ValidationError("samples must be positive")
    return ScenarioSpec(total, base, SmoothMapSpec(total, base, ordered), seed, samples, label)


def load_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a scenario.

    Raises:
        LexError: on a character outside the scenario alphabet.
        ParseError: on a token out of place, with line and column.
        ValidationError: naming the violated invariant.
    """
    spec = ScenarioParser(tokenize(text, scenario=True)).scenario()
    logger.debug("loaded scenario %r", spec.label)
    return spec


def load_scenario_file(path: str | Path) -> ScenarioSpec:
    return load_scenario(Path(path).read_text(encoding="utf-8"))


# ---- printing ------------------------------------------------------------------


def _matrix_source(rows: Matrix) -> str:
    n = len(rows)
    diagonal = all(rows[i][j] == Const(0.0) for i in range(n) for j in range(n) if i != j)
    if diagonal:
        return "diag(" + ", ".join(to_source(rows[i][i]) for i in range(n)) + ")"
    lines = ["rows ["]
    lines += ["      [" + ", ".join(to_source(e) for e in row) + "]" for row in rows]
    lines.append("    ]")
    return "\n".join(lines)


def _full_metric(m: ManifoldSpec) -> Matrix:
    return tuple(tuple(m.metric_expr(i, j) for j in range(m.dim)) for i in range(m.dim))


def _manifold_source(kind: str, m: ManifoldSpec) -> list[str]:
    lines = [
        f"{kind} {{",
        f"  dim {m.dim}",
        f"  coords {' '.join(m.coords)}",
        f"  metric {_matrix_source(_full_metric(m))}",
    ]
    if m.J is not None:
        lines.append(f"  J {_matrix_source(m.J)}")
    if m.domain:
        ranges = " ".join(f"{name} in ({lo!r}, {hi!r})" for name, (lo, hi) in zip(m.coords, m.domain))
        lines.append(f"  domain {ranges}")
    lines.append("}")
    return lines


def dump_scenario(spec: ScenarioSpec) -> str:
    """Render ``spec`` in the scenario grammar; :func:`load_scenario` reads it back unchanged."""
    lines = _manifold_source("total", spec.total) + _manifold_source("base", spec.base)
    lines.append("map {")
    lines += [f"  {name} = {to_source(e)}" for name, e in zip(spec.base.coords, spec.map.components)]
    lines.append("}")
    lines.append(f"seed {spec.seed}")
    lines.append(f"samples {spec.samples}")
    if spec.label:
        lines.append(f'label "{spec.label}"')
    return "\n".join(lines) + "\n"


# ---- chart builders --------------------------------------------------------------


def _standard_structure(dim: int) -> str:
    """``rows`` source of the standard J on ``R^dim``: ``J d_{2k-1} = d_{2k}``."""
    rows = []
    for i in range(dim):
        row = ["0"] * dim
        if i % 2 == 0:
            row[i + 1] = "-1"
        else:
            row[i - 1] = "1"
        rows.append("[" + ", ".join(row) + "]")
    return "rows [ " + " ".join(rows) + " ]"


def _flat_block(kind: str, coords: list[str], structure: bool = True, domain: str = "") -> str:
    n = len(coords)
    metric = "diag(" + ", ".join(["1"] * n) + ")"
    J = f"\n  J {_standard_structure(n)}" if structure else ""
    dom = f"\n  domain {domain}" if domain else ""
    return f"{kind} {{\n  dim {n}\n  coords {' '.join(coords)}\n  metric {metric}{J}{dom}\n}}\n"


def _fs_factor(a: str, b: str) -> str:
    return f"1/(1 + {a}^2 + {b}^2)^2"


def fubini_study_chart(coords: tuple[str, str] = ("x1", "x2"), half_width: float = 0.9) -> ManifoldSpec:
    """CP^1 with the Fubini-Study metric (holomorphic curvature 4) in an affine chart.

    ``g = diag(s, s)`` with ``s = 1/(1 + x1^2 + x2^2)^2`` and the standard J.
    """
    a, b = coords
    s = parse(_fs_factor(a, b))
    J = ((Const(0.0), parse("-1")), (Const(1.0), Const(0.0)))
    bound = [(a, -half_width, half_width), (b, -half_width, half_width)]
    return build_manifold("total", 2, coords, ((s, Const(0.0)), (Const(0.0), s)), J, bound)


def round_sphere_chart(coords: tuple[str, str] = ("x1", "x2")) -> ManifoldSpec:
    """Unit sphere in polar coordinates ``g = diag(1, sin(x1)^2)``, away from the poles."""
    a, b = coords
    sin_sq = parse(f"sin({a})^2")
    return build_manifold(
        "total",
        2,
        coords,
        ((Const(1.0), Const(0.0)), (Const(0.0), sin_sq)),
        domain=[(a, 0.3, 2.8), (b, -3.0, 3.0)],
    )


# ---- registry ------------------------------------------------------------------

_X4 = ["x1", "x2", "x3", "x4"]
_X6 = _X4 + ["x5", "x6"]
_POSITIVE_BOX = " ".join(f"{x} in (0.3, 1.5)" for x in _X4)
_FS_BOX = " ".join(f"{x} in (-0.9, 0.9)" for x in _X4)

EXAMPLE3_SOURCE = (
    "# Flat R^6 onto flat R^3; D1 = span{V2, V3}, D2 = span{V1}\n"
    + _flat_block("total", _X6)
    + _flat_block("base", ["y1", "y2", "y3"], structure=False)
    + "map {\n  y1 = (x1 + x2)/sqrt(2)\n  y2 = (x3 + x5)/sqrt(2)\n  y3 = (x4 + x6)/sqrt(2)\n}\n"
    + 'label "example3: semi-invariant submersion R^6 -> R^3"\n'
)

SOURCES: dict[str, str] = {
    "example3": EXAMPLE3_SOURCE,
    "anti_invariant_r2": (
        _flat_block("total", ["x1", "x2"])
        + _flat_block("base", ["y1"], structure=False)
        + "map { y1 = x2 }\n"
        + 'label "anti_invariant_r2: anti-invariant submersion R^2 -> R"\n'
    ),
    "invariant_r4": (
        _flat_block("total", _X4)
        + _flat_block("base", ["y1", "y2"], structure=False)
        + "map { y1 = x3 y2 = x4 }\n"
        + 'label "invariant_r4: invariant submersion R^4 -> R^2"\n'
    ),
    "generic_rotated": (
        _flat_block("total", _X6)
        + _flat_block("base", ["y1", "y2", "y3", "y4"], structure=False)
        + "map {\n  y1 = (x2 - x3)/sqrt(2)\n  y2 = x4\n  y3 = x5\n  y4 = x6\n}\n"
        + 'label "generic_rotated: submersion with a rotated kernel"\n'
    ),
    "product_spheres": (
        "total {\n  dim 4\n  coords x1 x2 x3 x4\n"
        f"  metric diag({_fs_factor('x1', 'x2')}, {_fs_factor('x1', 'x2')}, "
        f"{_fs_factor('x3', 'x4')}, {_fs_factor('x3', 'x4')})\n"
        f"  J {_standard_structure(4)}\n  domain {_FS_BOX}\n}}\n"
        "base {\n  dim 2\n  coords y1 y2\n"
        f"  metric diag({_fs_factor('y1', 'y2')}, {_fs_factor('y1', 'y2')})\n"
        "  domain y1 in (-0.9, 0.9) y2 in (-0.9, 0.9)\n}\n"
        "map { y1 = x3 y2 = x4 }\n"
        'label "product_spheres: submersion CP1 x CP1 -> CP1"\n'
    ),
    "cp1_spaceform": (
        "total {\n  dim 2\n  coords x1 x2\n  metric diag(1, sin(2*x1)^2/4)\n"
        "  J rows [ [0, -sin(2*x1)/2] [2/sin(2*x1), 0] ]\n"
        "  domain x1 in (0.2, 1.3) x2 in (-2, 2)\n}\n"
        + _flat_block("base", ["y1"], structure=False)
        + "map { y1 = x1 }\n"
        + 'label "cp1_spaceform: circle fibration of CP1 in geodesic polar coordinates"\n'
    ),
    "scaled_fiber": (
        "total {\n  dim 4\n  coords x1 x2 x3 x4\n  metric diag(1, sin(x1)^2, 1, 1)\n"
        "  J rows [ [0, -sin(x1), 0, 0] [1/sin(x1), 0, 0, 0] [0, 0, 0, -1] [0, 0, 1, 0] ]\n"
        "  domain x1 in (0.4, 2.7) x2 in (-2, 2) x3 in (-2, 2) x4 in (-2, 2)\n}\n"
        + _flat_block("base", ["y1"], structure=False)
        + "map { y1 = (x1 + x3)/sqrt(2) }\n"
        + 'label "scaled_fiber: submersion S2 x R2 -> R with curved fibers"\n'
    ),
    "umbilical_witness": (
        _flat_block("total", _X4, domain=_POSITIVE_BOX)
        + _flat_block("base", ["y1"], structure=False)
        + "map { y1 = sqrt(x1^2 + x2^2 + x3^2 + x4^2) }\n"
        + 'label "umbilical_witness: submersion R4 -> R onto the radius"\n'
    ),
    "shear_horizontal": (
        _flat_block("total", _X4, domain=_POSITIVE_BOX)
        + "base {\n  dim 3\n  coords y1 y2 y3\n"
        + "  metric diag("
        + ", ".join(["1/(4*sqrt(y1^2 + y2^2 + y3^2))"] * 3)
        + ")\n}\n"
        + "map {\n  y1 = x1^2 + x2^2 - x3^2 - x4^2\n  y2 = 2*(x1*x3 + x2*x4)\n  y3 = 2*(x2*x3 - x1*x4)\n}\n"
        + 'label "shear_horizontal: Hopf submersion R4 -> R3"\n'
    ),
}

REGISTRY = tuple(SOURCES)


def builtin(name: str) -> ScenarioSpec:
    """Load a registered scenario by name.

    Raises:
        UnknownScenario: if ``name`` is not registered.
    """
    try:
        source = SOURCES[name]
    except KeyError:
        raise UnknownScenario(name) from None
    return load_scenario(source)


def resolve(reference: str) -> ScenarioSpec:
    """``builtin:NAME`` or a path to a scenario file."""
    if reference.startswith("builtin:"):
        return builtin(reference.split(":", 1)[1])
    return load_scenario_file(reference)


# ---- acceptance expectations -------------------------------------------------------


@dataclass(frozen=True)
class SuiteExpectation:
    """Pinned classification and check statuses of one built-in."""

    kind: str
    dims: tuple[int, int, int]
    statuses: dict[str, Status] = field(default_factory=dict)


_P, _F, _NA = Status.PASS, Status.FAIL, Status.NOT_APPLICABLE

SUITE_EXPECTATIONS: dict[str, SuiteExpectation] = {
    "example3": SuiteExpectation(
        "semi_invariant",
        (2, 1, 2),
        {
            "riemannian_submersion": _P,
            "basic_brackets": _P,
            "d1_integrability": _P,
            "d2_integrability": _P,
            "totally_geodesic_map": _P,
            "horizontal_foliation": _P,
            "vertical_foliation": _P,
            "product_structure": _P,
            "mean_curvature_location": _P,
            "space_form_consistency": _P,
            "curvature_relation": _P,
        },
    ),
    "anti_invariant_r2": SuiteExpectation(
        "anti_invariant",
        (0, 1, 0),
        {"riemannian_submersion": _P, "d1_integrability": _NA, "vertical_foliation": _P, "space_form_consistency": _NA},
    ),
    "invariant_r4": SuiteExpectation(
        "invariant",
        (2, 0, 2),
        {"riemannian_submersion": _P, "d1_integrability": _NA, "totally_geodesic_map": _P, "product_structure": _P},
    ),
    "generic_rotated": SuiteExpectation(
        "generic",
        (0, 2, 2),
        {
            "riemannian_submersion": _P,
            "operator_identities": _P,
            "phi_omega_equations": _P,
            "d1_integrability": _NA,
            "totally_geodesic_map": _NA,
            "product_structure": _NA,
        },
    ),
    "product_spheres": SuiteExpectation(
        "invariant",
        (2, 0, 2),
        {
            "riemannian_submersion": _P,
            "totally_geodesic_fibers": _P,
            "horizontal_foliation": _P,
            "d1_integrability": _NA,
            "curvature_relation": _P,
            "space_form_fit": _NA,
        },
    ),
    "cp1_spaceform": SuiteExpectation(
        "anti_invariant",
        (0, 1, 0),
        {
            "riemannian_submersion": _P,
            "space_form_fit": _P,
            "umbilical_fibers": _P,
            "totally_geodesic_fibers": _F,
            "space_form_consistency": _NA,
        },
    ),
    "scaled_fiber": SuiteExpectation(
        "semi_invariant",
        (2, 1, 0),
        {
            "riemannian_submersion": _P,
            "totally_geodesic_fibers": _F,
            "d1_integrability": _F,
            "totally_geodesic_map": _F,
            "vertical_foliation": _F,
            "horizontal_foliation": _P,
            "curvature_relation": _P,
        },
    ),
    "umbilical_witness": SuiteExpectation(
        "semi_invariant",
        (2, 1, 0),
        {
            "riemannian_submersion": _P,
            "umbilical_fibers": _P,
            "totally_geodesic_fibers": _F,
            "mean_curvature_location": _P,
            "space_form_consistency": _P,
            "space_form_fit": _P,
        },
    ),
    "shear_horizontal": SuiteExpectation(
        "anti_invariant",
        (0, 1, 2),
        {
            "riemannian_submersion": _P,
            "a_bracket_identity": _P,
            "horizontal_foliation": _F,
            "product_structure": _F,
            "totally_geodesic_map": _F,
        },
    ),
}
