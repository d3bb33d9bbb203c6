"""Exception hierarchy shared by every module."""

from __future__ import annotations

from typing import Any


class GeometryError(Exception):
    """Base class for every error raised by semiinv_sdk."""


# ---- expressions -------------------------------------------------------------


class ExpressionError(GeometryError):
    """Malformed or unevaluable expression."""


class LexError(ExpressionError):
    """Unknown character in expression or scenario source."""

    def __init__(self, position: int, line: int, column: int, char: str) -> None:
        self.position = position
        self.line = line
        self.column = column
        self.char = char
        super().__init__(f"line {line}, column {column}: unexpected character {char!r}")


class ParseError(ExpressionError):
    """Token stream does not match the grammar."""

    def __init__(self, position: int, line: int, column: int, expected: str, found: str = "") -> None:
        self.position = position
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        where = f" but found {found!r}" if found else ""
        super().__init__(f"line {line}, column {column}: expected {expected}{where}")


class DomainError(ExpressionError):
    """Evaluation left the domain of a primitive (log, sqrt, division, pow)."""

    def __init__(self, node: Any, value: float) -> None:
        self.node = node
        self.value = value
        super().__init__(f"domain error in {node}: offending value {value!r}")


# ---- scenarios ---------------------------------------------------------------


class ScenarioError(GeometryError):
    """Scenario could not be built."""


class ValidationError(ScenarioError):
    """A parsed scenario violates one of its invariants."""

    def __init__(self, invariant: str) -> None:
        self.invariant = invariant
        super().__init__(f"invalid scenario: {invariant}")


class UnknownScenario(ScenarioError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"unknown built-in scenario {name!r}")


# ---- numerics ------------------------------------------------------------------


class NumericalDegeneracy(GeometryError):
    """The chart or map degenerates at a sample point."""


class DegenerateMetric(NumericalDegeneracy):
    def __init__(self, point: Any, eigenvalue: float) -> None:
        self.point = point
        self.eigenvalue = eigenvalue
        super().__init__(f"metric not positive definite at {_fmt(point)}: min eigenvalue {eigenvalue:.3e}")


class RankDeficient(NumericalDegeneracy):
    def __init__(self, point: Any, ratio: float) -> None:
        self.point = point
        self.ratio = ratio
        super().__init__(f"Jacobian rank drop at {_fmt(point)}: singular value ratio {ratio:.3e}")


class RankInstability(NumericalDegeneracy):
    def __init__(self, dims: Any) -> None:
        self.dims = dims
        super().__init__(f"distribution ranks vary across sample points: {dims}")


# ---- geometry ------------------------------------------------------------------


class MissingJ(GeometryError):
    def __init__(self, label: str) -> None:
        self.label = label
        super().__init__(f"manifold {label!r} has no almost complex structure")


class MixedEigenvalue(GeometryError):
    """-phi^2 has an eigenvalue away from {0, 1}."""

    def __init__(self, point: Any, eigenvalue: float, split: Any = None) -> None:
        self.point = point
        self.eigenvalue = eigenvalue
        self.split = split
        super().__init__(f"eigenvalue {eigenvalue:.6g} of -phi^2 at {_fmt(point)} is neither 0 nor 1")


class NotSpaceForm(GeometryError):
    def __init__(self, fit: Any) -> None:
        self.fit = fit
        super().__init__(
            f"curvature is not of complex space form type (c ~ {fit.c_estimate:.6g}, residual {fit.residual_max:.3e})"
        )


class DisagreementError(GeometryError):
    """The condition path and the direct-definition path disagree."""

    def __init__(self, report: Any) -> None:
        self.report = report
        super().__init__(f"{report.check_name}: condition path and direct path disagree")


def _fmt(point: Any) -> str:
    try:
        return "(" + ", ".join(f"{float(c):.6g}" for c in point) + ")"
    except TypeError:
        return repr(point)
