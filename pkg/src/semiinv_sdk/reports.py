"""Check reports and the tolerance table."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Iterable, Sequence


class Status(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    NOT_APPLICABLE = "NOT-APPLICABLE"
    THEOREM_VIOLATION = "THEOREM-VIOLATION"


@dataclass(frozen=True)
class Tolerances:
    """Every numeric threshold used by the checkers."""

    identity: float = 1e-9
    decomposition: float = 1e-10
    operator_identity: float = 1e-10
    hermitian: float = 1e-9
    kaehler_gate: float = 1e-7
    submersion: float = 1e-9
    membership: float = 1e-7
    umbilical: float = 1e-7
    geodesic: float = 1e-7
    eigenvalue: float = 1e-6
    extension: float = 1e-8
    curvature_relation: float = 1e-6
    space_form: float = 1e-5
    space_form_zero: float = 1e-6
    phi_equation: float = 1e-7
    agreement: float = 1e-6
    rank: float = 1e-7

    def scaled(self, factor: float) -> Tolerances:
        """All tolerances multiplied by ``factor`` (the rank cut-off included)."""
        return replace(self, **{f.name: getattr(self, f.name) * factor for f in fields(self)})


@dataclass
class PointRecord:
    index: int
    point: tuple[float, ...]
    residual: float
    note: str = ""

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"index": self.index, "point": list(self.point), "residual": self.residual}
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class CheckReport:
    """Outcome of one named check over the sample points of a scenario."""

    check_name: str
    status: Status
    max_residual: float
    tolerance: float
    worst_point: tuple[float, ...] | None = None
    details: list[PointRecord] = field(default_factory=list)
    reason: str = ""
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in (Status.PASS, Status.NOT_APPLICABLE)

    @classmethod
    def not_applicable(cls, check_name: str, reason: str, tolerance: float = 0.0) -> CheckReport:
        return cls(check_name, Status.NOT_APPLICABLE, 0.0, tolerance, reason=reason)

    @classmethod
    def from_records(
        cls,
        check_name: str,
        tolerance: float,
        records: Sequence[PointRecord],
        reason: str = "",
        **extras: Any,
    ) -> CheckReport:
        """PASS iff every record's residual is below ``tolerance``."""
        if not records:
            return cls(check_name, Status.PASS, 0.0, tolerance, reason=reason, extras=extras)
        worst = max(records, key=lambda r: r.residual)
        status = Status.PASS if worst.residual < tolerance else Status.FAIL
        return cls(
            check_name,
            status,
            worst.residual,
            tolerance,
            worst_point=worst.point,
            details=sorted(records, key=lambda r: r.index),
            reason=reason,
            extras=extras,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "check_name": self.check_name,
            "status": self.status.value,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "worst_point": list(self.worst_point) if self.worst_point is not None else None,
            "details": [r.to_dict() for r in self.details],
            "reason": self.reason,
            "extras": self.extras,
        }

    def to_json_line(self, **context: Any) -> str:
        """One JSON object; ``context`` (e.g. the scenario name) is merged in."""
        return json.dumps({**self.to_dict(), **context}, sort_keys=True, default=_json_default)


def sort_reports(reports: Iterable[CheckReport]) -> list[CheckReport]:
    return sorted(reports, key=lambda r: r.check_name)


def _json_default(obj: Any) -> Any:
    if isinstance(obj, Enum):
        return obj.value
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {obj!r}")
