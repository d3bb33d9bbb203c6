"""Per-scenario analyzer composed from the check mixins."""

from __future__ import annotations

import logging
import os
from typing import Any, Callable, TypeVar

from .complexstruct import SpaceFormFit, fit_space_form_constant, validate_almost_hermitian
from .errors import DisagreementError
from .geometry import sample_points
from .oneill import ONeillMixin
from .reports import CheckReport, Status, Tolerances, sort_reports
from .scenarios import ScenarioSpec
from .semiinvariant import SemiInvariantMixin
from .submersion import PointJets, SubmersionMixin

logger = logging.getLogger(__name__)

TOL_SCALE_ENV = "SEMIINV_TOL_SCALE"

T = TypeVar("T")


class SubmersionAnalyzer(SubmersionMixin, ONeillMixin, SemiInvariantMixin):
    """Runs every check of a scenario over one fixed set of sample points.

    ``seed`` and ``samples`` default to the scenario's own options; the
    tolerance scale defaults to the ``SEMIINV_TOL_SCALE`` environment
    variable and then to 1.
    """

    def __init__(
        self,
        scenario: ScenarioSpec,
        seed: int | None = None,
        samples: int | None = None,
        tol_scale: float | None = None,
    ):
        self.scenario = scenario
        self.seed = seed if seed is not None else scenario.seed
        self.samples = samples if samples is not None else scenario.samples
        if tol_scale is None:
            tol_scale = float(os.environ.get(TOL_SCALE_ENV, "1"))
        self.tol_scale = tol_scale
        self.tolerances = Tolerances() if tol_scale == 1.0 else Tolerances().scaled(tol_scale)
        self.points = sample_points(scenario.total, self.samples, self.seed)
        self._jet_cache: dict[tuple[float, ...], PointJets] = {}
        self._results: dict[str, Any] = {}

    def _memo(self, key: str, compute: Callable[[], T]) -> T:
        if key not in self._results:
            self._results[key] = compute()
        return self._results[key]

    # ---- chart-level reports ------------------------------------------------

    def hermitian_report(self) -> CheckReport:
        return self._memo(
            "almost_hermitian",
            lambda: validate_almost_hermitian(self.scenario.total, self.points, self.tolerances.hermitian),
        )

    def space_form_fit(self) -> SpaceFormFit:
        return self._memo(
            "space_form_fit",
            lambda: fit_space_form_constant(self.scenario.total, self.points, self.seed, self.tolerances.space_form),
        )

    def space_form_report(self) -> CheckReport:
        fit = self.space_form_fit()
        extras = {"c_estimate": fit.c_estimate, "per_point": fit.per_point}
        if not fit.space_form:
            report = CheckReport.not_applicable("space_form_fit", "total space is not a complex space form", fit.tolerance)
            report.max_residual = fit.residual_max
            report.extras = extras
            return report
        return CheckReport("space_form_fit", Status.PASS, fit.residual_max, fit.tolerance, extras=extras)

    def fiber_reports(self) -> list[CheckReport]:
        names = ("totally_geodesic_fibers", "umbilical_fibers")
        gate = self.submersion_gate(names[0], self.tolerances.geodesic)
        if gate is not None:
            return [gate, CheckReport.not_applicable(names[1], gate.reason, self.tolerances.umbilical)]
        return self.fiber_geometry().to_reports()

    # ---- driver ----------------------------------------------------------------

    def _checks(self) -> list[Callable[[], CheckReport | list[CheckReport]]]:
        return [
            self.submersion_report,
            self.check_basic_brackets,
            self.hermitian_report,
            self.kaehler_report,
            self.space_form_report,
            self.check_fundamental_equations,
            self.check_tensor_identities,
            self.check_a_bracket_identity,
            self.fiber_reports,
            self.check_curvature_relation,
            self.check_operator_identities,
            self.check_phi_omega_equations,
            self.d2_integrability_check,
            self.d1_integrability_check,
            self.totally_geodesic_map_check,
            self.horizontal_foliation_check,
            self.vertical_foliation_check,
            self.product_structure_report,
            self.mean_curvature_location_check,
            self.space_form_consistency_check,
        ]

    def analyze(self) -> list[CheckReport]:
        """Every check of the scenario, sorted by check name.

        A dual-path disagreement is recorded as a ``FAIL`` report with reason
        ``"disagreement"`` instead of aborting the run.

        Raises:
            RankDeficient: if the Jacobian drops rank at a sample point.
            RankInstability: if the distribution ranks vary across points.
        """
        reports: list[CheckReport] = []
        for check in self._checks():
            try:
                result = check()
            except DisagreementError as exc:
                logger.warning("%s: %s", self.scenario.label, exc)
                result = exc.report
                result.status = Status.FAIL
                result.reason = "disagreement"
            reports.extend(result if isinstance(result, list) else [result])
        return sort_reports(reports)

    def __repr__(self) -> str:
        return f"SubmersionAnalyzer(scenario={self.scenario.label!r}, seed={self.seed}, samples={self.samples})"
