"""Semi-invariant splitting of the fibers and the checkers built on it.

The vertical space splits as ``D1 + D2`` with ``J D1 = D1`` and ``J D2``
horizontal; ``mu`` is the horizontal complement of ``J D2``. Both are read off
the eigenspaces of ``-phi^2`` where ``phi = P_V J`` on vertical vectors.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .complexstruct import check_kaehler
from .errors import DisagreementError, MixedEigenvalue, RankInstability
from .geometry import Point, TangentVector, basis_matrix, orthonormalize
from .oneill import tensor_A, tensor_T
from .reports import CheckReport, PointRecord, Status
from .submersion import OperatorJet, PointJets, TangentSplit, second_fundamental_form

logger = logging.getLogger(__name__)

INVARIANT = "invariant"
ANTI_INVARIANT = "anti_invariant"
SEMI_INVARIANT = "semi_invariant"
GENERIC = "generic"
NON_GENERIC = (INVARIANT, ANTI_INVARIANT, SEMI_INVARIANT)


# ---- pointwise linear algebra --------------------------------------------------------


def split_from_jets(pj: PointJets, eigenvalue_tolerance: float = 1e-6) -> TangentSplit:
    """Eigen-split of ``-phi^2`` on the vertical space at one point.

    Eigenvalue ``lam`` goes to ``D1`` only when ``|lam - 1| <= eigenvalue_tolerance``
    and to ``D2`` otherwise, so a repeated mixed eigenvalue never splits
    across the two. Eigenvalues farther than ``eigenvalue_tolerance`` from
    both 0 and 1 are listed in ``TangentSplit.mixed``.
    """
    G, J = pj.metric, pj.J
    verticals, horizontals = pj.vertical_basis(), pj.horizontal_basis()
    n = pj.dim
    Vb = basis_matrix(verticals, n)
    phi = Vb.T @ G @ pj.P_V @ J @ Vb
    lam, U = np.linalg.eigh(phi.T @ phi)

    in_d1 = [abs(v - 1.0) <= eigenvalue_tolerance for v in lam]
    d1 = [Vb @ U[:, k] for k in range(len(lam)) if in_d1[k]]
    d2 = [Vb @ U[:, k] for k in range(len(lam)) if not in_d1[k]]
    mixed = [float(v) for v in lam if min(abs(v), abs(v - 1.0)) > eigenvalue_tolerance]

    jd2 = orthonormalize([pj.P_H @ J @ d for d in d2], G)
    completed = orthonormalize(jd2 + horizontals, G)
    mu = completed[len(jd2) : len(horizontals)]
    return TangentSplit(
        at=pj.point,
        vertical_basis=verticals,
        horizontal_basis=horizontals,
        d1_basis=orthonormalize(d1, G),
        d2_basis=orthonormalize(d2, G),
        jd2_basis=jd2,
        mu_basis=mu,
        phi_sq_spectrum=[float(v) for v in lam],
        mixed=mixed,
    )


@dataclass
class PointOperators:
    """``phi, omega, B, C`` as matrices in the orthonormal vertical/horizontal bases.

    The ``*_full`` fields are the same maps as ``n x n`` matrices in chart
    coordinates: ``P_V J P_V``, ``P_H J P_V``, ``P_V J P_H`` and ``P_H J P_H``.
    """

    phi: np.ndarray
    omega: np.ndarray
    B: np.ndarray
    C: np.ndarray
    phi_full: np.ndarray
    omega_full: np.ndarray
    B_full: np.ndarray
    C_full: np.ndarray

    def identity_residuals(self) -> dict[str, float]:
        r, m = self.phi.shape[0], self.C.shape[0]
        return {
            "phi2_plus_B_omega": _max_abs(self.phi @ self.phi + self.B @ self.omega + np.eye(r)),
            "omega_phi_plus_C_omega": _max_abs(self.omega @ self.phi + self.C @ self.omega),
            "phi_B_plus_B_C": _max_abs(self.phi @ self.B + self.B @ self.C),
            "omega_B_plus_C2": _max_abs(self.omega @ self.B + self.C @ self.C + np.eye(m)),
        }


def operators_from_jets(pj: PointJets, split: TangentSplit) -> PointOperators:
    G, J, PV, PH = pj.metric, pj.J, pj.P_V, pj.P_H
    Vb, Hb = split.matrix("vertical"), split.matrix("horizontal")
    return PointOperators(
        phi=Vb.T @ G @ PV @ J @ Vb,
        omega=Hb.T @ G @ PH @ J @ Vb,
        B=Vb.T @ G @ PV @ J @ Hb,
        C=Hb.T @ G @ PH @ J @ Hb,
        phi_full=PV @ J @ PV,
        omega_full=PH @ J @ PV,
        B_full=PV @ J @ PH,
        C_full=PH @ J @ PH,
    )


@dataclass(frozen=True)
class DistributionJets:
    """Smooth operator families of the splitting, with derivatives.

    ``d1 = -phi^2`` is the projector onto ``D1`` whenever the spectrum of
    ``-phi^2`` is ``{0, 1}``; the other projectors follow from it.
    """

    phi: OperatorJet
    omega: OperatorJet
    B: OperatorJet
    C: OperatorJet
    d1: OperatorJet
    d2: OperatorJet
    jd2: OperatorJet
    mu: OperatorJet


def distribution_jets(pj: PointJets) -> DistributionJets:
    V, H, J = pj.vertical, pj.horizontal, pj.structure
    phi = V @ J @ V
    d1 = -(phi @ phi)
    d2 = V - d1
    jd2 = -(J @ d2 @ J)
    return DistributionJets(
        phi=phi,
        omega=H @ J @ V,
        B=V @ J @ H,
        C=H @ J @ H,
        d1=d1,
        d2=d2,
        jd2=jd2,
        mu=H - jd2,
    )


def _max_abs(a: np.ndarray) -> float:
    return float(np.abs(a).max()) if a.size else 0.0


def _outside(pj: PointJets, projector: np.ndarray, v: np.ndarray) -> float:
    """Length of the component of ``v`` outside the range of ``projector``."""
    return pj.norm(v - projector @ v)


def _bracket(X: Any, Y: Any) -> np.ndarray:
    return Y.grad @ X.value - X.grad @ Y.value


# ---- result types ------------------------------------------------------------------


@dataclass
class Classification:
    kind: str
    dim_d1: int
    dim_d2: int
    dim_mu: int
    spectrum_summary: list[list[float]] = field(default_factory=list)

    @property
    def proper(self) -> bool:
        """Both ``D1`` and ``D2`` are non-zero."""
        return self.kind == SEMI_INVARIANT

    def to_line(self) -> str:
        return f"CLASSIFICATION {self.kind} dimD1={self.dim_d1} dimD2={self.dim_d2} dimMu={self.dim_mu}"


def _kind(dims: tuple[int, int, int], mixed: bool) -> str:
    if mixed:
        return GENERIC
    d1, d2, _ = dims
    if d2 == 0:
        return INVARIANT
    if d1 == 0:
        return ANTI_INVARIANT
    return SEMI_INVARIANT


# ---- mixin ----------------------------------------------------------------------------


class SemiInvariantMixin:
    """Mixin providing the splitting, the J-decomposition and the theorem checkers."""

    # -- splitting

    def split_vertical_at(self, p: Point, strict: bool = False) -> TangentSplit:
        """Orthonormal bases of ``V, H, D1, D2, J D2, mu`` at ``p``.

        Args:
            p: Sample point of the total space.
            strict: Raise :class:`MixedEigenvalue` for an eigenvalue of
                ``-phi^2`` away from ``{0, 1}`` instead of only recording it.

        Raises:
            MissingJ: if the total space carries no almost complex structure.
        """
        self.scenario.total.require_structure()
        split = split_from_jets(self.jets_at(p), self.tolerances.eigenvalue)
        if strict and split.mixed:
            raise MixedEigenvalue(tuple(map(float, p)), split.mixed[0], split)
        return split

    def point_operators_at(self, p: Point, split: TangentSplit | None = None) -> PointOperators:
        """``phi v = P_V J v``, ``omega v = P_H J v``, ``B x = P_V J x`` and ``C x = P_H J x``."""
        pj = self.jets_at(p)
        return operators_from_jets(pj, split or self.split_vertical_at(p))

    def classify(self, samples: Sequence[Point] | None = None) -> Classification:
        """Kind and distribution ranks over the sample points.

        Raises:
            RankInstability: if the ranks of ``D1, D2, mu`` vary between points.
        """
        points = self.points if samples is None else samples
        dims, spectra, mixed = [], [], False
        for p in points:
            split = self.split_vertical_at(p)
            dims.append(split.dims)
            spectra.append(split.phi_sq_spectrum)
            mixed = mixed or bool(split.mixed)
        if len(set(dims)) > 1:
            raise RankInstability(dims)
        d1, d2, mu = dims[0]
        result = Classification(_kind(dims[0], mixed), d1, d2, mu, spectra)
        logger.debug("%s classified as %s", self.scenario.label, result.kind)
        return result

    def classification(self) -> Classification:
        return self._memo("classification", self.classify)

    def distributions_at(self, p: Point) -> DistributionJets:
        return distribution_jets(self.jets_at(p))

    # -- gates

    def kaehler_report(self) -> CheckReport:
        return self._memo("kaehler", lambda: check_kaehler(self.scenario.total, self.points, self.tolerances.kaehler_gate))

    def theorem_gate(
        self, name: str, tolerance: float, kinds: Sequence[str] = NON_GENERIC, proper: bool = False
    ) -> CheckReport | None:
        """``NOT-APPLICABLE`` report unless submersion, Kaehler and kind gates pass."""
        gate = self.submersion_gate(name, tolerance)
        if gate is not None:
            return gate
        if not self.kaehler_report().ok:
            logger.warning("%s: Kaehler gate failed for %s", name, self.scenario.label)
            return CheckReport.not_applicable(name, "total space is not Kaehler", tolerance)
        kind = self.classification()
        if kind.kind not in kinds:
            return CheckReport.not_applicable(name, f"classification is {kind.kind}", tolerance)
        if proper and not kind.proper:
            return CheckReport.not_applicable(name, "needs D1 and D2 both non-zero", tolerance)
        return None

    # -- J-decomposition identities

    def check_operator_identities(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """The four consequences of ``J^2 = -I`` for ``phi, omega, B, C``, plus ``g(Jx, y) = -g(x, Jy)``."""
        name = "operator_identities"
        tol = self.tolerances.operator_identity
        gate = self.submersion_gate(name, tol)
        if gate is not None:
            return gate
        records = []
        for i, p in enumerate(self.points if samples is None else samples):
            pj = self.jets_at(p)
            residuals = self.point_operators_at(p).identity_residuals()
            residuals["skew"] = _max_abs(pj.metric @ pj.J + pj.J.T @ pj.metric)
            worst = max(residuals, key=residuals.get)
            records.append(PointRecord(i, tuple(map(float, p)), residuals[worst], worst))
        return CheckReport.from_records(name, tol, records)

    def nabla_phi_at(self, p: Point, v: TangentVector, w: TangentVector) -> TangentVector:
        """``(nabla_V phi) W = V nabla_V (phi W) - phi V nabla_V W``."""
        pj = self.jets_at(p)
        dj = self.distributions_at(p)
        v, w = np.asarray(v, float), np.asarray(w, float)
        hat_w = pj.P_V @ pj.nabla(v, pj.vertical.apply(w))
        return pj.P_V @ pj.nabla(v, dj.phi.apply(w)) - dj.phi.value @ hat_w

    def nabla_omega_at(self, p: Point, v: TangentVector, w: TangentVector) -> TangentVector:
        """``(nabla_V omega) W = H nabla_V (omega W) - omega V nabla_V W``."""
        pj = self.jets_at(p)
        dj = self.distributions_at(p)
        v, w = np.asarray(v, float), np.asarray(w, float)
        hat_w = pj.P_V @ pj.nabla(v, pj.vertical.apply(w))
        return pj.P_H @ pj.nabla(v, dj.omega.apply(w)) - dj.omega.value @ hat_w

    def check_phi_omega_equations(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """``(nabla_V phi) W = B T_V W - T_V omega W`` and ``(nabla_V omega) W = C T_V W - T_V phi W``."""
        name = "phi_omega_equations"
        tol = self.tolerances.phi_equation
        gate = self.theorem_gate(name, tol, kinds=NON_GENERIC + (GENERIC,))
        if gate is not None:
            return gate
        records = []
        for i, p in enumerate(self.points if samples is None else samples):
            pj = self.jets_at(p)
            dj = self.distributions_at(p)
            residual = 0.0
            for v, w in itertools.product(pj.vertical_basis(), repeat=2):
                T_vw = tensor_T(pj, v, w)
                rhs_phi = dj.B.value @ T_vw - tensor_T(pj, v, dj.omega.value @ w)
                rhs_omega = dj.C.value @ T_vw - tensor_T(pj, v, dj.phi.value @ w)
                residual = max(
                    residual,
                    pj.norm(self.nabla_phi_at(p, v, w) - rhs_phi),
                    pj.norm(self.nabla_omega_at(p, v, w) - rhs_omega),
                )
            records.append(PointRecord(i, tuple(map(float, p)), residual))
        return CheckReport.from_records(name, tol, records)

    # -- integrability

    def d2_integrability_check(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Brackets of projected ``D2`` frame fields stay in ``D2``."""
        name = "d2_integrability"
        tol = self.tolerances.membership
        gate = self.theorem_gate(name, tol)
        if gate is not None:
            return gate
        records = []
        for i, p in enumerate(self.points if samples is None else samples):
            pj = self.jets_at(p)
            dj = self.distributions_at(p)
            split = self.split_vertical_at(p)
            residual = 0.0
            for a, b in itertools.combinations(split.d2_basis, 2):
                bracket = _bracket(dj.d2.apply(a), dj.d2.apply(b))
                residual = max(residual, _outside(pj, dj.d2.value, bracket))
            records.append(PointRecord(i, tuple(map(float, p)), residual))
        return CheckReport.from_records(name, tol, records)

    def d1_integrability_check(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Integrability of ``D1`` by brackets and by ``g(T_X JY - T_Y JX, JZ) = 0``.

        Raises:
            DisagreementError: if the two verdicts differ.
        """
        name = "d1_integrability"
        tol = self.tolerances.membership
        gate = self.theorem_gate(name, tol)
        if gate is not None:
            return gate
        kind = self.classification()
        if kind.dim_d1 == 0 or kind.dim_d2 == 0:
            return CheckReport.not_applicable(name, "condition is vacuous without both D1 and D2", tol)
        condition, direct = [], []
        for i, p in enumerate(self.points if samples is None else samples):
            pj = self.jets_at(p)
            dj = self.distributions_at(p)
            split = self.split_vertical_at(p)
            point = tuple(map(float, p))
            J = pj.J
            cond = brack = 0.0
            for x, y in itertools.combinations(split.d1_basis, 2):
                bracket = _bracket(dj.d1.apply(x), dj.d1.apply(y))
                brack = max(brack, _outside(pj, dj.d1.value, bracket))
                for z in split.d2_basis:
                    lhs = tensor_T(pj, x, J @ y) - tensor_T(pj, y, J @ x)
                    cond = max(cond, abs(pj.inner(lhs, J @ z)))
            condition.append(PointRecord(i, point, cond))
            direct.append(PointRecord(i, point, brack))
        return self._dual_report(name, tol, condition, direct)

    # -- totally geodesic map and foliations

    def _vertical_conditions(self, pj: PointJets, dj: DistributionJets, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
        """Residuals of ``V nabla_x phi y + T_x omega y`` in ``D1`` and ``H nabla_x omega y + T_x phi y`` in ``J D2``."""
        a = pj.P_V @ pj.nabla(x, dj.phi.apply(y)) + tensor_T(pj, x, dj.omega.value @ y)
        b = pj.P_H @ pj.nabla(x, dj.omega.apply(y)) + tensor_T(pj, x, dj.phi.value @ y)
        return _outside(pj, dj.d1.value, a), _outside(pj, dj.jd2.value, b)

    def _mixed_conditions(self, pj: PointJets, dj: DistributionJets, x: np.ndarray, z: np.ndarray) -> tuple[float, float]:
        """Residuals of ``V nabla_x B z + T_x C z`` in ``D1`` and ``T_x B z + H nabla_x C z`` in ``J D2``.

        ``z`` is extended as the basic lift of the constant base vector
        ``F_* z``, so ``F_* Z`` is parallel along the fiber.
        """
        w = pj.jacobian.value @ z
        Bz = (dj.B @ pj.lift).apply(w)
        Cz = (dj.C @ pj.lift).apply(w)
        a = pj.P_V @ pj.nabla(x, Bz) + tensor_T(pj, x, Cz.value)
        b = tensor_T(pj, x, Bz.value) + pj.P_H @ pj.nabla(x, Cz)
        return _outside(pj, dj.d1.value, a), _outside(pj, dj.jd2.value, b)

    def totally_geodesic_map_check(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Conditions for ``nabla F_* = 0`` against the second fundamental form itself.

        Raises:
            DisagreementError: if the two verdicts differ.
        """
        name = "totally_geodesic_map"
        tol = self.tolerances.membership
        gate = self.theorem_gate(name, tol)
        if gate is not None:
            return gate
        condition, direct = [], []
        for i, p in enumerate(self.points if samples is None else samples):
            pj = self.jets_at(p)
            dj = self.distributions_at(p)
            point = tuple(map(float, p))
            verticals, horizontals = pj.vertical_basis(), pj.horizontal_basis()
            cond = 0.0
            for x in verticals:
                for y in verticals:
                    cond = max(cond, *self._vertical_conditions(pj, dj, x, y))
                for z in horizontals:
                    cond = max(cond, *self._mixed_conditions(pj, dj, x, z))
            sff = 0.0
            for e, f in itertools.product(verticals + horizontals, repeat=2):
                v = second_fundamental_form(pj, e, f)
                sff = max(sff, float(np.sqrt(max(v @ pj.base_metric @ v, 0.0))))
            condition.append(PointRecord(i, point, cond))
            direct.append(PointRecord(i, point, sff))
        return self._dual_report(name, tol, condition, direct)

    def _horizontal_records(self, points: Sequence[Point]) -> tuple[list[PointRecord], list[PointRecord]]:
        condition, direct = [], []
        for i, p in enumerate(points):
            pj = self.jets_at(p)
            dj = self.distributions_at(p)
            point = tuple(map(float, p))
            cond = geo = 0.0
            for z1, z2 in itertools.product(pj.horizontal_basis(), repeat=2):
                Bz, Cz = dj.B.apply(z2), dj.C.apply(z2)
                in_mu = tensor_A(pj, z1, Bz.value) + pj.P_H @ pj.nabla(z1, Cz)
                in_d2 = tensor_A(pj, z1, Cz.value) + pj.P_V @ pj.nabla(z1, Bz)
                cond = max(cond, _outside(pj, dj.mu.value, in_mu), _outside(pj, dj.d2.value, in_d2))
                geo = max(geo, pj.norm(pj.P_V @ pj.nabla(z1, pj.horizontal.apply(z2))))
            condition.append(PointRecord(i, point, cond))
            direct.append(PointRecord(i, point, geo))
        return condition, direct

    def horizontal_foliation_check(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Totally geodesic horizontal leaves, by J-decomposition and by ``V nabla_Z1 Z2``.

        Raises:
            DisagreementError: if the two verdicts differ.
        """
        name = "horizontal_foliation"
        tol = self.tolerances.membership
        gate = self.theorem_gate(name, tol)
        if gate is not None:
            return gate
        condition, direct = self._horizontal_records(self.points if samples is None else samples)
        return self._dual_report(name, tol, condition, direct)

    def _vertical_foliation_records(self, points: Sequence[Point]) -> dict[str, list[PointRecord]]:
        paths: dict[str, list[PointRecord]] = {"condition": [], "fiber_form": [], "direct": []}
        for i, p in enumerate(points):
            pj = self.jets_at(p)
            dj = self.distributions_at(p)
            split = self.split_vertical_at(p)
            point = tuple(map(float, p))
            jac, G2 = pj.jacobian.value, pj.base_metric
            cond = form = geo = 0.0
            for x1, x2 in itertools.product(split.vertical_basis, repeat=2):
                cond = max(cond, *self._vertical_conditions(pj, dj, x1, x2))
                sff = second_fundamental_form(pj, x1, x2)
                for z in split.d2_basis:
                    form = max(form, abs(sff @ G2 @ (jac @ pj.J @ z)))
                # g2(F_* u, F_* w) = g1(H u, w) for horizontal w
                pushed = jac @ pj.nabla(x1, dj.omega.apply(x2))
                phi_x2 = dj.phi.value @ x2
                for w in split.mu_basis:
                    form = max(form, abs(pushed @ G2 @ (jac @ w) - pj.inner(phi_x2, tensor_T(pj, x1, w))))
                geo = max(geo, pj.norm(tensor_T(pj, x1, x2)))
            paths["condition"].append(PointRecord(i, point, cond))
            paths["fiber_form"].append(PointRecord(i, point, form))
            paths["direct"].append(PointRecord(i, point, geo))
        return paths

    def vertical_foliation_check(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Totally geodesic fibers by J-decomposition, by ``nabla F_*`` pairings and by ``T = 0``.

        Raises:
            DisagreementError: if the three verdicts are not all equal.
        """
        name = "vertical_foliation"
        tol = self.tolerances.membership
        gate = self.theorem_gate(name, tol)
        if gate is not None:
            return gate
        paths = self._vertical_foliation_records(self.points if samples is None else samples)
        return self._dual_report(name, tol, paths["condition"], paths["direct"], fiber_form=paths["fiber_form"])

    def product_structure_report(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Local product decompositions of the total space.

        ``three_factor_product`` needs ``nabla phi = 0`` on the fibers and
        totally geodesic horizontal leaves; ``two_factor_product`` needs the
        fiber-form conditions and totally geodesic horizontal leaves.
        """
        name = "product_structure"
        tol = self.tolerances.membership
        gate = self.theorem_gate(name, tol)
        if gate is not None:
            return gate
        points = self.points if samples is None else samples
        nabla_phi = []
        for i, p in enumerate(points):
            pj = self.jets_at(p)
            worst = max(
                (pj.norm(self.nabla_phi_at(p, v, w)) for v, w in itertools.product(pj.vertical_basis(), repeat=2)),
                default=0.0,
            )
            nabla_phi.append(PointRecord(i, tuple(map(float, p)), worst))
        horizontal = CheckReport.from_records("horizontal", tol, self._horizontal_records(points)[0])
        fiber_form = CheckReport.from_records("fiber_form", tol, self._vertical_foliation_records(points)["fiber_form"])
        parallel_phi = CheckReport.from_records("nabla_phi", tol, nabla_phi)

        three = parallel_phi.ok and horizontal.ok
        two = fiber_form.ok and horizontal.ok
        parts = [parallel_phi, horizontal, fiber_form]
        worst = max(parts, key=lambda r: r.max_residual)
        return CheckReport(
            name,
            Status.PASS if three and two else Status.FAIL,
            worst.max_residual,
            tol,
            worst.worst_point,
            reason="" if three and two else "at least one product decomposition fails",
            extras={
                "three_factor_product": _verdict(three),
                "two_factor_product": _verdict(two),
                "nabla_phi_residual": parallel_phi.max_residual,
                "horizontal_residual": horizontal.max_residual,
                "fiber_form_residual": fiber_form.max_residual,
            },
        )

    # -- umbilical fibers

    def mean_curvature_location_check(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Mean curvature of umbilical fibers has no ``mu`` component."""
        name = "mean_curvature_location"
        tol = self.tolerances.membership
        gate = self.theorem_gate(name, tol)
        if gate is not None:
            return gate
        if self.classification().dim_d1 == 0:
            return CheckReport.not_applicable(name, "D1 is zero", tol)
        points = self.points if samples is None else samples
        fibers = self.fiber_geometry(points)
        if not fibers.umbilical:
            logger.warning("%s: fibers are not umbilical (defect %.3e)", self.scenario.label, fibers.umbilicity_defect)
            return CheckReport.not_applicable(name, "fibers are not totally umbilical", tol)
        records = [
            PointRecord(i, tuple(map(float, p)), defect) for i, (p, defect) in enumerate(zip(points, fibers.H_mu_norms))
        ]
        return CheckReport.from_records(name, tol, records, max_H_norm=fibers.max_H_norm)

    def space_form_consistency_check(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Umbilical fibers over a complex space form force ``c = 0`` and, unless geodesic, ``dim D2 = 1``.

        A failure here is a ``THEOREM-VIOLATION``: it points at a bug or at a
        gate letting through a scenario the statements do not cover.
        """
        name = "space_form_consistency"
        tol = self.tolerances.space_form_zero
        gate = self.theorem_gate(name, tol, kinds=(SEMI_INVARIANT,), proper=True)
        if gate is not None:
            return gate
        points = self.points if samples is None else samples
        fibers = self.fiber_geometry(points)
        if not fibers.umbilical:
            return CheckReport.not_applicable(name, "fibers are not totally umbilical", tol)
        fit = self.space_form_fit()
        if not fit.space_form:
            return CheckReport.not_applicable(name, "total space is not a complex space form", tol)

        kind = self.classification()
        violations = []
        if abs(fit.c_estimate) >= tol:
            violations.append(f"c = {fit.c_estimate:.6g} is not zero")
        if not fibers.totally_geodesic and kind.dim_d2 != 1:
            violations.append(f"fibers not totally geodesic but dim D2 = {kind.dim_d2}")
        extras = {
            "c_estimate": fit.c_estimate,
            "fit_residual": fit.residual_max,
            "dim_d2": kind.dim_d2,
            "totally_geodesic": fibers.totally_geodesic,
        }
        if violations:
            logger.warning("%s: %s", self.scenario.label, "; ".join(violations))
            return CheckReport(
                name, Status.THEOREM_VIOLATION, abs(fit.c_estimate), tol, reason="; ".join(violations), extras=extras
            )
        return CheckReport(name, Status.PASS, abs(fit.c_estimate), tol, extras=extras)

    # -- helpers

    def _dual_report(
        self,
        name: str,
        tolerance: float,
        condition: list[PointRecord],
        direct: list[PointRecord],
        **other_paths: list[PointRecord],
    ) -> CheckReport:
        """Condition-path report annotated with the direct verdict; raises on disagreement.

        The paths disagree when their statuses differ, or when both PASS and
        their residuals are further apart than ``Tolerances.agreement``. Failing
        paths measure different quantities, so their gap is only recorded.
        """
        report = CheckReport.from_records(name, tolerance, condition)
        verdicts = {"direct": CheckReport.from_records(name, tolerance, direct)}
        verdicts.update({key: CheckReport.from_records(name, tolerance, recs) for key, recs in other_paths.items()})
        gap = max(abs(r.max_residual - report.max_residual) for r in verdicts.values())
        agreement = all(r.status == report.status for r in verdicts.values())
        if agreement and report.status == Status.PASS:
            agreement = gap <= self.tolerances.agreement
        report.extras.update({"agreement": agreement, "gap": gap})
        for key, r in verdicts.items():
            report.extras[f"{key}_residual"] = r.max_residual
            report.extras[f"{key}_status"] = r.status.value
        if not agreement:
            raise DisagreementError(report)
        return report


def _verdict(ok: bool) -> str:
    return Status.PASS.value if ok else Status.FAIL.value
