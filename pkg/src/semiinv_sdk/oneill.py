"""O'Neill tensors T and A, fiber geometry, and the curvature relation for fibers."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Point, TangentVector
from .reports import CheckReport, PointRecord, Status
from .submersion import FieldJet, OperatorJet, PointJets

logger = logging.getLogger(__name__)


# ---- pointwise tensors ------------------------------------------------------------


def nabla_projected(pj: PointJets, op: OperatorJet, x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``nabla_x (P c)`` with ``P c`` extended as the field ``q -> P(q) c``."""
    return pj.nabla(x, op.apply(c))


def _split_tensor(pj: PointJets, a: np.ndarray, vertical: FieldJet, horizontal: FieldJet) -> np.ndarray:
    return pj.P_H @ pj.nabla(a, vertical) + pj.P_V @ pj.nabla(a, horizontal)


def tensor_T(pj: PointJets, e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``T_E F = H nabla_{VE} VF + V nabla_{VE} HF``."""
    a = pj.P_V @ e
    return _split_tensor(pj, a, pj.vertical.apply(f), pj.horizontal.apply(f))


def tensor_A(pj: PointJets, e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``A_E F = H nabla_{HE} VF + V nabla_{HE} HF``."""
    b = pj.P_H @ e
    return _split_tensor(pj, b, pj.vertical.apply(f), pj.horizontal.apply(f))


def _twisted(op: OperatorJet, f: np.ndarray, twist: np.ndarray) -> FieldJet:
    # q -> P(q) (f + twist (q - p)): same value at p, different first derivative
    base = op.apply(f)
    return FieldJet(base.value, base.grad + op.value @ twist, base.hess)


def tensor_T_extended(pj: PointJets, e: np.ndarray, f: np.ndarray, twist: np.ndarray) -> np.ndarray:
    a = pj.P_V @ e
    return _split_tensor(pj, a, _twisted(pj.vertical, f, twist), _twisted(pj.horizontal, f, twist))


def tensor_A_extended(pj: PointJets, e: np.ndarray, f: np.ndarray, twist: np.ndarray) -> np.ndarray:
    b = pj.P_H @ e
    return _split_tensor(pj, b, _twisted(pj.vertical, f, twist), _twisted(pj.horizontal, f, twist))


def nabla_T(pj: PointJets, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``(nabla_x T)_y z`` for vertical ``y``, ``z`` through projected-frame extensions.

    ``T_Y Z = H nabla_Y Z`` for vertical fields, so the field ``W = P_H B`` with
    ``B = nabla_Y Z`` is differentiated by the chain rule using the second
    derivatives of the vertical projector.
    """
    Yj = pj.vertical.apply(y)
    Zj = pj.vertical.apply(z)
    Y, Z = Yj.value, Zj.value
    gamma, dgamma = pj.christoffel, pj.christoffel_grad

    B = Zj.grad @ Y + pj.gamma(Y, Z)
    dB = (
        Zj.grad @ Yj.grad
        + np.einsum("aim,i->am", Zj.hess, Y)
        + np.einsum("aijm,i,j->am", dgamma, Y, Z)
        + np.einsum("aij,im,j->am", gamma, Yj.grad, Z)
        + np.einsum("aij,i,jm->am", gamma, Y, Zj.grad)
    )
    W = pj.P_H @ B
    dW = np.einsum("abm,b->am", pj.horizontal.grad, B) + pj.P_H @ dB
    nabla_W = dW @ x + pj.gamma(x, W)
    return nabla_W - tensor_T(pj, pj.nabla(x, Yj), Z) - tensor_T(pj, Y, pj.nabla(x, Zj))


@dataclass(frozen=True)
class CurvatureTerms:
    """``g(R(x1, x2) x3, z)`` and ``g((nabla_{xi} T)_{xj} x3, z)`` for one quadruple."""

    curvature: float
    nabla_first: float  # g((nabla_{x1} T)_{x2} x3, z)
    nabla_second: float  # g((nabla_{x2} T)_{x1} x3, z)

    @property
    def printed_residual(self) -> float:
        return abs(self.curvature - self.nabla_second + self.nabla_first)

    @property
    def convention_residual(self) -> float:
        return abs(self.curvature - self.nabla_first + self.nabla_second)


def curvature_terms(pj: PointJets, x1: np.ndarray, x2: np.ndarray, x3: np.ndarray, z: np.ndarray) -> CurvatureTerms:
    curv = np.einsum("lkij,k,i,j->l", pj.riemann, x3, x1, x2)
    return CurvatureTerms(
        pj.inner(curv, z),
        pj.inner(nabla_T(pj, x1, x2, x3), z),
        pj.inner(nabla_T(pj, x2, x1, x3), z),
    )


# ---- reports ----------------------------------------------------------------------


@dataclass
class FiberGeometryReport:
    """Second fundamental form data of the fibers over the sample points."""

    max_T_norm: float
    umbilicity_defect: float
    H: list[np.ndarray] = field(default_factory=list)
    H_mu_norms: list[float] = field(default_factory=list)
    H_in_jd2_defect: float | None = None
    worst_point: tuple[float, ...] | None = None
    geodesic_tolerance: float = 1e-7
    umbilical_tolerance: float = 1e-7

    @property
    def max_H_norm(self) -> float:
        return max((float(np.linalg.norm(h)) for h in self.H), default=0.0)

    @property
    def totally_geodesic(self) -> bool:
        return self.max_T_norm < self.geodesic_tolerance

    @property
    def umbilical(self) -> bool:
        return self.umbilicity_defect < self.umbilical_tolerance

    def to_reports(self) -> list[CheckReport]:
        geodesic = CheckReport(
            "totally_geodesic_fibers",
            _status(self.totally_geodesic),
            self.max_T_norm,
            self.geodesic_tolerance,
            self.worst_point,
        )
        umbilic = CheckReport(
            "umbilical_fibers",
            _status(self.umbilical),
            self.umbilicity_defect,
            self.umbilical_tolerance,
            self.worst_point,
            extras={"max_H_norm": self.max_H_norm},
        )
        return [geodesic, umbilic]


def _status(ok: bool) -> Status:
    return Status.PASS if ok else Status.FAIL


# ---- mixin ------------------------------------------------------------------------


class ONeillMixin:
    """Mixin providing the O'Neill tensors and the checks built on them."""

    def T_at(self, p: Point, e: TangentVector, f: TangentVector) -> TangentVector:  # noqa: N802
        """O'Neill's ``T_E F`` at ``p``."""
        return tensor_T(self.jets_at(p), np.asarray(e, float), np.asarray(f, float))

    def A_at(self, p: Point, e: TangentVector, f: TangentVector) -> TangentVector:  # noqa: N802
        """O'Neill's ``A_E F`` at ``p``."""
        return tensor_A(self.jets_at(p), np.asarray(e, float), np.asarray(f, float))

    def T_at_extended(self, p: Point, e: TangentVector, f: TangentVector, twist: np.ndarray) -> TangentVector:  # noqa: N802
        """``T_E F`` with ``F`` extended by ``q -> P(q)(f + twist (q - p))``."""
        return tensor_T_extended(self.jets_at(p), np.asarray(e, float), np.asarray(f, float), np.asarray(twist, float))

    def check_fundamental_equations(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Vertical/horizontal decompositions of the Levi-Civita derivative.

        For projected frame fields ``V, W`` (vertical) and ``X, Y`` (horizontal)::

            nabla_V W = T_V W + V nabla_V W
            nabla_V X = H nabla_V X + T_V X
            nabla_X V = A_X V + V nabla_X V
            nabla_X Y = H nabla_X Y + A_X Y
        """
        name = "fundamental_equations"
        gate = self.submersion_gate(name, self.tolerances.decomposition)
        if gate is not None:
            return gate
        records = []
        for i, p in enumerate(self.points if samples is None else samples):
            pj = self.jets_at(p)
            verticals, horizontals = pj.vertical_basis(), pj.horizontal_basis()
            residual = 0.0
            for u, tensor in [(v, tensor_T) for v in verticals] + [(x, tensor_A) for x in horizontals]:
                for w in verticals:
                    grad = nabla_projected(pj, pj.vertical, u, w)
                    residual = max(residual, pj.norm(grad - tensor(pj, u, w) - pj.P_V @ grad))
                for y in horizontals:
                    grad = nabla_projected(pj, pj.horizontal, u, y)
                    residual = max(residual, pj.norm(grad - pj.P_H @ grad - tensor(pj, u, y)))
            records.append(PointRecord(i, tuple(map(float, p)), residual))
        return CheckReport.from_records(name, self.tolerances.decomposition, records)

    def check_tensor_identities(self, samples: Sequence[Point] | None = None) -> list[CheckReport]:
        """Symmetry, alternation, skew-adjointness and extension independence.

        Returns:
            ``[tensor_identities, tensor_extension_independence]`` reports.
        """
        names = ("tensor_identities", "tensor_extension_independence")
        gate = self.submersion_gate(names[0], self.tolerances.identity)
        if gate is not None:
            return [gate, CheckReport.not_applicable(names[1], gate.reason, self.tolerances.extension)]
        rng = np.random.default_rng(self.seed)
        identities, extensions = [], []
        for i, p in enumerate(self.points if samples is None else samples):
            pj = self.jets_at(p)
            point = tuple(map(float, p))
            verticals, horizontals = pj.vertical_basis(), pj.horizontal_basis()
            r = 0.0
            for u, w in itertools.product(verticals, repeat=2):
                r = max(r, pj.norm(tensor_T(pj, u, w) - tensor_T(pj, w, u)))
                r = max(r, pj.norm(pj.P_V @ tensor_T(pj, u, w)))
            for x, y in itertools.product(horizontals, repeat=2):
                r = max(r, pj.norm(tensor_A(pj, x, y) + tensor_A(pj, y, x)))
                r = max(r, pj.norm(pj.P_H @ tensor_A(pj, x, y)))
            for u, x in itertools.product(verticals, horizontals):
                r = max(r, pj.norm(pj.P_H @ tensor_T(pj, u, x)))
                r = max(r, pj.norm(pj.P_V @ tensor_A(pj, x, u)))

            n = pj.dim
            ext = 0.0
            for _ in range(4):
                e, f, h = (_unit(pj, rng.standard_normal(n)) for _ in range(3))
                r = max(r, abs(pj.inner(tensor_T(pj, e, f), h) + pj.inner(f, tensor_T(pj, e, h))))
                r = max(r, abs(pj.inner(tensor_A(pj, e, f), h) + pj.inner(f, tensor_A(pj, e, h))))
                r = max(r, pj.norm(tensor_T(pj, e, f) - tensor_T(pj, pj.P_V @ e, f)))
                r = max(r, pj.norm(tensor_A(pj, e, f) - tensor_A(pj, pj.P_H @ e, f)))
                twist = rng.standard_normal((n, n))
                ext = max(ext, pj.norm(tensor_T(pj, e, f) - tensor_T_extended(pj, e, f, twist)))
                ext = max(ext, pj.norm(tensor_A(pj, e, f) - tensor_A_extended(pj, e, f, twist)))
            identities.append(PointRecord(i, point, r))
            extensions.append(PointRecord(i, point, ext))
        return [
            CheckReport.from_records(names[0], self.tolerances.identity, identities),
            CheckReport.from_records(names[1], self.tolerances.extension, extensions),
        ]

    def check_a_bracket_identity(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """``A_X Y = 1/2 V[X, Y]`` for projected horizontal frame fields."""
        name = "a_bracket_identity"
        gate = self.submersion_gate(name, self.tolerances.identity)
        if gate is not None:
            return gate
        records = []
        for i, p in enumerate(self.points if samples is None else samples):
            pj = self.jets_at(p)
            residual = 0.0
            for x, y in itertools.product(pj.horizontal_basis(), repeat=2):
                X, Y = pj.horizontal.apply(x), pj.horizontal.apply(y)
                bracket = Y.grad @ X.value - X.grad @ Y.value
                residual = max(residual, pj.norm(tensor_A(pj, x, y) - 0.5 * pj.P_V @ bracket))
            records.append(PointRecord(i, tuple(map(float, p)), residual))
        return CheckReport.from_records(name, self.tolerances.identity, records)

    def fiber_geometry(self, samples: Sequence[Point] | None = None) -> FiberGeometryReport:
        """Size of T on the fibers, their mean curvature and umbilicity defect.

        ``H = (1/r) sum_i T_{e_i} e_i`` over a vertical orthonormal basis, so
        umbilical fibers satisfy ``T_X Y = g(X, Y) H`` exactly. With a complex
        structure on the total space, the length of the ``mu`` component of
        ``H`` is recorded per point and its maximum is ``H_in_jd2_defect``.
        """
        max_T = defect = 0.0
        Hs: list[np.ndarray] = []
        mu_norms: list[float] = []
        with_structure = self.scenario.total.has_structure
        worst_point = None
        for p in self.points if samples is None else samples:
            pj = self.jets_at(p)
            basis = pj.vertical_basis()
            table = {(a, b): tensor_T(pj, basis[a], basis[b]) for a in range(len(basis)) for b in range(len(basis))}
            H = sum((table[a, a] for a in range(len(basis))), np.zeros(pj.dim)) / max(len(basis), 1)
            point_T = max((pj.norm(v) for v in table.values()), default=0.0)
            point_defect = max(
                (pj.norm(v - (1.0 if a == b else 0.0) * H) for (a, b), v in table.items()),
                default=0.0,
            )
            if worst_point is None or point_T > max_T:
                worst_point = tuple(map(float, p))
            max_T = max(max_T, point_T)
            defect = max(defect, point_defect)
            Hs.append(H)
            if with_structure:
                mu = self.split_vertical_at(p).matrix("mu")
                mu_norms.append(pj.norm(mu @ (mu.T @ pj.metric @ H)))
        report = FiberGeometryReport(
            max_T,
            defect,
            Hs,
            H_mu_norms=mu_norms,
            H_in_jd2_defect=max(mu_norms, default=0.0) if with_structure else None,
            worst_point=worst_point,
            geodesic_tolerance=self.tolerances.geodesic,
            umbilical_tolerance=self.tolerances.umbilical,
        )
        logger.debug("fiber geometry of %s: |T| %.3e, umbilicity %.3e", self.scenario.label, max_T, defect)
        return report

    def curvature_relation_terms(
        self, p: Point, x1: TangentVector, x2: TangentVector, x3: TangentVector, z: TangentVector
    ) -> CurvatureTerms:
        pj = self.jets_at(p)
        return curvature_terms(pj, *(np.asarray(v, float) for v in (x1, x2, x3, z)))

    def curvature_relation_residual(
        self,
        p: Point,
        x1: TangentVector,
        x2: TangentVector,
        x3: TangentVector,
        z: TangentVector,
        orientation: str = "convention",
    ) -> float:
        """Residual of the fiber curvature relation for vertical ``x1, x2, x3`` and horizontal ``z``.

        Args:
            orientation: ``"convention"`` compares ``g(R(x1,x2)x3, z)`` with
                ``g((nabla_{x1}T)_{x2}x3 - (nabla_{x2}T)_{x1}x3, z)``, matching
                ``R = [nabla, nabla] - nabla_[,]``; ``"printed"`` uses the
                opposite sign on the right-hand side.
        """
        terms = self.curvature_relation_terms(p, x1, x2, x3, z)
        if orientation == "printed":
            return terms.printed_residual
        return terms.convention_residual

    def check_curvature_relation(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Curvature relation over vertical orthonormal triples and a horizontal basis.

        The verdict uses the orientation consistent with the curvature sign
        convention; the other orientation is reported in ``extras``.
        """
        name = "curvature_relation"
        tol = self.tolerances.curvature_relation
        gate = self.submersion_gate(name, tol)
        if gate is not None:
            return gate
        records, printed = [], 0.0
        lhs_max = rhs_max = 0.0
        for i, p in enumerate(self.points if samples is None else samples):
            pj = self.jets_at(p)
            verticals, horizontals = pj.vertical_basis(), pj.horizontal_basis()
            residual = 0.0
            for x1, x2, x3 in itertools.product(verticals, repeat=3):
                for z in horizontals:
                    terms = curvature_terms(pj, x1, x2, x3, z)
                    residual = max(residual, terms.convention_residual)
                    printed = max(printed, terms.printed_residual)
                    lhs_max = max(lhs_max, abs(terms.curvature))
                    rhs_max = max(rhs_max, abs(terms.nabla_first - terms.nabla_second))
            records.append(PointRecord(i, tuple(map(float, p)), residual))
        return CheckReport.from_records(
            name,
            tol,
            records,
            printed_orientation_residual=printed,
            printed_orientation_status=("PASS" if printed < tol else "FAIL"),
            max_curvature_term=lhs_max,
            max_tensor_term=rhs_max,
        )


def _unit(pj: PointJets, v: np.ndarray) -> np.ndarray:
    return v / pj.norm(v)
