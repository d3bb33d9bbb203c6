"""The smooth map, its differential, and the vertical/horizontal splitting."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence, Union

import numpy as np

from .errors import RankDeficient, ValidationError
from .expr import Expression, eval, eval_jet2, eval_jet2_nested, nested_variables
from .geometry import (
    ManifoldSpec,
    Point,
    TangentVector,
    VectorField,
    basis_matrix,
    chart_jets,
    christoffel_at,
    connection_apply,
    metric_at,
    orthonormalize,
)
from .jets import as_jet, generic_inv, gradients, hessians, real_value, values
from .reports import CheckReport, PointRecord

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-7
CONSTANT_JACOBIAN_TOLERANCE = 1e-12
JET_CACHE_SIZE = 256


@dataclass(frozen=True)
class SmoothMapSpec:
    """``F: source -> target`` given by one expression per target coordinate."""

    source: ManifoldSpec
    target: ManifoldSpec
    components: tuple[Expression, ...]

    def __post_init__(self) -> None:
        if len(self.components) != self.target.dim:
            raise ValidationError(f"map needs {self.target.dim} components, got {len(self.components)}")
        if self.source.dim <= self.target.dim:
            raise ValidationError("map source dim must exceed target dim")

    def image_at(self, p: Point) -> np.ndarray:
        env = {name: float(p[i]) for i, name in enumerate(self.source.coords)}
        return np.array([eval(c, env) for c in self.components], dtype=float)

    def jacobian_at(self, p: Point) -> np.ndarray:
        """``Jac[a, i] = d_i F^a`` at ``p``."""
        return np.array([eval_jet2(c, p, self.source.coords).grad for c in self.components], dtype=float)


# ---- matrix-valued jets ------------------------------------------------------------


@dataclass(frozen=True)
class FieldJet:
    """A vector field at a point: ``value[k]``, ``grad[k, i]`` and ``hess[k, i, j]``."""

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


@dataclass(frozen=True)
class OperatorJet:
    """A matrix field at a point with first and second partial derivatives.

    ``grad[a, b, k] = d_k M_ab`` and ``hess[a, b, k, l] = d_k d_l M_ab``.
    Products follow the Leibniz rule, so compositions of projectors, J and
    lifts carry their derivatives along.
    """

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    @classmethod
    def from_jets(cls, arr: np.ndarray, size: int) -> OperatorJet:
        return cls(values(arr), gradients(arr, size), hessians(arr, size))

    @classmethod
    def constant(cls, value: np.ndarray, size: int) -> OperatorJet:
        value = np.asarray(value, dtype=float)
        return cls(value, np.zeros(value.shape + (size,)), np.zeros(value.shape + (size, size)))

    @property
    def T(self) -> OperatorJet:  # noqa: N802
        return OperatorJet(self.value.T, self.grad.transpose(1, 0, 2), self.hess.transpose(1, 0, 2, 3))

    def __matmul__(self, other: OperatorJet) -> OperatorJet:
        A, dA, d2A = self.value, self.grad, self.hess
        B, dB, d2B = other.value, other.grad, other.hess
        cross = np.einsum("abk,bcl->ackl", dA, dB)
        return OperatorJet(
            A @ B,
            np.einsum("abk,bc->ack", dA, B) + np.einsum("ab,bck->ack", A, dB),
            np.einsum("abkl,bc->ackl", d2A, B) + cross + cross.transpose(0, 1, 3, 2) + np.einsum("ab,bckl->ackl", A, d2B),
        )

    def __add__(self, other: OperatorJet) -> OperatorJet:
        return OperatorJet(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    def __sub__(self, other: OperatorJet) -> OperatorJet:
        return OperatorJet(self.value - other.value, self.grad - other.grad, self.hess - other.hess)

    def __neg__(self) -> OperatorJet:
        return OperatorJet(-self.value, -self.grad, -self.hess)

    def scaled(self, factor: float) -> OperatorJet:
        return OperatorJet(factor * self.value, factor * self.grad, factor * self.hess)

    def apply(self, c: np.ndarray) -> FieldJet:
        """The field ``q -> M(q) c`` for a constant vector ``c``."""
        c = np.asarray(c, dtype=float)
        return FieldJet(self.value @ c, np.einsum("abk,b->ak", self.grad, c), np.einsum("abkl,b->akl", self.hess, c))


# ---- per-point bundle ----------------------------------------------------------------


@dataclass(frozen=True)
class PointJets:
    """Everything the analyzers need at one sample point of the total space."""

    point: Point
    image: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    christoffel: np.ndarray
    christoffel_grad: np.ndarray
    riemann: np.ndarray
    jacobian: OperatorJet
    lift: OperatorJet
    vertical: OperatorJet
    horizontal: OperatorJet
    structure: OperatorJet | None
    base_metric: np.ndarray
    base_christoffel: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.point)

    @property
    def P_V(self) -> np.ndarray:  # noqa: N802
        return self.vertical.value

    @property
    def P_H(self) -> np.ndarray:  # noqa: N802
        return self.horizontal.value

    @property
    def J(self) -> np.ndarray:  # noqa: N802
        return self.structure.value

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ self.metric @ y)

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(x, x), 0.0)))

    def gamma(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return connection_apply(self.christoffel, x, y)

    def nabla(self, x: np.ndarray, f: FieldJet) -> np.ndarray:
        """``nabla_x Y`` at the point for a field jet ``Y``."""
        return f.grad @ x + self.gamma(x, f.value)

    def vertical_basis(self) -> list[np.ndarray]:
        """g-orthonormal basis of the kernel of the Jacobian."""
        jac = self.jacobian.value
        _, _, vt = np.linalg.svd(jac)
        return orthonormalize(list(vt[jac.shape[0] :]), self.metric)

    def horizontal_basis(self) -> list[np.ndarray]:
        """g-orthonormal basis of the horizontal space, spanned by the metric duals of dF."""
        return orthonormalize(list((self.metric_inv @ self.jacobian.value.T).T), self.metric)


def point_jets(f: SmoothMapSpec, p: Point, rank_tolerance: float = RANK_TOLERANCE) -> PointJets:
    """Evaluate every chart and map quantity at ``p`` through one nested-jet pass."""
    src = f.source
    n, m = src.dim, f.target.dim
    cj = chart_jets(src, p)
    env = nested_variables(p, src.coords)

    jac_jets = np.empty((m, n), dtype=object)
    image = np.empty(m)
    for a, component in enumerate(f.components):
        r = eval_jet2_nested(component, env)
        image[a] = real_value(r.value)
        for i in range(n):
            jac_jets[a, i] = as_jet(r.grad[i], n)

    jac = values(jac_jets)
    _require_rank(jac, p, rank_tolerance)

    ginv_jt = np.dot(cj.metric_inv_jets, jac_jets.T)
    lift = np.dot(ginv_jt, generic_inv(np.dot(jac_jets, ginv_jt)))
    vertical = OperatorJet.from_jets(np.eye(n) - np.dot(lift, jac_jets), n)
    identity = OperatorJet.constant(np.eye(n), n)

    structure = None
    if cj.structure is not None:
        structure = OperatorJet(cj.structure, cj.structure_grad, cj.structure_hess)

    logger.debug("point jets for %s at %s", src.label, p)
    return PointJets(
        point=np.asarray(p, dtype=float),
        image=image,
        metric=cj.metric,
        metric_inv=cj.metric_inv,
        christoffel=cj.christoffel,
        christoffel_grad=cj.christoffel_grad,
        riemann=cj.riemann(),
        jacobian=OperatorJet.from_jets(jac_jets, n),
        lift=OperatorJet.from_jets(lift, n),
        vertical=vertical,
        horizontal=identity - vertical,
        structure=structure,
        base_metric=metric_at(f.target, image),
        base_christoffel=christoffel_at(f.target, image),
    )


def rank_ratio(jac: np.ndarray) -> float:
    """Smallest over largest singular value of the Jacobian."""
    sv = np.linalg.svd(jac, compute_uv=False)
    return float(sv[-1] / sv[0]) if sv[0] > 0.0 else 0.0


def _require_rank(jac: np.ndarray, p: Point, tolerance: float) -> None:
    ratio = rank_ratio(jac)
    if ratio < tolerance:
        raise RankDeficient(tuple(float(c) for c in p), ratio)


# ---- splits and frame fields -----------------------------------------------------------


@dataclass
class TangentSplit:
    """Orthonormal bases of every distribution at one point."""

    at: Point
    vertical_basis: list[np.ndarray]
    horizontal_basis: list[np.ndarray]
    d1_basis: list[np.ndarray] = field(default_factory=list)
    d2_basis: list[np.ndarray] = field(default_factory=list)
    jd2_basis: list[np.ndarray] = field(default_factory=list)
    mu_basis: list[np.ndarray] = field(default_factory=list)
    phi_sq_spectrum: list[float] = field(default_factory=list)
    mixed: list[float] = field(default_factory=list)

    @property
    def dims(self) -> tuple[int, int, int]:
        return len(self.d1_basis), len(self.d2_basis), len(self.mu_basis)

    def matrix(self, name: str) -> np.ndarray:
        """Basis of ``name`` (e.g. ``"d1"``) as the columns of a matrix."""
        basis = getattr(self, f"{name}_basis")
        return basis_matrix(basis, len(self.at))


@dataclass(frozen=True)
class ProjectedFrameField:
    """``q -> P(q) c`` where ``P`` is one of the projector families of the map.

    ``projector`` names a :class:`PointJets` attribute (``"vertical"``,
    ``"horizontal"``); ``jets_at`` supplies the jets at arbitrary points so the
    field can be used wherever a :class:`~semiinv_sdk.geometry.VectorField` is
    expected.
    """

    projector: str
    components: tuple[float, ...]
    jets_at: Callable[[Point], PointJets]

    def jet(self, pj: PointJets) -> FieldJet:
        return getattr(pj, self.projector).apply(np.asarray(self.components, dtype=float))

    def evaluate(self, p: Point) -> tuple[np.ndarray, np.ndarray]:
        fj = self.jet(self.jets_at(p))
        return fj.value, fj.grad


FieldLike = Union[VectorField, np.ndarray, Sequence[float]]


def field_value(X: Any, p: Point) -> np.ndarray:
    if hasattr(X, "evaluate"):
        return X.evaluate(p)[0]
    return np.asarray(X, dtype=float)


def second_fundamental_form(pj: PointJets, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``(nabla F_*)(x, y)`` at the point, in base components at ``F(p)``.

    The pullback connection contributes base Christoffels at ``F(p)``; the
    derivative terms of the extensions cancel, so only ``x`` and ``y`` matter.
    """
    jac = pj.jacobian.value
    return (
        np.einsum("aji,i,j->a", pj.jacobian.grad, x, y)
        + connection_apply(pj.base_christoffel, jac @ x, jac @ y)
        - jac @ pj.gamma(x, y)
    )


# ---- mixin -------------------------------------------------------------------------------


class SubmersionMixin:
    """Mixin providing map-level evaluation and the submersion checks."""

    def jets_at(self, p: Point) -> PointJets:
        """Point jets at ``p``, kept for the ``JET_CACHE_SIZE`` most recently used points.

        Raises:
            RankDeficient: if the Jacobian drops rank at ``p``.
        """
        key = tuple(float(c) for c in p)
        cached = self._jet_cache.pop(key, None)
        if cached is None:
            cached = point_jets(self.scenario.map, p, self.tolerances.rank)
            if len(self._jet_cache) >= JET_CACHE_SIZE:
                self._jet_cache.pop(next(iter(self._jet_cache)))
        self._jet_cache[key] = cached
        return cached

    def pushforward_at(self, p: Point, v: TangentVector) -> TangentVector:
        """``F_* v`` at ``F(p)``."""
        return self.scenario.map.jacobian_at(p) @ np.asarray(v, dtype=float)

    def vertical_projector_at(self, p: Point) -> np.ndarray:
        """g-orthogonal projector onto ``ker dF_p``.

        Returns:
            ``I - G^-1 Jac^T (Jac G^-1 Jac^T)^-1 Jac`` as an ``n x n`` array.
        """
        return self.jets_at(p).P_V

    def horizontal_projector_at(self, p: Point) -> np.ndarray:
        return self.jets_at(p).P_H

    def frame_field(self, projector: str, components: Sequence[float]) -> ProjectedFrameField:
        return ProjectedFrameField(projector, tuple(float(c) for c in components), self.jets_at)

    def check_riemannian_submersion(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Maximal rank and isometric differential on horizontal vectors.

        Args:
            samples: Points to test (defaults to the analyzer's sample points).

        Returns:
            ``riemannian_submersion`` report; a rank drop counts as residual 1.
        """
        f = self.scenario.map
        records = []
        for i, p in enumerate(self.points if samples is None else samples):
            point = tuple(float(c) for c in p)
            jac = f.jacobian_at(p)
            ratio = rank_ratio(jac)
            if ratio < self.tolerances.rank:
                records.append(PointRecord(i, point, 1.0, f"rank drop (ratio {ratio:.3e})"))
                continue
            G1 = metric_at(f.source, p)
            G2 = metric_at(f.target, f.image_at(p))
            H = basis_matrix(orthonormalize(list((np.linalg.solve(G1, jac.T)).T), G1), f.source.dim)
            gram = H.T @ jac.T @ G2 @ jac @ H
            records.append(PointRecord(i, point, float(np.abs(gram - np.eye(gram.shape[0])).max())))
        report = CheckReport.from_records("riemannian_submersion", self.tolerances.submersion, records)
        if not report.ok:
            logger.warning("%s fails the submersion check (residual %.3e)", self.scenario.label, report.max_residual)
        return report

    def submersion_report(self) -> CheckReport:
        return self._memo("riemannian_submersion", self.check_riemannian_submersion)

    def submersion_gate(self, name: str, tolerance: float) -> CheckReport | None:
        """``NOT-APPLICABLE`` report for ``name`` unless the map is a Riemannian submersion."""
        if self.submersion_report().ok:
            return None
        return CheckReport.not_applicable(name, "map is not a Riemannian submersion", tolerance)

    def second_fundamental_form_at(self, p: Point, X: FieldLike, Y: FieldLike) -> np.ndarray:
        """``(nabla F_*)(X, Y) = nabla^F_X F_* Y - F_*(nabla_X Y)`` at ``p``."""
        return second_fundamental_form(self.jets_at(p), field_value(X, p), field_value(Y, p))

    def check_basic_brackets(self, samples: Sequence[Point] | None = None) -> CheckReport:
        """Basic lifts of base coordinate fields on constant-Jacobian maps.

        Checks that ``F_*`` of the horizontal bracket vanishes like the base
        bracket, that lifts are isometric, and that ``F_* nabla_X Y`` is the base
        covariant derivative of the coordinate fields.
        """
        points = self.points if samples is None else samples
        name = "basic_brackets"
        for p in points:
            if np.abs(self.jets_at(p).jacobian.grad).max() > CONSTANT_JACOBIAN_TOLERANCE:
                return CheckReport.not_applicable(name, "Jacobian is not constant", self.tolerances.identity)
        records = []
        for i, p in enumerate(points):
            pj = self.jets_at(p)
            jac = pj.jacobian.value
            m = jac.shape[0]
            residual = 0.0
            for a in range(m):
                Xa = pj.lift.apply(np.eye(m)[a])
                for b in range(m):
                    Xb = pj.lift.apply(np.eye(m)[b])
                    bracket = Xb.grad @ Xa.value - Xa.grad @ Xb.value
                    residual = max(
                        residual,
                        float(np.abs(jac @ pj.P_H @ bracket).max()),
                        abs(pj.inner(Xa.value, Xb.value) - pj.base_metric[a, b]),
                        float(np.abs(jac @ pj.nabla(Xa.value, Xb) - pj.base_christoffel[:, a, b]).max()),
                    )
            records.append(PointRecord(i, tuple(float(c) for c in p), residual))
        return CheckReport.from_records(name, self.tolerances.identity, records)
