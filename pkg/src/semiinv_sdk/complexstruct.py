"""Almost complex structure checks and the complex space form curvature model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NotSpaceForm
from .expr import eval_jet2
from .geometry import (
    DEFAULT_SEED,
    ManifoldSpec,
    Point,
    TangentVector,
    chart_jets,
    christoffel_from,
    connection_apply,
    inner,
    metric_at,
    metric_derivatives_at,
    norm,
    orthonormalize,
    structure_at,
)
from .reports import CheckReport, PointRecord

logger = logging.getLogger(__name__)

HERMITIAN_TOLERANCE = 1e-9
KAEHLER_TOLERANCE = 1e-7
SPACE_FORM_TOLERANCE = 1e-5
TRIPLES_PER_POINT = 10


def structure_derivatives_at(m: ManifoldSpec, p: Point) -> tuple[np.ndarray, np.ndarray]:
    """``(J, dJ)`` with ``dJ[a, b, k] = d_k J^a_b``."""
    rows = m.require_structure()
    n = m.dim
    J = np.empty((n, n))
    dJ = np.empty((n, n, n))
    for a, row in enumerate(rows):
        for b, e in enumerate(row):
            jet = eval_jet2(e, p, m.coords)
            J[a, b] = jet.value
            dJ[a, b] = jet.grad
    return J, dJ


def hermitian_residual_at(m: ManifoldSpec, p: Point) -> float:
    """``max(|J^2 + I|, |J^T G J - G|)`` entrywise at ``p``."""
    G = metric_at(m, p)
    J = structure_at(m, p)
    square = np.abs(J @ J + np.eye(m.dim)).max()
    compat = np.abs(J.T @ G @ J - G).max()
    return float(max(square, compat))


def validate_almost_hermitian(
    m: ManifoldSpec, samples: Sequence[Point], tolerance: float = HERMITIAN_TOLERANCE
) -> CheckReport:
    """Check ``J^2 = -I`` and ``g(JX, JY) = g(X, Y)`` at every sample."""
    m.require_structure()
    records = [PointRecord(i, tuple(map(float, p)), hermitian_residual_at(m, p)) for i, p in enumerate(samples)]
    return CheckReport.from_records("almost_hermitian", tolerance, records)


def kaehler_tensor_at(m: ManifoldSpec, p: Point) -> np.ndarray:
    """``D[k, l, i]`` with ``(nabla_x J) y = D[k, l, i] x^i y^l``."""
    G, dG, _ = metric_derivatives_at(m, p)
    gamma = christoffel_from(np.linalg.inv(G), dG)
    J, dJ = structure_derivatives_at(m, p)
    return dJ + np.einsum("kim,ml->kli", gamma, J) - np.einsum("km,mil->kli", J, gamma)


def kaehler_defect_at(m: ManifoldSpec, p: Point, x: TangentVector, y: TangentVector) -> TangentVector:
    """``(nabla_x J) y = nabla_x (J y) - J nabla_x y`` for constant extensions of x, y."""
    G, dG, _ = metric_derivatives_at(m, p)
    gamma = christoffel_from(np.linalg.inv(G), dG)
    J, dJ = structure_derivatives_at(m, p)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.einsum("kli,i,l->k", dJ, x, y) + connection_apply(gamma, x, J @ y) - J @ connection_apply(gamma, x, y)


def max_kaehler_defect_at(m: ManifoldSpec, p: Point) -> float:
    """Largest ``|(nabla_a J) b|`` over a g-orthonormal frame ``a, b``."""
    G = metric_at(m, p)
    frame = np.column_stack(orthonormalize(np.eye(m.dim), G))
    D = np.einsum("kli,ia,lb->kab", kaehler_tensor_at(m, p), frame, frame)
    norms = np.einsum("kab,kl,lab->ab", D, G, D)
    return float(np.sqrt(max(norms.max(), 0.0)))


def check_kaehler(m: ManifoldSpec, samples: Sequence[Point], tolerance: float = KAEHLER_TOLERANCE) -> CheckReport:
    records = [PointRecord(i, tuple(map(float, p)), max_kaehler_defect_at(m, p)) for i, p in enumerate(samples)]
    report = CheckReport.from_records("kaehler", tolerance, records)
    if not report.ok:
        logger.warning("%s is not Kaehler: max defect %.3e", m.label or "manifold", report.max_residual)
    return report


def space_form_curvature(
    c: float, m: ManifoldSpec, p: Point, x: TangentVector, y: TangentVector, z: TangentVector
) -> TangentVector:
    """Curvature of a complex space form of constant holomorphic sectional curvature ``c``.

    ``(c/4)[g(y,z)x - g(x,z)y + g(Jy,z)Jx - g(Jx,z)Jy + 2g(x,Jy)Jz]``
    """
    G = metric_at(m, p)
    J = structure_at(m, p)
    return _space_form(c, G, J, np.asarray(x, float), np.asarray(y, float), np.asarray(z, float))


def _space_form(c: float, G: np.ndarray, J: np.ndarray, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    Jx, Jy, Jz = J @ x, J @ y, J @ z
    return (c / 4.0) * (
        inner(G, y, z) * x
        - inner(G, x, z) * y
        + inner(G, Jy, z) * Jx
        - inner(G, Jx, z) * Jy
        + 2.0 * inner(G, x, Jy) * Jz
    )


@dataclass
class SpaceFormFit:
    c_estimate: float
    residual_max: float
    per_point: list[float] = field(default_factory=list)
    tolerance: float = SPACE_FORM_TOLERANCE

    @property
    def space_form(self) -> bool:
        return self.residual_max <= self.tolerance

    def raise_for_space_form(self) -> None:
        """Raise :class:`NotSpaceForm` unless the fit reproduces the curvature."""
        if not self.space_form:
            raise NotSpaceForm(self)


def fit_space_form_constant(
    m: ManifoldSpec,
    samples: Sequence[Point],
    seed: int = DEFAULT_SEED,
    tolerance: float = SPACE_FORM_TOLERANCE,
    triples: int = TRIPLES_PER_POINT,
) -> SpaceFormFit:
    """Least-squares holomorphic sectional curvature over random unit triples."""
    m.require_structure()
    rng = np.random.default_rng(seed)
    per_point: list[float] = []
    # (R, model, G) for every triple, kept to measure the residual of the global fit
    evaluations: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    num_total = den_total = 0.0
    for p in samples:
        cj = chart_jets(m, p)
        G, J, R = cj.metric, cj.structure, cj.riemann()
        num = den = 0.0
        for _ in range(triples):
            x, y, z = (_unit(rng.standard_normal(m.dim), G) for _ in range(3))
            curv = np.einsum("lkij,k,i,j->l", R, z, x, y)
            model = _space_form(1.0, G, J, x, y, z)
            num += inner(G, curv, model)
            den += inner(G, model, model)
            evaluations.append((curv, model, G))
        per_point.append(num / den if den > 0.0 else 0.0)
        num_total += num
        den_total += den

    c = num_total / den_total if den_total > 0.0 else 0.0
    residual = max((norm(G, curv - c * model) for curv, model, G in evaluations), default=0.0)
    fit = SpaceFormFit(c, residual, per_point, tolerance)
    if not fit.space_form:
        logger.warning("%s is not a complex space form (c ~ %.6g, residual %.3e)", m.label or "manifold", c, residual)
    return fit


def _unit(v: np.ndarray, G: np.ndarray) -> np.ndarray:
    return v / np.sqrt(inner(G, v, v))
