"""Chart-level Riemannian geometry of a single manifold."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import DegenerateMetric, MissingJ
from .expr import Expression, eval, eval_jet2, eval_jet2_nested, nested_variables
from .jets import as_jet, generic_inv, gradients, hessians, values

logger = logging.getLogger(__name__)

Point = np.ndarray
TangentVector = np.ndarray

MIN_EIGENVALUE = 1e-10
DEFAULT_SAMPLES = 16
DEFAULT_SEED = 42
DOMAIN_SHRINK = 0.05


@dataclass(frozen=True)
class ManifoldSpec:
    """A coordinate chart with its metric and optional almost complex structure.

    ``metric_upper[i]`` holds the entries ``g_ij`` for ``j >= i``; the lower
    triangle is never stored, so the metric is symmetric by construction.
    ``J[i][j]`` is the ``i``-th component of ``J(d/dx_j)``.
    """

    dim: int
    coords: tuple[str, ...]
    metric_upper: tuple[tuple[Expression, ...], ...]
    J: tuple[tuple[Expression, ...], ...] | None = None
    domain: tuple[tuple[float, float], ...] = ()
    label: str = ""

    def metric_expr(self, i: int, j: int) -> Expression:
        if i > j:
            i, j = j, i
        return self.metric_upper[i][j - i]

    @property
    def has_structure(self) -> bool:
        return self.J is not None

    def require_structure(self) -> tuple[tuple[Expression, ...], ...]:
        if self.J is None:
            raise MissingJ(self.label)
        return self.J

    def sampling_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Sampling domain shrunk 5% inward from each boundary."""
        bounds = self.domain or tuple((-2.0, 2.0) for _ in range(self.dim))
        lo = np.array([b[0] for b in bounds], dtype=float)
        hi = np.array([b[1] for b in bounds], dtype=float)
        margin = DOMAIN_SHRINK * (hi - lo)
        return lo + margin, hi - margin


# ---- vector fields -----------------------------------------------------------


class VectorField(Protocol):
    """Anything that yields its components and their first derivatives."""

    def evaluate(self, p: Point) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(Y, dY)`` with ``dY[k, i] = d_i Y^k`` at ``p``."""
        ...


@dataclass(frozen=True)
class ConstantField:
    components: tuple[float, ...]

    def evaluate(self, p: Point) -> tuple[np.ndarray, np.ndarray]:
        v = np.asarray(self.components, dtype=float)
        return v, np.zeros((len(v), len(p)))


def coordinate_field(index: int, dim: int) -> ConstantField:
    return ConstantField(tuple(1.0 if k == index else 0.0 for k in range(dim)))


@dataclass(frozen=True)
class ExpressionField:
    components: tuple[Expression, ...]
    coords: tuple[str, ...]

    def evaluate(self, p: Point) -> tuple[np.ndarray, np.ndarray]:
        jets = [eval_jet2(c, p, self.coords) for c in self.components]
        return np.array([j.value for j in jets], dtype=float), np.array([j.grad for j in jets], dtype=float)


# ---- pointwise evaluation ------------------------------------------------------


def _env(m: ManifoldSpec, p: Point) -> dict[str, float]:
    return {name: float(p[i]) for i, name in enumerate(m.coords)}


def _check_metric(G: np.ndarray, p: Point) -> None:
    smallest = float(np.linalg.eigvalsh(G)[0])
    if smallest <= MIN_EIGENVALUE:
        raise DegenerateMetric(tuple(p), smallest)


def metric_at(m: ManifoldSpec, p: Point) -> np.ndarray:
    """Metric matrix at ``p``; raises DegenerateMetric unless positive definite."""
    env = _env(m, p)
    G = np.empty((m.dim, m.dim))
    for i in range(m.dim):
        for j in range(i, m.dim):
            G[i, j] = G[j, i] = eval(m.metric_expr(i, j), env)
    _check_metric(G, p)
    return G


def structure_at(m: ManifoldSpec, p: Point) -> np.ndarray:
    """Matrix of J at ``p`` (column ``j`` is ``J(d/dx_j)``)."""
    rows = m.require_structure()
    env = _env(m, p)
    return np.array([[eval(e, env) for e in row] for row in rows], dtype=float)


def metric_derivatives_at(m: ManifoldSpec, p: Point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(G, dG, d2G)`` with ``dG[a, b, k] = d_k g_ab`` and ``d2G[a, b, k, l]``."""
    n = m.dim
    G = np.empty((n, n))
    dG = np.empty((n, n, n))
    d2G = np.empty((n, n, n, n))
    for i in range(n):
        for j in range(i, n):
            jet = eval_jet2(m.metric_expr(i, j), p, m.coords)
            G[i, j] = G[j, i] = jet.value
            dG[i, j] = dG[j, i] = jet.grad
            d2G[i, j] = d2G[j, i] = jet.hess
    _check_metric(G, p)
    return G, dG, d2G


def christoffel_from(metric_inv: np.ndarray, metric_grad: np.ndarray) -> np.ndarray:
    """Koszul formula ``Gamma[k, i, j] = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)``.

    Works on float arrays and on object arrays of jets alike.
    """
    S = metric_grad.transpose(1, 2, 0) + metric_grad - metric_grad.transpose(2, 0, 1)
    return 0.5 * np.tensordot(metric_inv, S, axes=([1], [0]))


def christoffel_at(m: ManifoldSpec, p: Point) -> np.ndarray:
    G, dG, _ = metric_derivatives_at(m, p)
    return christoffel_from(np.linalg.inv(G), dG)


@dataclass(frozen=True)
class ChartJets:
    """Everything a chart contributes at one point, up to curvature order.

    Built from a single jets-of-jets evaluation: ``metric_jets`` and
    ``metric_inv_jets`` are object arrays of jets in the chart coordinates
    and stay available for pipelines that need to differentiate further.
    """

    point: Point
    metric_jets: np.ndarray
    metric_inv_jets: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    christoffel: np.ndarray
    christoffel_grad: np.ndarray
    structure: np.ndarray | None
    structure_grad: np.ndarray | None
    structure_hess: np.ndarray | None

    def riemann(self) -> np.ndarray:
        return riemann_tensor(self.christoffel, self.christoffel_grad)


def chart_jets(m: ManifoldSpec, p: Point) -> ChartJets:
    n = m.dim
    env = nested_variables(p, m.coords)
    G_jets = np.empty((n, n), dtype=object)
    dG_jets = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            r = eval_jet2_nested(m.metric_expr(i, j), env)
            G_jets[i, j] = G_jets[j, i] = as_jet(r.value, n)
            for k in range(n):
                dG_jets[i, j, k] = dG_jets[j, i, k] = as_jet(r.grad[k], n)
    G = values(G_jets)
    _check_metric(G, p)
    Ginv_jets = generic_inv(G_jets)
    gamma_jets = christoffel_from(Ginv_jets, dG_jets)

    J = dJ = d2J = None
    if m.J is not None:
        J_jets = np.empty((n, n), dtype=object)
        for a, row in enumerate(m.J):
            for b, e in enumerate(row):
                J_jets[a, b] = as_jet(eval_jet2_nested(e, env).value, n)
        J, dJ, d2J = values(J_jets), gradients(J_jets, n), hessians(J_jets, n)

    logger.debug("chart jets for %s at %s", m.label, p)
    return ChartJets(
        point=np.asarray(p, dtype=float),
        metric_jets=G_jets,
        metric_inv_jets=Ginv_jets,
        metric=G,
        metric_inv=values(Ginv_jets),
        christoffel=values(gamma_jets),
        christoffel_grad=gradients(gamma_jets, n),
        structure=J,
        structure_grad=dJ,
        structure_hess=d2J,
    )


def riemann_tensor(gamma: np.ndarray, gamma_grad: np.ndarray) -> np.ndarray:
    """``R[l, k, i, j]`` such that ``R(d_i, d_j) d_k = R[l, k, i, j] d_l``.

    ``gamma_grad[l, a, b, c]`` is ``d_c Gamma^l_ab``.
    """
    return (
        np.einsum("ljki->lkij", gamma_grad)
        - np.einsum("likj->lkij", gamma_grad)
        + np.einsum("lim,mjk->lkij", gamma, gamma)
        - np.einsum("ljm,mik->lkij", gamma, gamma)
    )


def riemann_at(m: ManifoldSpec, p: Point, x: TangentVector, y: TangentVector, z: TangentVector) -> TangentVector:
    """``R(x, y) z = nabla_x nabla_y z - nabla_y nabla_x z - nabla_[x,y] z``."""
    R = chart_jets(m, p).riemann()
    return np.einsum("lkij,k,i,j->l", R, z, x, y)


def lie_bracket_at(X: VectorField, Y: VectorField, p: Point) -> TangentVector:
    Xv, dX = X.evaluate(p)
    Yv, dY = Y.evaluate(p)
    return dY @ Xv - dX @ Yv


def connection_apply(gamma: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``Gamma^k_ij x^i y^j``."""
    return np.einsum("kij,i,j->k", gamma, x, y)


def covariant_derivative_at(m: ManifoldSpec, X: VectorField, Y: VectorField, p: Point) -> TangentVector:
    Xv, _ = X.evaluate(p)
    Yv, dY = Y.evaluate(p)
    return dY @ Xv + connection_apply(christoffel_at(m, p), Xv, Yv)


# ---- linear algebra helpers ------------------------------------------------------


def inner(G: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    return float(x @ G @ y)


def norm(G: np.ndarray, x: np.ndarray) -> float:
    return float(np.sqrt(max(inner(G, x, x), 0.0)))


def orthonormalize(vectors: Iterable[np.ndarray], G: np.ndarray, rel_tol: float = 1e-9) -> list[np.ndarray]:
    """Modified Gram-Schmidt with respect to ``G``; dependent vectors are dropped."""
    basis: list[np.ndarray] = []
    for v in vectors:
        original = norm(G, v)
        if original == 0.0:
            continue
        w = np.array(v, dtype=float)
        for u in basis:
            w = w - inner(G, u, w) * u
        length = norm(G, w)
        if length < rel_tol * original:
            continue
        basis.append(w / length)
    return basis


def basis_matrix(vectors: Sequence[np.ndarray], dim: int) -> np.ndarray:
    """Columns are the given vectors (``dim x 0`` when empty)."""
    if not vectors:
        return np.zeros((dim, 0))
    return np.column_stack(vectors)


def orthogonal_projector(basis: np.ndarray, G: np.ndarray) -> np.ndarray:
    """G-orthogonal projector onto the span of a G-orthonormal column basis."""
    return basis @ basis.T @ G


def sample_points(m: ManifoldSpec, count: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED) -> list[Point]:
    """Seeded uniform samples from the shrunk sampling box."""
    lo, hi = m.sampling_box()
    rng = np.random.default_rng(seed)
    return list(rng.uniform(lo, hi, size=(count, m.dim)))
