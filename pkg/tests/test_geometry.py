"""Tests for metrics, Levi-Civita connection and curvature on charts."""

from __future__ import annotations

import math

import numpy as np
import pytest

from semiinv_sdk.errors import DegenerateMetric, MissingJ
from semiinv_sdk.expr import Const, parse
from semiinv_sdk.geometry import (
    ExpressionField,
    ManifoldSpec,
    chart_jets,
    christoffel_at,
    coordinate_field,
    covariant_derivative_at,
    inner,
    lie_bracket_at,
    metric_at,
    metric_derivatives_at,
    orthonormalize,
    riemann_at,
    riemann_tensor,
    sample_points,
    structure_at,
)
from semiinv_sdk.scenarios import REGISTRY, build_manifold, builtin

COORDS3 = ("x1", "x2", "x3")


@pytest.fixture(scope="module")
def warped() -> ManifoldSpec:
    """A dense 3D metric with no special structure."""
    rows = [
        ["2 + x2^2", "0.3*sin(x3)", "0"],
        ["0.3*sin(x3)", "exp(x1)", "0.2*x1"],
        ["0", "0.2*x1", "1 + x1^2 + x3^2"],
    ]
    metric = tuple(tuple(parse(e) for e in row) for row in rows)
    return build_manifold("total", 3, COORDS3, metric, domain=[(x, -0.5, 0.5) for x in COORDS3])


def _sectional(m: ManifoldSpec, p, x, y) -> float:
    G = metric_at(m, p)
    num = inner(G, riemann_at(m, p, x, y, y), x)
    return num / (inner(G, x, x) * inner(G, y, y) - inner(G, x, y) ** 2)


def _fd_christoffel_grad(m: ManifoldSpec, p: np.ndarray, h: float = 1e-4) -> np.ndarray:
    n = m.dim
    out = np.empty((n, n, n, n))
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        out[..., c] = (christoffel_at(m, p + e) - christoffel_at(m, p - e)) / (2 * h)
    return out


class TestMetric:
    def test_fubini_study_at_origin(self, fs_chart: ManifoldSpec):
        assert np.allclose(metric_at(fs_chart, [0.0, 0.0]), np.eye(2))

    def test_sphere_metric(self, sphere_chart: ManifoldSpec):
        G = metric_at(sphere_chart, [math.pi / 2, 0.3])
        assert np.allclose(G, np.eye(2))
        G = metric_at(sphere_chart, [math.pi / 6, 0.3])
        assert G[1, 1] == pytest.approx(0.25)

    def test_symmetric(self, warped: ManifoldSpec):
        G, dG, d2G = metric_derivatives_at(warped, [0.1, -0.2, 0.3])
        assert np.allclose(G, G.T)
        assert np.allclose(dG, dG.transpose(1, 0, 2))
        assert np.allclose(d2G, d2G.transpose(0, 1, 3, 2))

    def test_degenerate_metric(self):
        m = build_manifold("total", 2, ("x1", "x2"), ((Const(1.0), Const(0.0)), (Const(0.0), parse("x1"))))
        with pytest.raises(DegenerateMetric) as info:
            metric_at(m, [-1.0, 0.0])
        assert info.value.eigenvalue == pytest.approx(-1.0)

    def test_structure_required(self, sphere_chart: ManifoldSpec):
        with pytest.raises(MissingJ):
            structure_at(sphere_chart, [1.0, 0.0])

    def test_fubini_study_structure(self, fs_chart: ManifoldSpec):
        J = structure_at(fs_chart, [0.2, 0.1])
        assert np.allclose(J @ J, -np.eye(2))


class TestConnection:
    def test_sphere_christoffels(self, sphere_chart: ManifoldSpec):
        x = 1.0
        gamma = christoffel_at(sphere_chart, [x, 0.4])
        assert gamma[0, 1, 1] == pytest.approx(-math.sin(x) * math.cos(x))
        assert gamma[1, 0, 1] == pytest.approx(math.cos(x) / math.sin(x))
        assert gamma[1, 1, 0] == pytest.approx(math.cos(x) / math.sin(x))
        assert gamma[0, 0, 0] == pytest.approx(0.0)

    def test_torsion_free(self, warped: ManifoldSpec):
        gamma = christoffel_at(warped, [0.2, 0.1, -0.3])
        assert np.allclose(gamma, gamma.transpose(0, 2, 1))

    def test_metric_compatible(self, warped: ManifoldSpec):
        p = [0.2, 0.1, -0.3]
        G, dG, _ = metric_derivatives_at(warped, p)
        gamma = christoffel_at(warped, p)
        # d_k g_ij = Gamma^l_ki g_lj + Gamma^l_kj g_il
        expected = np.einsum("lki,lj->ijk", gamma, G) + np.einsum("lkj,il->ijk", gamma, G)
        assert np.allclose(dG, expected)

    def test_bracket_of_coordinate_combinations(self):
        X = ExpressionField((parse("x2"), Const(0.0)), ("x1", "x2"))
        Y = coordinate_field(1, 2)
        assert np.allclose(lie_bracket_at(X, Y, [0.5, 0.7]), [-1.0, 0.0])

    def test_covariant_derivative_is_torsion_free(self, sphere_chart: ManifoldSpec):
        coords = sphere_chart.coords
        X = ExpressionField((parse("x2"), parse("sin(x1)")), coords)
        Y = ExpressionField((parse("x1 * x2"), parse("1 + x1")), coords)
        for p in sample_points(sphere_chart, 16, seed=3):
            torsion = covariant_derivative_at(sphere_chart, X, Y, p) - covariant_derivative_at(sphere_chart, Y, X, p)
            assert np.allclose(torsion, lie_bracket_at(X, Y, p))

    @pytest.mark.parametrize("name", REGISTRY)
    def test_levi_civita_on_builtin_charts(self, name: str):
        spec = builtin(name)
        for p in sample_points(spec.total, 16, spec.seed):
            G, dG, _ = metric_derivatives_at(spec.total, p)
            gamma = christoffel_at(spec.total, p)
            assert np.allclose(gamma, gamma.transpose(0, 2, 1), atol=1e-12)
            expected = np.einsum("lki,lj->ijk", gamma, G) + np.einsum("lkj,il->ijk", gamma, G)
            assert np.allclose(dG, expected, atol=1e-8)


class TestCurvature:
    def test_sphere_has_curvature_one(self, sphere_chart: ManifoldSpec):
        for p in sample_points(sphere_chart, 3, seed=1):
            assert _sectional(sphere_chart, p, np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)

    def test_fubini_study_has_curvature_four(self, fs_chart: ManifoldSpec):
        for p in sample_points(fs_chart, 3, seed=2):
            K = _sectional(fs_chart, p, np.array([1.0, 0.3]), np.array([-0.2, 1.0]))
            assert K == pytest.approx(4.0)

    def test_flat_chart_is_flat(self):
        m = build_manifold("total", 2, ("x1", "x2"), ((Const(1.0), Const(0.0)), (Const(0.0), Const(1.0))))
        assert not chart_jets(m, [0.3, 0.4]).riemann().any()

    def test_matches_finite_differences(self, warped: ManifoldSpec):
        p = np.array([0.15, -0.25, 0.35])
        cj = chart_jets(warped, p)
        assert np.allclose(cj.christoffel, christoffel_at(warped, p))
        assert np.allclose(cj.christoffel_grad, _fd_christoffel_grad(warped, p), atol=1e-6)
        fd = riemann_tensor(cj.christoffel, _fd_christoffel_grad(warped, p))
        assert np.allclose(cj.riemann(), fd, atol=1e-5)

    def test_symmetries(self, warped: ManifoldSpec):
        cj = chart_jets(warped, [0.1, 0.2, -0.1])
        low = np.einsum("al,lkij->akij", cj.metric, cj.riemann())
        assert np.allclose(low, -low.transpose(0, 1, 3, 2))
        assert np.allclose(low, -low.transpose(1, 0, 2, 3))
        assert np.allclose(low, low.transpose(2, 3, 0, 1))
        bianchi = low + low.transpose(0, 2, 3, 1) + low.transpose(0, 3, 1, 2)
        assert np.allclose(bianchi, 0.0)


class TestHelpers:
    def test_orthonormalize_drops_dependent_vectors(self):
        G = np.diag([1.0, 4.0])
        basis = orthonormalize([np.array([1.0, 1.0]), np.array([2.0, 2.0]), np.array([0.0, 1.0])], G)
        assert len(basis) == 2
        gram = np.array([[inner(G, u, v) for v in basis] for u in basis])
        assert np.allclose(gram, np.eye(2))

    def test_sample_points_are_seeded(self, fs_chart: ManifoldSpec):
        a = sample_points(fs_chart, 5, seed=7)
        b = sample_points(fs_chart, 5, seed=7)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        lo, hi = fs_chart.sampling_box()
        assert all(((lo <= x) & (x <= hi)).all() for x in a)
        assert hi[0] == pytest.approx(0.81)
