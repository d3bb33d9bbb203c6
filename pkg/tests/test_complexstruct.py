"""Tests for almost Hermitian, Kaehler and complex space form checks."""

from __future__ import annotations

import numpy as np
import pytest

from semiinv_sdk import builtin
from semiinv_sdk.complexstruct import (
    check_kaehler,
    fit_space_form_constant,
    hermitian_residual_at,
    kaehler_defect_at,
    kaehler_tensor_at,
    max_kaehler_defect_at,
    space_form_curvature,
    validate_almost_hermitian,
)
from semiinv_sdk.errors import NotSpaceForm
from semiinv_sdk.expr import Const, parse
from semiinv_sdk.geometry import ManifoldSpec, riemann_at, sample_points
from semiinv_sdk.reports import Status
from semiinv_sdk.scenarios import build_manifold

X4 = ("x1", "x2", "x3", "x4")
STANDARD_J = (
    (Const(0.0), parse("-1"), Const(0.0), Const(0.0)),
    (Const(1.0), Const(0.0), Const(0.0), Const(0.0)),
    (Const(0.0), Const(0.0), Const(0.0), parse("-1")),
    (Const(0.0), Const(0.0), Const(1.0), Const(0.0)),
)


def _diagonal(entries: list[str]) -> tuple[tuple, ...]:
    n = len(entries)
    return tuple(tuple(parse(entries[i]) if i == j else Const(0.0) for j in range(n)) for i in range(n))


@pytest.fixture(scope="module")
def conformal() -> ManifoldSpec:
    """Hermitian but not Kaehler: a conformal rescaling of flat C^2."""
    return build_manifold("total", 4, X4, _diagonal(["exp(x3)"] * 4), STANDARD_J, [(x, -1.0, 1.0) for x in X4])


@pytest.fixture(scope="module")
def flat4() -> ManifoldSpec:
    return build_manifold("total", 4, X4, _diagonal(["1"] * 4), STANDARD_J)


class TestHermitian:
    def test_fubini_study(self, fs_chart: ManifoldSpec):
        report = validate_almost_hermitian(fs_chart, sample_points(fs_chart, 4))
        assert report.status == Status.PASS

    def test_conformal_metric_is_hermitian(self, conformal: ManifoldSpec):
        assert validate_almost_hermitian(conformal, sample_points(conformal, 4)).ok

    def test_incompatible_metric(self):
        m = build_manifold(
            "total",
            2,
            ("x1", "x2"),
            _diagonal(["1", "2 + sin(x1)"]),
            ((Const(0.0), parse("-1")), (Const(1.0), Const(0.0))),
        )
        assert hermitian_residual_at(m, [0.0, 0.0]) == pytest.approx(1.0)
        assert validate_almost_hermitian(m, sample_points(m, 3)).status == Status.FAIL


class TestKaehler:
    def test_fubini_study_is_kaehler(self, fs_chart: ManifoldSpec):
        report = check_kaehler(fs_chart, sample_points(fs_chart, 4))
        assert report.status == Status.PASS
        assert report.max_residual < 1e-10

    def test_flat_is_kaehler(self, flat4: ManifoldSpec):
        assert max_kaehler_defect_at(flat4, [0.1, 0.2, 0.3, 0.4]) == 0.0

    def test_conformal_metric_is_not_kaehler(self, conformal: ManifoldSpec):
        report = check_kaehler(conformal, sample_points(conformal, 4))
        assert report.status == Status.FAIL
        assert report.max_residual > 0.1

    def test_defect_matches_tensor(self, conformal: ManifoldSpec):
        p = [0.1, -0.2, 0.3, 0.05]
        x = np.array([0.3, 1.0, -0.5, 0.2])
        y = np.array([1.0, 0.0, 0.4, -0.7])
        D = kaehler_tensor_at(conformal, p)
        assert np.allclose(np.einsum("kli,i,l->k", D, x, y), kaehler_defect_at(conformal, p, x, y))


class TestSpaceForm:
    def test_fubini_study_constant_is_four(self, fs_chart: ManifoldSpec):
        fit = fit_space_form_constant(fs_chart, sample_points(fs_chart, 4))
        assert fit.c_estimate == pytest.approx(4.0, abs=1e-6)
        assert fit.space_form
        assert all(c == pytest.approx(4.0, abs=1e-6) for c in fit.per_point)
        fit.raise_for_space_form()

    def test_flat_constant_is_zero(self, flat4: ManifoldSpec):
        fit = fit_space_form_constant(flat4, sample_points(flat4, 3))
        assert fit.c_estimate == pytest.approx(0.0, abs=1e-12)
        assert fit.space_form

    def test_product_of_spheres_is_not_a_space_form(self):
        total = builtin("product_spheres").total
        fit = fit_space_form_constant(total, sample_points(total, 4))
        assert not fit.space_form
        with pytest.raises(NotSpaceForm):
            fit.raise_for_space_form()

    def test_model_matches_curvature(self, fs_chart: ManifoldSpec):
        p = [0.3, -0.4]
        x, y, z = np.array([1.0, 0.2]), np.array([-0.3, 0.8]), np.array([0.5, 0.5])
        assert np.allclose(space_form_curvature(4.0, fs_chart, p, x, y, z), riemann_at(fs_chart, p, x, y, z))
