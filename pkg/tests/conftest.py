"""Shared fixtures for semiinv_sdk tests."""

from __future__ import annotations

from typing import Callable

import pytest

from semiinv_sdk import SubmersionAnalyzer, builtin
from semiinv_sdk.scenarios import fubini_study_chart, round_sphere_chart
from semiinv_sdk.geometry import ManifoldSpec


TEST_SAMPLES = 4


@pytest.fixture(scope="session")
def analyzer() -> Callable[..., SubmersionAnalyzer]:
    """Session-scoped factory of analyzers over built-in scenarios.

    Analyzers are cached per (name, samples) so the expensive jet evaluation
    happens once per test session.
    """
    cache: dict[tuple[str, int], SubmersionAnalyzer] = {}

    def make(name: str, samples: int = TEST_SAMPLES) -> SubmersionAnalyzer:
        key = (name, samples)
        if key not in cache:
            cache[key] = SubmersionAnalyzer(builtin(name), samples=samples)
        return cache[key]

    return make


@pytest.fixture(scope="session")
def fs_chart() -> ManifoldSpec:
    return fubini_study_chart(("z1", "z2"))


@pytest.fixture(scope="session")
def sphere_chart() -> ManifoldSpec:
    return round_sphere_chart(("x1", "x2"))
