from importlib.metadata import version

from .analyzer import SubmersionAnalyzer
from .errors import (
    DisagreementError,
    GeometryError,
    MissingJ,
    MixedEigenvalue,
    NotSpaceForm,
    RankDeficient,
    RankInstability,
    ValidationError,
)
from .reports import CheckReport, Status, Tolerances
from .scenarios import ScenarioSpec, builtin, dump_scenario, load_scenario

__version__ = version("semiinv-sdk")
__all__ = [
    "CheckReport",
    "DisagreementError",
    "GeometryError",
    "MissingJ",
    "MixedEigenvalue",
    "NotSpaceForm",
    "RankDeficient",
    "RankInstability",
    "ScenarioSpec",
    "Status",
    "SubmersionAnalyzer",
    "Tolerances",
    "ValidationError",
    "__version__",
    "builtin",
    "dump_scenario",
    "load_scenario",
]
