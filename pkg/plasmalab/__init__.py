__version__ = "0.1.0"

from .config import RunConfig, parse_config
from .eos import EosPair, EosSpec
from .errors import (
    CompatibilityError,
    ConfigError,
    DomainError,
    HistoryAlignmentError,
    NonconvergenceError,
    PlasmaLabError,
    TimestepCollapseError,
    VacuumError,
    WallCompatibilityError,
)
from .mesh import AdiabaticState, EulerState, Mesh1D, PlasmaState, SpeciesState

__all__ = [
    "RunConfig",
    "parse_config",
    "EosSpec",
    "EosPair",
    "Mesh1D",
    "SpeciesState",
    "PlasmaState",
    "AdiabaticState",
    "EulerState",
    "PlasmaLabError",
    "DomainError",
    "CompatibilityError",
    "WallCompatibilityError",
    "VacuumError",
    "NonconvergenceError",
    "TimestepCollapseError",
    "HistoryAlignmentError",
    "ConfigError",
    "__version__",
]
