from __future__ import annotations

from typing import TYPE_CHECKING, List, Sequence

if TYPE_CHECKING:  # pragma: no cover
    from .poisson import EllipticReport


class PlasmaLabError(Exception):
    """Base class for every error raised by plasmalab."""


class DomainError(PlasmaLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularDerivativeError(DomainError):
    """A derivative is requested where it is unbounded."""


class CompatibilityError(DomainError):
    """The Neumann problem has no solution for this right-hand side."""

    def __init__(self, defect: float, tolerance: float):
        super().__init__(
            f"Neumann compatibility violated: |integral of rhs| = {defect:.3e} "
            f"exceeds {tolerance:.3e}"
        )
        self.defect = defect
        self.tolerance = tolerance


class WallCompatibilityError(DomainError):
    """A velocity field does not vanish at the walls."""


class VacuumError(PlasmaLabError, ValueError):
    """A density dropped below the bound that keeps it away from vacuum."""


class NonconvergenceError(PlasmaLabError, RuntimeError):
    def __init__(self, message: str, report: "EllipticReport"):
        super().__init__(message)
        self.report = report


class TimestepCollapseError(PlasmaLabError, RuntimeError):
    def __init__(self, dt: float):
        super().__init__(f"time step collapsed to {dt:.3e}")
        self.dt = dt


class HistoryAlignmentError(PlasmaLabError, ValueError):
    """Two histories are not sampled at the same times."""


class ConfigError(PlasmaLabError, ValueError):
    """A run configuration failed validation.

    All violations found in one pass are kept in `violations`.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations))
