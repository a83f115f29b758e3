"""Uniform cell-centred grid, plasma states and wall-aware discrete calculus."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Tuple

import numpy as np

from .eos import FloatArray
from .errors import DomainError, VacuumError
from .tables import render_table

Parity = Literal["even", "odd"]

DEFAULT_DENSITY_FLOOR = 1e-12


@dataclass(frozen=True, slots=True)
class Mesh1D:
    """Cells [j dx, (j+1) dx] on [0, L]; walls at both ends."""

    length: float
    ncells: int

    def __post_init__(self) -> None:
        if not self.length > 0.0:
            raise DomainError(f"length must be positive, got {self.length}")
        if self.ncells < 1:
            raise DomainError(f"ncells must be positive, got {self.ncells}")

    @property
    def dx(self) -> float:
        return self.length / self.ncells

    @property
    def centers(self) -> FloatArray:
        return (np.arange(self.ncells, dtype=np.float64) + 0.5) * self.dx

    def check(self, values: FloatArray, name: str = "field") -> FloatArray:
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (self.ncells,):
            raise ValueError(
                f"{name} must have length {self.ncells}, got shape {arr.shape}"
            )
        return arr


@dataclass(frozen=True)
class SpeciesState:
    density: FloatArray
    momentum: FloatArray

    def __post_init__(self) -> None:
        if self.density.shape != self.momentum.shape:
            raise ValueError(
                "density and momentum must have the same shape, got "
                f"{self.density.shape} and {self.momentum.shape}"
            )


@dataclass(frozen=True)
class PlasmaState:
    """Bipolar state: ions (rho, m), electrons (n, mu), potential phi.

    `delta` may be 0 only for quasi-neutral initial data; the bipolar stepper
    rejects it.
    """

    ion: SpeciesState
    electron: SpeciesState
    phi: FloatArray
    eps: float
    delta: float
    time: float = 0.0

    def __post_init__(self) -> None:
        if not self.eps > 0.0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if not self.delta >= 0.0:
            raise DomainError(f"delta must be non-negative, got {self.delta}")


@dataclass(frozen=True)
class AdiabaticState:
    """Adiabatic-electron state: ions (rho, m) and the slaved density n."""

    ion: SpeciesState
    n: FloatArray
    delta: float
    time: float = 0.0

    def __post_init__(self) -> None:
        if not self.delta >= 0.0:
            raise DomainError(f"delta must be non-negative, got {self.delta}")


@dataclass(frozen=True)
class EulerState:
    ion: SpeciesState
    time: float = 0.0


@dataclass(frozen=True)
class LiftedReference:
    """A limit-system solution written in bipolar form.

    `dphibar_dt` is the time derivative of phibar used by the lift (None when
    the lift was built from a single state), `dt` the spacing it was taken
    over, and `continuity_defect` the integral of |d_t nbar + d_x(nbar vbar)|
    when the lift can measure it. `system` names the limit system lifted
    ("ae" or "euler").
    """

    rhobar: FloatArray
    ubar: FloatArray
    nbar: FloatArray
    vbar: FloatArray
    phibar: FloatArray
    time: float
    dphibar_dt: Optional[FloatArray] = None
    dt: Optional[float] = None
    continuity_defect: Optional[float] = None
    system: str = "ae"
    vacuum_bound: float = field(default=DEFAULT_DENSITY_FLOOR, repr=False)

    def __post_init__(self) -> None:
        for name in ("rhobar", "nbar"):
            values = getattr(self, name)
            if np.any(values < self.vacuum_bound):
                raise VacuumError(
                    f"{name} must stay above {self.vacuum_bound:g}, "
                    f"got min {float(np.min(values)):.3e}"
                )


def _ghosts(values: FloatArray, parity: Parity) -> Tuple[float, float]:
    if parity == "even":
        return float(values[0]), float(values[-1])
    if parity == "odd":
        return -float(values[0]), -float(values[-1])
    raise ValueError(f"Unknown parity '{parity}'")


def pad_wall(values: FloatArray, parity: Parity = "even") -> FloatArray:
    """Append one mirror ghost cell on each side.

    Even parity copies the boundary value (homogeneous Neumann); odd parity
    reflects it, which makes the wall value of a normal component zero.
    """
    left, right = _ghosts(values, parity)
    return np.concatenate(([left], values, [right]))


def gradient(mesh: Mesh1D, values: FloatArray, parity: Parity = "even") -> FloatArray:
    """Central difference at cell centres with mirror ghosts."""
    values = mesh.check(values)
    padded = pad_wall(values, parity)
    return (padded[2:] - padded[:-2]) / (2.0 * mesh.dx)


def laplacian(mesh: Mesh1D, values: FloatArray) -> FloatArray:
    """Three-point Laplacian with homogeneous Neumann walls."""
    values = mesh.check(values)
    padded = pad_wall(values, "even")
    return (padded[2:] - 2.0 * values + padded[:-2]) / mesh.dx**2


def face_gradient(mesh: Mesh1D, values: FloatArray) -> FloatArray:
    """Differences across the ncells - 1 interior faces.

    The wall faces carry zero gradient and are omitted.
    """
    values = mesh.check(values)
    return np.diff(values) / mesh.dx


def integrate(mesh: Mesh1D, values: FloatArray) -> float:
    """Midpoint rule over the cells."""
    values = mesh.check(values)
    return float(mesh.dx * np.sum(values))


def integrate_faces(mesh: Mesh1D, values: FloatArray) -> float:
    """Midpoint rule over the interior faces (wall faces contribute zero)."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (mesh.ncells - 1,):
        raise ValueError(
            f"face field must have length {mesh.ncells - 1}, got shape {values.shape}"
        )
    return float(mesh.dx * np.sum(values))


def dirichlet_energy(mesh: Mesh1D, values: FloatArray, weight: float = 1.0) -> float:
    """weight * 1/2 * integral of |d_x values|^2 with face gradients."""
    grad = face_gradient(mesh, values)
    return 0.5 * weight * integrate_faces(mesh, grad * grad)


def primitive_from_conserved(
    species: SpeciesState, floor: float = DEFAULT_DENSITY_FLOOR
) -> Tuple[FloatArray, int]:
    """Velocity m / max(rho, floor) and the number of cells that hit the floor."""
    if not floor > 0.0:
        raise DomainError(f"floor must be positive, got {floor}")
    floored = species.density < floor
    velocity = species.momentum / np.maximum(species.density, floor)
    return velocity, int(np.count_nonzero(floored))


def format_field_dump(
    mesh: Mesh1D,
    rho: FloatArray,
    u: FloatArray,
    n: FloatArray,
    v: FloatArray,
    phi: FloatArray,
    header: Tuple[str, ...] = (),
) -> str:
    """CSV with columns x, rho, u, n, v, phi."""
    columns = ("x", "rho", "u", "n", "v", "phi")
    fields = [mesh.centers] + [mesh.check(f) for f in (rho, u, n, v, phi)]
    return render_table(columns, np.column_stack(fields), header)


__all__ = [
    "Mesh1D",
    "SpeciesState",
    "PlasmaState",
    "AdiabaticState",
    "EulerState",
    "LiftedReference",
    "DEFAULT_DENSITY_FLOOR",
    "pad_wall",
    "gradient",
    "laplacian",
    "face_gradient",
    "integrate",
    "integrate_faces",
    "dirichlet_energy",
    "primitive_from_conserved",
    "format_field_dump",
]
