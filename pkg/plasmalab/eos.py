"""Power-law equations of state.

Each species carries a pressure P(r) = k r^gamma and the internal energy
H(r) = k r^gamma / (gamma - 1) tied to it by r H''(r) = P'(r).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from .errors import DomainError, SingularDerivativeError

FloatArray = npt.NDArray[np.float64]
Density = Union[float, FloatArray]

RelativeKind = Literal["internal_energy", "pressure"]


@dataclass(frozen=True, slots=True)
class EosSpec:
    gamma: float
    k: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma > 1.0:
            raise DomainError(f"gamma must be greater than 1, got {self.gamma}")
        if not self.k > 0.0:
            raise DomainError(f"k must be positive, got {self.k}")

    @property
    def k_hat(self) -> float:
        """Constant of the bound |r P''(r)| <= k_hat P'(r); equality here."""
        return self.gamma - 1.0

    def scaled(self, factor: float) -> "EosSpec":
        """Same exponent, pressure multiplied by `factor`."""
        return EosSpec(self.gamma, self.k * factor)


@dataclass(frozen=True, slots=True)
class EosPair:
    """Ion and electron closures of one plasma."""

    ion: EosSpec
    electron: EosSpec

    @property
    def combined(self) -> Tuple[EosSpec, EosSpec]:
        """Pressure P1 + P2 acting on a single density (Euler limit)."""
        return (self.ion, self.electron)


EosLike = Union[EosSpec, Sequence[EosSpec]]


def _nonnegative(r: Density, name: str = "density") -> FloatArray:
    arr = np.asarray(r, dtype=np.float64)
    if np.any(arr < 0.0):
        raise DomainError(f"{name} must be non-negative, got min {float(arr.min())}")
    return arr


def _positive(r: Density, name: str = "density") -> FloatArray:
    arr = np.asarray(r, dtype=np.float64)
    if np.any(arr <= 0.0):
        raise DomainError(f"{name} must be positive, got min {float(arr.min())}")
    return arr


def _as_specs(eos: EosLike) -> Tuple[EosSpec, ...]:
    if isinstance(eos, EosSpec):
        return (eos,)
    return tuple(eos)


def pressure(spec: EosSpec, r: Density) -> FloatArray:
    r = _nonnegative(r)
    return spec.k * r**spec.gamma


def pressure_prime(spec: EosSpec, r: Density) -> FloatArray:
    r = _nonnegative(r)
    return spec.k * spec.gamma * r ** (spec.gamma - 1.0)


def pressure_double_prime(spec: EosSpec, r: Density) -> FloatArray:
    r = _nonnegative(r)
    if spec.gamma < 2.0 and np.any(r == 0.0):
        raise SingularDerivativeError(
            f"P'' is unbounded at r = 0 for gamma = {spec.gamma} < 2"
        )
    return spec.k * spec.gamma * (spec.gamma - 1.0) * r ** (spec.gamma - 2.0)


def internal_energy(spec: EosSpec, r: Density) -> FloatArray:
    r = _nonnegative(r)
    return spec.k * r**spec.gamma / (spec.gamma - 1.0)


def h_prime(spec: EosSpec, r: Density) -> FloatArray:
    r = _nonnegative(r)
    return spec.k * spec.gamma * r ** (spec.gamma - 1.0) / (spec.gamma - 1.0)


def h_double_prime(spec: EosSpec, r: Density) -> FloatArray:
    r = _nonnegative(r)
    if spec.gamma < 2.0 and np.any(r == 0.0):
        raise SingularDerivativeError(
            f"H'' is unbounded at r = 0 for gamma = {spec.gamma} < 2; "
            "floor densities first"
        )
    return spec.k * spec.gamma * r ** (spec.gamma - 2.0)


def h_prime_inverse(spec: EosSpec, w: Density) -> FloatArray:
    """Density r with H'(r) = w; H' maps (0, inf) onto (0, inf)."""
    w = _positive(w, "w")
    base = w * (spec.gamma - 1.0) / (spec.k * spec.gamma)
    return base ** (1.0 / (spec.gamma - 1.0))


def relative_quantity(
    kind: RelativeKind, spec: EosSpec, r: Density, rbar: Density
) -> FloatArray:
    """F(r | rbar) = F(r) - F(rbar) - F'(rbar) (r - rbar).

    `kind` selects F among the internal energy H and the pressure P.
    """
    r = _nonnegative(r)
    rbar = _positive(rbar, "reference density")
    if kind == "internal_energy":
        f, df = internal_energy, h_prime
    elif kind == "pressure":
        f, df = pressure, pressure_prime
    else:
        raise ValueError(f"Unknown relative quantity '{kind}'")
    return f(spec, r) - f(spec, rbar) - df(spec, rbar) * (r - rbar)


def total_pressure(eos: EosLike, r: Density) -> FloatArray:
    specs = _as_specs(eos)
    total = pressure(specs[0], r)
    for spec in specs[1:]:
        total = total + pressure(spec, r)
    return total


def sound_speed(eos: EosLike, r: Density) -> FloatArray:
    """sqrt of the summed P' over the given closures."""
    specs = _as_specs(eos)
    c2 = pressure_prime(specs[0], r)
    for spec in specs[1:]:
        c2 = c2 + pressure_prime(spec, r)
    return np.sqrt(c2)


__all__ = [
    "EosSpec",
    "EosPair",
    "EosLike",
    "FloatArray",
    "pressure",
    "pressure_prime",
    "pressure_double_prime",
    "internal_energy",
    "h_prime",
    "h_double_prime",
    "h_prime_inverse",
    "relative_quantity",
    "total_pressure",
    "sound_speed",
]
