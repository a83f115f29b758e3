"""Elliptic solves on the wall-bounded grid.

Both solvers use the three-point Neumann Laplacian of `mesh.laplacian` and a
banded direct factorisation, so every solve is deterministic and O(ncells).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .eos import EosSpec, FloatArray, h_double_prime, h_prime, h_prime_inverse
from .errors import CompatibilityError, DomainError, NonconvergenceError
from .errors import WallCompatibilityError
from .mesh import Mesh1D, face_gradient, gradient, integrate, integrate_faces
from .mesh import laplacian

logger = logging.getLogger(__name__)

NEWTON_TOLERANCE = 1e-10
NEWTON_MAX_ITERATIONS = 50
NEWTON_MAX_HALVINGS = 5


@dataclass(frozen=True, slots=True)
class EllipticReport:
    iterations: int
    final_residual: float
    compatibility_defect: float

    def to_log(self) -> str:
        return (
            f"iterations={self.iterations} residual={self.final_residual:.3e} "
            f"defect={self.compatibility_defect:.3e}"
        )


def _neumann_bands(ncells: int) -> FloatArray:
    """Banded storage of tridiag(-1, 2, -1) with Neumann end rows."""
    ab = np.zeros((3, ncells))
    ab[0, 1:] = -1.0
    ab[1, :] = 2.0
    ab[1, 0] = 1.0
    ab[1, -1] = 1.0
    ab[2, :-1] = -1.0
    return ab


def solve_poisson(
    mesh: Mesh1D, rhs: FloatArray, delta: float
) -> tuple[FloatArray, EllipticReport]:
    """Solve -delta phi'' = rhs with d_x phi = 0 at the walls; zero-mean phi."""
    rhs = mesh.check(rhs, "rhs")
    if not delta > 0.0:
        raise DomainError(f"delta must be positive, got {delta}")

    defect = abs(integrate(mesh, rhs))
    tolerance = 1e-10 * (integrate(mesh, np.abs(rhs)) + 1.0)
    if defect > tolerance:
        raise CompatibilityError(defect, tolerance)

    n = mesh.ncells
    if n == 1:
        return np.zeros(1), EllipticReport(0, 0.0, defect)

    centred = rhs - np.mean(rhs)
    # Pin the first cell to remove the constant null space; the dropped
    # equation holds automatically for a compatible right-hand side.
    ab = _neumann_bands(n)
    ab[1, 0] = 1.0
    ab[0, 1] = 0.0
    b = centred * mesh.dx**2
    b[0] = 0.0
    psi = solve_banded((1, 1), ab, b)
    psi -= np.mean(psi)
    phi = psi / delta

    residual = float(np.max(np.abs(-delta * laplacian(mesh, phi) - centred)))
    expected = 1e-12 * float(np.max(np.abs(rhs))) * n
    if residual > expected and residual > 1e-14:
        logger.warning(
            f"Poisson residual {residual:.3e} above expected rounding level "
            f"{expected:.3e}"
        )
    report = EllipticReport(1, residual, defect)
    logger.debug(f"poisson: {report.to_log()}")
    return phi, report


def _ae_residual(
    mesh: Mesh1D, w: FloatArray, rho: FloatArray, delta: float, eos2: EosSpec
) -> FloatArray:
    return -delta * laplacian(mesh, w) + h_prime_inverse(eos2, w) - rho


def solve_ae_elliptic(
    mesh: Mesh1D, rho: FloatArray, delta: float, eos2: EosSpec
) -> tuple[FloatArray, EllipticReport]:
    """Solve -delta Lap H2'(n) + n = rho for n by damped Newton on w = H2'(n)."""
    rho = mesh.check(rho, "rho")
    if np.any(rho <= 0.0):
        raise DomainError(f"rho must be positive, got min {float(np.min(rho))}")
    if not delta >= 0.0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    defect = abs(integrate(mesh, rho))
    if delta == 0.0:
        return rho.copy(), EllipticReport(0, 0.0, defect)

    scale = delta / mesh.dx**2
    bands = _neumann_bands(mesh.ncells) * scale
    w = np.asarray(h_prime(eos2, rho), dtype=np.float64)
    residual = _ae_residual(mesh, w, rho, delta, eos2)
    norm = float(np.max(np.abs(residual)))

    def floor_of(w_now: FloatArray) -> float:
        # rounding level of the discrete operator at this iterate
        size = 4.0 * scale * float(np.max(np.abs(w_now))) + float(np.max(rho))
        return 32.0 * np.finfo(np.float64).eps * size

    tolerance = max(NEWTON_TOLERANCE, floor_of(w))
    iterations = 0
    while norm > tolerance:
        if iterations >= NEWTON_MAX_ITERATIONS:
            report = EllipticReport(iterations, norm, defect)
            raise NonconvergenceError(
                f"Newton did not converge in {iterations} iterations "
                f"(residual {norm:.3e})",
                report,
            )
        w, residual, norm = _newton_step(
            mesh, w, rho, delta, eos2, bands, residual, norm, defect, iterations
        )
        iterations += 1
        tolerance = max(NEWTON_TOLERANCE, floor_of(w))
        logger.debug(f"ae newton iteration {iterations}: residual {norm:.3e}")

    # one extra correction once inside tolerance brings w to rounding level
    if iterations > 0:
        try:
            w_new, res_new, norm_new = _newton_step(
                mesh, w, rho, delta, eos2, bands, residual, norm, defect, iterations
            )
        except NonconvergenceError:
            pass
        else:
            if norm_new <= max(tolerance, norm):
                w, residual, norm = w_new, res_new, norm_new
        iterations += 1

    n = np.asarray(h_prime_inverse(eos2, w), dtype=np.float64)
    report = EllipticReport(iterations, norm, defect)
    logger.debug(f"ae elliptic: {report.to_log()}")
    return n, report


def _newton_step(
    mesh: Mesh1D,
    w: FloatArray,
    rho: FloatArray,
    delta: float,
    eos2: EosSpec,
    bands: FloatArray,
    residual: FloatArray,
    norm: float,
    defect: float,
    iterations: int,
) -> tuple[FloatArray, FloatArray, float]:
    # d h_prime_inverse / dw = 1 / H''(n)
    jacobian = bands.copy()
    jacobian[1, :] += 1.0 / h_double_prime(eos2, h_prime_inverse(eos2, w))
    step = solve_banded((1, 1), jacobian, -residual)

    damping = 1.0
    for _ in range(NEWTON_MAX_HALVINGS + 1):
        trial = w + damping * step
        if np.all(trial > 0.0):
            trial_residual = _ae_residual(mesh, trial, rho, delta, eos2)
            trial_norm = float(np.max(np.abs(trial_residual)))
            if trial_norm <= norm:
                return trial, trial_residual, trial_norm
        damping *= 0.5

    report = EllipticReport(iterations, norm, defect)
    raise NonconvergenceError(
        f"Newton residual grew after {NEWTON_MAX_HALVINGS} damped retries "
        f"(residual {norm:.3e})",
        report,
    )


def verify_ibp1(
    mesh: Mesh1D, f: FloatArray, varphi_bar: FloatArray, delta: float
) -> float:
    """|int varphi_bar f - int delta grad varphi_bar . grad phi| for phi solving
    -delta Lap phi = f.

    Face gradients make the discrete identity exact up to the solve.
    """
    f = mesh.check(f, "f")
    varphi_bar = mesh.check(varphi_bar, "varphi_bar")
    phi, _ = solve_poisson(mesh, f, delta)
    lhs = integrate(mesh, varphi_bar * f)
    rhs = delta * integrate_faces(
        mesh, face_gradient(mesh, varphi_bar) * face_gradient(mesh, phi)
    )
    return abs(lhs - rhs)


def wall_value_check(mesh: Mesh1D, ubar: FloatArray, name: str = "ubar") -> None:
    """Raise unless the linear extrapolation of `ubar` to each wall vanishes
    to within 10 dx max|ubar|."""
    ubar = mesh.check(ubar, name)
    if mesh.ncells < 2:
        return
    left = 1.5 * ubar[0] - 0.5 * ubar[1]
    right = 1.5 * ubar[-1] - 0.5 * ubar[-2]
    bound = 10.0 * mesh.dx * float(np.max(np.abs(ubar)))
    if max(abs(left), abs(right)) > bound:
        raise WallCompatibilityError(
            f"{name} must vanish at the walls (u . nu = 0), got wall values "
            f"{left:.3e} and {right:.3e}"
        )


def verify_ibp2(mesh: Mesh1D, f: FloatArray, ubar: FloatArray, delta: float) -> float:
    """|int f phi' ubar - int delta ubar' (phi')^2 / 2| for phi solving
    -delta Lap phi = f; a second-order defect on smooth data."""
    f = mesh.check(f, "f")
    wall_value_check(mesh, ubar)
    phi, _ = solve_poisson(mesh, f, delta)
    dphi = gradient(mesh, phi, "even")
    dubar = gradient(mesh, ubar, "odd")
    lhs = integrate(mesh, f * dphi * ubar)
    rhs = integrate(mesh, delta * dubar * 0.5 * dphi * dphi)
    return abs(lhs - rhs)


__all__ = [
    "EllipticReport",
    "solve_poisson",
    "solve_ae_elliptic",
    "verify_ibp1",
    "verify_ibp2",
    "wall_value_check",
]
