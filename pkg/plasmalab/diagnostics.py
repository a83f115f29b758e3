"""Energies, lifted references, relative energy and the identities around it."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .eos import EosPair, FloatArray, h_prime, internal_energy, relative_quantity
from .errors import DomainError, HistoryAlignmentError
from .mesh import DEFAULT_DENSITY_FLOOR, AdiabaticState, EulerState, LiftedReference
from .mesh import Mesh1D, PlasmaState, dirichlet_energy, gradient, integrate
from .mesh import laplacian, primitive_from_conserved
from .tables import render_table

logger = logging.getLogger(__name__)

AnyState = Union[PlasmaState, AdiabaticState, EulerState]

ENERGY_COLUMNS = ("t", "kin_ion", "int_ion", "kin_ele", "int_ele", "field", "total")
RELENERGY_COLUMNS = (
    "t",
    "Phi",
    "rk_ion",
    "ri_ion",
    "rk_ele",
    "ri_ele",
    "field",
    "sig1",
    "sig2",
    "sig3",
    "sigstar",
)


@dataclass(frozen=True, slots=True)
class EnergyBreakdown:
    kin_ion: float
    int_ion: float
    kin_ele: float = 0.0
    int_ele: float = 0.0
    field: float = 0.0

    @property
    def total(self) -> float:
        return self.kin_ion + self.int_ion + self.kin_ele + self.int_ele + self.field

    def as_row(self, t: float) -> Tuple[float, ...]:
        return (
            t,
            self.kin_ion,
            self.int_ion,
            self.kin_ele,
            self.int_ele,
            self.field,
            self.total,
        )


def _kinetic(
    mesh: Mesh1D, density: FloatArray, momentum: FloatArray, floor: float
) -> float:
    velocity = momentum / np.maximum(density, floor)
    return integrate(mesh, 0.5 * np.maximum(density, 0.0) * velocity**2)


def total_energy(
    mesh: Mesh1D,
    state: AnyState,
    eos: EosPair,
    floor: float = DEFAULT_DENSITY_FLOOR,
) -> EnergyBreakdown:
    """Total energy of a bipolar, adiabatic-electron or Euler state.

    Field terms use face gradients. The adiabatic field term is
    delta/2 |d_x H2'(n)|^2.
    """
    rho = np.maximum(state.ion.density, 0.0)
    kin_ion = _kinetic(mesh, rho, state.ion.momentum, floor)
    int_ion = integrate(mesh, internal_energy(eos.ion, rho))
    if isinstance(state, PlasmaState):
        n = np.maximum(state.electron.density, 0.0)
        return EnergyBreakdown(
            kin_ion,
            int_ion,
            state.eps * _kinetic(mesh, n, state.electron.momentum, floor),
            integrate(mesh, internal_energy(eos.electron, n)),
            dirichlet_energy(mesh, state.phi, state.delta),
        )
    if isinstance(state, AdiabaticState):
        n = np.maximum(state.n, 0.0)
        return EnergyBreakdown(
            kin_ion,
            int_ion,
            0.0,
            integrate(mesh, internal_energy(eos.electron, n)),
            dirichlet_energy(mesh, h_prime(eos.electron, n), state.delta),
        )
    return EnergyBreakdown(
        kin_ion, int_ion, 0.0, integrate(mesh, internal_energy(eos.electron, rho))
    )


def _velocity(state: Union[AdiabaticState, EulerState], floor: float) -> FloatArray:
    velocity, _ = primitive_from_conserved(state.ion, floor)
    return velocity


def _spacing(time: float, other: float) -> float:
    if time == other:
        raise HistoryAlignmentError(f"neighbouring state shares the time {time}")
    return time - other


def lift_ae_solution(
    mesh: Mesh1D,
    current: AdiabaticState,
    eos: EosPair,
    neighbour: Optional[AdiabaticState] = None,
    floor: float = DEFAULT_DENSITY_FLOOR,
) -> LiftedReference:
    """Write an adiabatic-electron state in bipolar form.

    phibar = H2'(nbar) and vbar = (rhobar ubar - delta d_x d_t phibar) / nbar,
    with d_t phibar the difference quotient against `neighbour`, a state one
    reference step earlier or later; None treats the reference as steady.
    """
    rhobar = current.ion.density
    nbar = current.n
    ubar = _velocity(current, floor)
    phibar = h_prime(eos.electron, nbar)
    flux = current.ion.momentum.copy()
    dphibar_dt: Optional[FloatArray] = None
    dt: Optional[float] = None
    defect: Optional[float] = None
    if neighbour is not None:
        dt = _spacing(current.time, neighbour.time)
        dphibar_dt = (phibar - h_prime(eos.electron, neighbour.n)) / dt
        flux = flux - current.delta * gradient(mesh, dphibar_dt, "even")
        dn_dt = (nbar - neighbour.n) / dt
        defect = integrate(mesh, np.abs(dn_dt + gradient(mesh, flux, "odd")))
        logger.debug(f"ae lift at t={current.time:.6g}: continuity defect {defect:.3e}")
    vbar = flux / np.maximum(nbar, floor)
    return LiftedReference(
        rhobar=rhobar,
        ubar=ubar,
        nbar=nbar,
        vbar=vbar,
        phibar=phibar,
        time=current.time,
        dphibar_dt=dphibar_dt,
        dt=dt,
        continuity_defect=defect,
        system="ae",
        vacuum_bound=floor,
    )


def lift_euler_solution(
    mesh: Mesh1D,
    current: EulerState,
    eos: EosPair,
    neighbour: Optional[EulerState] = None,
    floor: float = DEFAULT_DENSITY_FLOOR,
) -> LiftedReference:
    """nbar = rhobar, vbar = ubar, phibar = H2'(rhobar)."""
    rhobar = current.ion.density
    ubar = _velocity(current, floor)
    phibar = h_prime(eos.electron, np.maximum(rhobar, 0.0))
    dphibar_dt: Optional[FloatArray] = None
    dt: Optional[float] = None
    if neighbour is not None:
        dt = _spacing(current.time, neighbour.time)
        old = h_prime(eos.electron, np.maximum(neighbour.ion.density, 0.0))
        dphibar_dt = (phibar - old) / dt
    return LiftedReference(
        rhobar=rhobar,
        ubar=ubar,
        nbar=rhobar.copy(),
        vbar=ubar.copy(),
        phibar=phibar,
        time=current.time,
        dphibar_dt=dphibar_dt,
        dt=dt,
        system="euler",
        vacuum_bound=floor,
    )


@dataclass(frozen=True, slots=True)
class RelativeEnergy:
    rk_ion: float
    ri_ion: float
    rk_ele: float
    ri_ele: float
    field: float

    @property
    def phi(self) -> float:
        return self.rk_ion + self.ri_ion + self.rk_ele + self.ri_ele + self.field

    def components(self) -> Tuple[float, float, float, float, float]:
        return (self.rk_ion, self.ri_ion, self.rk_ele, self.ri_ele, self.field)


def relative_energy(
    mesh: Mesh1D,
    state: PlasmaState,
    ref: LiftedReference,
    eos: EosPair,
    floor: float = DEFAULT_DENSITY_FLOOR,
) -> RelativeEnergy:
    """Phi and its five non-negative parts for `state` against `ref`."""
    u, _ = primitive_from_conserved(state.ion, floor)
    v, _ = primitive_from_conserved(state.electron, floor)
    rho = np.maximum(state.ion.density, 0.0)
    n = np.maximum(state.electron.density, 0.0)
    return RelativeEnergy(
        rk_ion=integrate(mesh, 0.5 * rho * (u - ref.ubar) ** 2),
        ri_ion=integrate(
            mesh, relative_quantity("internal_energy", eos.ion, rho, ref.rhobar)
        ),
        rk_ele=state.eps * integrate(mesh, 0.5 * n * (v - ref.vbar) ** 2),
        ri_ele=integrate(
            mesh, relative_quantity("internal_energy", eos.electron, n, ref.nbar)
        ),
        field=dirichlet_energy(mesh, state.phi - ref.phibar, state.delta),
    )


@dataclass(frozen=True, slots=True)
class SigmaTerms:
    """Integrated right-hand-side terms of the relative energy balance.

    `sig4`..`sig6` are non-zero only against an Euler reference, where they
    replace `sigstar`.
    """

    sig1: float
    sig2: float
    sig3: float
    sigstar: float
    sig4: float = 0.0
    sig5: float = 0.0
    sig6: float = 0.0
    system: str = "ae"

    @property
    def star_column(self) -> float:
        if self.system == "euler":
            return self.sig4 + self.sig5 + self.sig6
        return self.sigstar

    @property
    def total(self) -> float:
        return self.sig1 + self.sig2 + self.sig3 + self.star_column


def sigma_terms(
    mesh: Mesh1D,
    state: PlasmaState,
    ref: LiftedReference,
    eos: EosPair,
    ebar: Optional[FloatArray] = None,
    floor: float = DEFAULT_DENSITY_FLOOR,
) -> SigmaTerms:
    u, _ = primitive_from_conserved(state.ion, floor)
    v, _ = primitive_from_conserved(state.electron, floor)
    rho = np.maximum(state.ion.density, 0.0)
    n = np.maximum(state.electron.density, 0.0)
    eps, delta = state.eps, state.delta
    dubar = gradient(mesh, ref.ubar, "odd")
    dvbar = gradient(mesh, ref.vbar, "odd")

    sig1 = integrate(
        mesh, -rho * dubar * (u - ref.ubar) ** 2 - eps * n * dvbar * (v - ref.vbar) ** 2
    )
    sig2 = integrate(
        mesh,
        -dubar * relative_quantity("pressure", eos.ion, rho, ref.rhobar)
        - dvbar * relative_quantity("pressure", eos.electron, n, ref.nbar),
    )
    dphi_rel = gradient(mesh, state.phi - ref.phibar, "even")
    sigstar = integrate(
        mesh, ((rho - ref.rhobar) * ref.ubar - (n - ref.nbar) * ref.vbar) * dphi_rel
    )
    sig3 = 0.0
    if ebar is not None:
        sig3 = -integrate(mesh, eps * (n / ref.nbar) * ebar * (v - ref.vbar))

    if ref.system != "euler":
        return SigmaTerms(sig1, sig2, sig3, sigstar)

    dphibar_dt = np.zeros(mesh.ncells) if ref.dphibar_dt is None else ref.dphibar_dt
    charge = rho - n
    sig4 = -integrate(mesh, delta * dphibar_dt * laplacian(mesh, ref.phibar))
    sig5 = -integrate(
        mesh, (dphibar_dt + gradient(mesh, ref.phibar, "even") * ref.ubar) * charge
    )
    sig6 = integrate(mesh, charge * gradient(mesh, state.phi, "even") * ref.ubar)
    return SigmaTerms(sig1, sig2, sig3, sigstar, sig4, sig5, sig6, system="euler")


@dataclass(frozen=True, slots=True)
class ApproxResidual:
    ebar: FloatArray
    ebar0: Optional[FloatArray]

    @property
    def ebar_sup(self) -> float:
        return float(np.max(np.abs(self.ebar)))

    @property
    def ebar0_sup(self) -> Optional[float]:
        return None if self.ebar0 is None else float(np.max(np.abs(self.ebar0)))

    def ebar_l1(self, mesh: Mesh1D) -> float:
        return integrate(mesh, np.abs(self.ebar))

    def ebar0_l1(self, mesh: Mesh1D) -> Optional[float]:
        return None if self.ebar0 is None else integrate(mesh, np.abs(self.ebar0))


def approx_residual(
    mesh: Mesh1D,
    ref: LiftedReference,
    neighbour: Optional[LiftedReference] = None,
) -> ApproxResidual:
    """ebar = nbar d_t vbar + nbar vbar d_x vbar, and ebar0 = -Lap phibar for
    an Euler reference.

    d_t vbar is the difference quotient against `neighbour` (earlier or later);
    without one the reference is treated as steady.
    """
    dvbar_dt = np.zeros(mesh.ncells)
    if neighbour is not None:
        dvbar_dt = (ref.vbar - neighbour.vbar) / _spacing(ref.time, neighbour.time)
    ebar = ref.nbar * dvbar_dt + ref.nbar * ref.vbar * gradient(mesh, ref.vbar, "odd")
    ebar0 = -laplacian(mesh, ref.phibar) if ref.system == "euler" else None
    return ApproxResidual(ebar, ebar0)


@dataclass
class RelEnergySeries:
    """Sampled Phi, its parts and the Sigma terms of one run."""

    times: List[float] = dataclasses.field(default_factory=list)
    parts: List[RelativeEnergy] = dataclasses.field(default_factory=list)
    sigmas: List[SigmaTerms] = dataclasses.field(default_factory=list)

    @property
    def phi(self) -> FloatArray:
        return np.array([p.phi for p in self.parts], dtype=np.float64)

    @property
    def rhs(self) -> FloatArray:
        return np.array([s.total for s in self.sigmas], dtype=np.float64)

    def append(self, t: float, part: RelativeEnergy, sigma: SigmaTerms) -> None:
        self.times.append(t)
        self.parts.append(part)
        self.sigmas.append(sigma)

    def to_csv(self, header: Sequence[str] = ()) -> str:
        rows = [
            (t, p.phi, *p.components(), s.sig1, s.sig2, s.sig3, s.star_column)
            for t, p, s in zip(self.times, self.parts, self.sigmas)
        ]
        return render_table(RELENERGY_COLUMNS, rows, header)


def _check_aligned(
    states: Sequence[PlasmaState], refs: Sequence[LiftedReference]
) -> None:
    if len(states) != len(refs):
        raise HistoryAlignmentError(
            f"histories differ in length: {len(states)} states, {len(refs)} references"
        )
    for state, ref in zip(states, refs):
        if abs(state.time - ref.time) > 1e-12 * max(1.0, abs(state.time)):
            raise HistoryAlignmentError(
                f"sample times differ: state at {state.time}, reference at {ref.time}"
            )


def build_relenergy_series(
    mesh: Mesh1D,
    states: Sequence[PlasmaState],
    refs: Sequence[LiftedReference],
    eos: EosPair,
    floor: float = DEFAULT_DENSITY_FLOOR,
) -> RelEnergySeries:
    """Evaluate Phi and the Sigma terms on paired, time-aligned histories.

    ebar takes its time difference forward at the first sample and backward
    afterwards.
    """
    _check_aligned(states, refs)
    series = RelEnergySeries()
    for k, (state, ref) in enumerate(zip(states, refs)):
        neighbour: Optional[LiftedReference] = None
        if len(refs) > 1:
            neighbour = refs[1] if k == 0 else refs[k - 1]
        ebar = approx_residual(mesh, ref, neighbour).ebar
        series.append(
            state.time,
            relative_energy(mesh, state, ref, eos, floor),
            sigma_terms(mesh, state, ref, eos, ebar, floor),
        )
    return series


def releng_identity_residual(series: RelEnergySeries) -> FloatArray:
    """(Phi_{k+1} - Phi_k) / dt_k minus the trapezoidal mean of the Sigma sum.

    Non-positive entries are the inequality direction.
    """
    times = np.asarray(series.times, dtype=np.float64)
    if times.size < 2:
        return np.zeros(0)
    spacing = np.diff(times)
    if np.any(spacing <= 0.0):
        raise HistoryAlignmentError("sample times must increase strictly")
    phi = series.phi
    rhs = series.rhs
    return np.diff(phi) / spacing - 0.5 * (rhs[1:] + rhs[:-1])


@dataclass(frozen=True, slots=True)
class LeadingOrderReport:
    """Defects of the leading-order closure on an adiabatic-electron run.

    `phi_defect` is max |phi0 - H2'(n0)|, `continuity_defects` the integral of
    |d_t n0 + d_x mu0| per interval, `energy_drift` max |H_*(t_k) - H_*(t_0)|.
    """

    phi_defect: float
    continuity_defects: Tuple[float, ...]
    energy_drift: float

    @property
    def max_continuity_defect(self) -> float:
        return max(self.continuity_defects, default=0.0)


def leading_order_momentum(
    mesh: Mesh1D, earlier: AdiabaticState, later: AdiabaticState, eos: EosPair
) -> FloatArray:
    """mu0 = m0 - delta d_x d_t phi0 at the midpoint of two states."""
    dt = later.time - earlier.time
    if not dt > 0.0:
        raise HistoryAlignmentError(
            f"states must be ordered in time, got {earlier.time} and {later.time}"
        )
    m_mid = 0.5 * (earlier.ion.momentum + later.ion.momentum)
    dphi_dt = (h_prime(eos.electron, later.n) - h_prime(eos.electron, earlier.n)) / dt
    return m_mid - later.delta * gradient(mesh, dphi_dt, "even")


def leading_order_check(
    mesh: Mesh1D, history: Sequence[AdiabaticState], eos: EosPair
) -> LeadingOrderReport:
    if not history:
        raise DomainError("history must contain at least one state")
    phi_defect = 0.0
    for state in history:
        phi0 = lift_ae_solution(mesh, state, eos).phibar
        phi_defect = max(
            phi_defect, float(np.max(np.abs(phi0 - h_prime(eos.electron, state.n))))
        )
    defects: List[float] = []
    for earlier, later in zip(history[:-1], history[1:]):
        mu0 = leading_order_momentum(mesh, earlier, later, eos)
        dn_dt = (later.n - earlier.n) / (later.time - earlier.time)
        defects.append(integrate(mesh, np.abs(dn_dt + gradient(mesh, mu0, "odd"))))
    energies = [total_energy(mesh, s, eos).total for s in history]
    drift = max(abs(e - energies[0]) for e in energies)
    return LeadingOrderReport(phi_defect, tuple(defects), drift)


@dataclass(frozen=True, slots=True)
class DissipationCheck:
    passed: bool
    max_jump: float
    worst_index: Optional[int]


def check_energy_dissipation(
    times: Sequence[float],
    energies: Sequence[float],
    dx: float,
    c: float = 1.0,
) -> DissipationCheck:
    """Pass iff every E(t_{k+1}) - E(t_k) stays within 1e-10 E(0) + c dx dt_k."""
    if len(times) != len(energies):
        raise HistoryAlignmentError(f"{len(times)} times but {len(energies)} energies")
    if len(energies) < 2:
        return DissipationCheck(True, 0.0, None)
    t = np.asarray(times, dtype=np.float64)
    e = np.asarray(energies, dtype=np.float64)
    jumps = np.diff(e)
    tolerance = 1e-10 * abs(e[0]) + c * dx * np.diff(t)
    worst = int(np.argmax(jumps - tolerance))
    passed = bool(np.all(jumps <= tolerance))
    return DissipationCheck(
        passed, max(0.0, float(np.max(jumps))), None if passed else worst
    )


def format_energy_series(
    times: Sequence[float],
    energies: Sequence[EnergyBreakdown],
    header: Sequence[str] = (),
) -> str:
    rows = [b.as_row(t) for t, b in zip(times, energies)]
    return render_table(ENERGY_COLUMNS, rows, header)


__all__ = [
    "EnergyBreakdown",
    "RelativeEnergy",
    "SigmaTerms",
    "ApproxResidual",
    "RelEnergySeries",
    "LeadingOrderReport",
    "DissipationCheck",
    "total_energy",
    "lift_ae_solution",
    "lift_euler_solution",
    "relative_energy",
    "sigma_terms",
    "approx_residual",
    "build_relenergy_series",
    "releng_identity_residual",
    "leading_order_momentum",
    "leading_order_check",
    "check_energy_dissipation",
    "format_energy_series",
]
