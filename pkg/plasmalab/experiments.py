"""Well-prepared data, the two limit sweeps and rate fitting."""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Deque, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.constants as spc
from scipy.stats import linregress

from .diagnostics import (
    EnergyBreakdown,
    RelEnergySeries,
    build_relenergy_series,
    lift_ae_solution,
    lift_euler_solution,
    relative_energy,
    total_energy,
)
from .eos import EosPair, FloatArray, h_prime
from .errors import DomainError, PlasmaLabError, VacuumError
from .hyperbolic import SchemeConfig, StepReport, advance, compute_dt_limit, step_ae
from .mesh import AdiabaticState, EulerState, LiftedReference, Mesh1D, PlasmaState
from .mesh import SpeciesState
from .poisson import solve_ae_elliptic, solve_poisson
from .tables import render_table

logger = logging.getLogger(__name__)

Limit = Literal["zem", "joint"]
Reference = Literal["ae", "euler"]
LimitState = Union[AdiabaticState, EulerState]
AnyState = Union[PlasmaState, AdiabaticState, EulerState]

SWEEP_COLUMNS = ("eps", "delta", "ncells", "phi0", "phi_sup", "slope", "r2")
DIMENSION_NOTE = (
    "1D runs stand in for the multi-dimensional stability estimates "
    "(d >= 2 for the zero-electron-mass limit, d >= 3 for the joint limit)"
)
GAMMA_THRESHOLDS = {"zem": "gamma >= 2 - 1/d", "joint": "gamma >= 2d/(d+1)"}


@dataclass(frozen=True, slots=True)
class ScalingInputs:
    """Physical scales of one plasma, SI units."""

    m_i: float
    m_e: float
    T0: float
    N0: float
    length: float
    tau0: float
    k_B: float = spc.k
    e: float = spc.elementary_charge
    epsilon_0: float = spc.epsilon_0

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if not value > 0.0:
                raise DomainError(f"{f.name} must be positive, got {value}")


@dataclass(frozen=True, slots=True)
class Scaling:
    zeta: float
    eps: float
    delta: float
    v0: float
    debye_length: float


def nondimensionalize(inp: ScalingInputs) -> Scaling:
    """The dimensionless groups of a plasma.

    zeta = m_i v0^2 / (k_B T0), eps = m_e v0^2 / (k_B T0) and
    delta = (lambda_D / L)^2 with v0 = L / tau0.
    """
    v0 = inp.length / inp.tau0
    thermal = inp.k_B * inp.T0
    debye = math.sqrt(inp.epsilon_0 * thermal / (inp.e**2 * inp.N0))
    return Scaling(
        zeta=inp.m_i * v0**2 / thermal,
        eps=inp.m_e * v0**2 / thermal,
        delta=(debye / inp.length) ** 2,
        v0=v0,
        debye_length=debye,
    )


@dataclass(frozen=True)
class WellPrepared:
    """Matched initial data: the bipolar state, the limit state, its lift and
    the measured Phi(0)."""

    plasma: PlasmaState
    limit: LimitState
    lift: LiftedReference
    phi0: float


def _bump(mesh: Mesh1D, amplitude: float) -> Tuple[FloatArray, FloatArray]:
    if not 0.0 <= amplitude <= 0.5:
        raise DomainError(f"amplitude must be in [0, 0.5], got {amplitude}")
    arg = np.pi * mesh.centers / mesh.length
    rho = 1.0 + amplitude * np.cos(arg)
    if float(np.min(rho)) < 0.5:
        raise VacuumError(
            f"initial ion density must stay >= 0.5, got min {float(np.min(rho)):.3f}"
        )
    return rho, amplitude * np.sin(arg)


def well_prepared_init(
    mesh: Mesh1D,
    eps: float,
    delta: float,
    eos: EosPair,
    amplitude: float,
    reference: Reference = "ae",
    scheme: Optional[SchemeConfig] = None,
    kick: float = 0.0,
) -> WellPrepared:
    """Bipolar data built from the adiabatic-electron closure of an ion bump.

    rho0 = 1 + a cos(pi x / L), u0 = a sin(pi x / L); n0 solves the adiabatic
    elliptic equation and is rescaled to the ion mass; v0 is the adiabatic
    lift velocity with d_t H2'(n) taken over one trial step. At delta = 0 the
    data is quasi-neutral: n0 = rho0, v0 = u0, phi0 = H2'(rho0).

    A non-zero `kick` adds b sin(pi x / L) to v0. The extra electron kinetic
    energy puts about eps b^2 L / 4 into Phi(0), so the initial error is O(eps).
    """
    scheme = scheme or SchemeConfig()
    rho0, u0 = _bump(mesh, amplitude)
    ion = SpeciesState(rho0, rho0 * u0)
    if delta == 0.0:
        n0 = rho0.copy()
        v0 = u0.copy()
        phi = h_prime(eos.electron, rho0)
        ae_state = AdiabaticState(ion, n0, 0.0)
        ae_lift = lift_ae_solution(mesh, ae_state, eos, floor=scheme.density_floor)
    else:
        n0, _ = solve_ae_elliptic(mesh, rho0, delta, eos.electron)
        n0 = n0 * (float(np.sum(rho0)) / float(np.sum(n0)))
        ae_state = AdiabaticState(ion, n0, delta)
        trial_dt = compute_dt_limit(mesh, ion, eos, scheme)
        trial, _ = step_ae(mesh, ae_state, trial_dt, eos, scheme)
        ae_lift = lift_ae_solution(
            mesh, ae_state, eos, neighbour=trial, floor=scheme.density_floor
        )
        v0 = ae_lift.vbar
        phi, _ = solve_poisson(mesh, rho0 - n0, delta)

    if kick:
        v0 = v0 + kick * np.sin(np.pi * mesh.centers / mesh.length)
    plasma = PlasmaState(ion, SpeciesState(n0, n0 * v0), phi, eps, delta)
    limit: LimitState
    if reference == "ae":
        limit, lift = ae_state, ae_lift
    else:
        limit = EulerState(ion)
        lift = lift_euler_solution(mesh, limit, eos, floor=scheme.density_floor)
    phi_initial = relative_energy(mesh, plasma, lift, eos, scheme.density_floor).phi
    logger.info(
        f"well-prepared data: eps={eps:g} delta={delta:g} reference={reference} "
        f"Phi(0)={phi_initial:.3e}"
    )
    return WellPrepared(plasma, limit, lift, phi_initial)


@dataclass(frozen=True, slots=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float


def fit_rate(xs: Sequence[float], ys: Sequence[float]) -> RateFit:
    """Least-squares line through (log x, log y)."""
    if len(xs) != len(ys):
        raise ValueError(f"xs and ys differ in length: {len(xs)} and {len(ys)}")
    if len(xs) < 2:
        raise ValueError(f"at least 2 points are needed for a fit, got {len(xs)}")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise DomainError("rate fits need positive data")
    result = linregress(np.log(x), np.log(y))
    r_squared = min(1.0, max(0.0, float(result.rvalue) ** 2))
    return RateFit(float(result.slope), float(result.intercept), r_squared)


@dataclass(frozen=True, slots=True)
class SweepSettings:
    """Everything one sweep run needs besides (eps, delta)."""

    length: float
    ncells: int
    eos: EosPair
    scheme: SchemeConfig
    amplitude: float = 0.05
    samples: int = 20
    kick: float = 0.0

    @property
    def mesh(self) -> Mesh1D:
        return Mesh1D(self.length, self.ncells)


@dataclass(frozen=True, slots=True)
class SweepEntry:
    eps: float
    delta: float
    ncells: int
    phi0: float
    phi_sup: float
    gronwall_c: float
    gronwall_holds: bool
    wall_clock: float = 0.0


@dataclass
class SweepResult:
    limit: Limit
    entries: List[SweepEntry] = field(default_factory=list)
    fit: Optional[RateFit] = None
    error: Optional[str] = None

    def parameters(self) -> List[float]:
        if self.limit == "zem":
            return [e.eps for e in self.entries]
        return [e.eps + e.delta for e in self.entries]

    def to_csv(self, header: Sequence[str] = ()) -> str:
        slope = math.nan if self.fit is None else self.fit.slope
        r2 = math.nan if self.fit is None else self.fit.r_squared
        rows = [
            (e.eps, e.delta, e.ncells, e.phi0, e.phi_sup, slope, r2)
            for e in self.entries
        ]
        return render_table(SWEEP_COLUMNS, rows, header)

    def summary(self) -> str:
        label = "eps" if self.limit == "zem" else "eps + delta"
        lines = [f"limit: {self.limit}", f"entries: {len(self.entries)}"]
        if self.fit is None:
            lines.append(f"fit: undefined (needs at least 2 entries in {label})")
        else:
            lines.append(
                f"fit: sup Phi ~ ({label})^{self.fit.slope:.4f}, "
                f"r2 = {self.fit.r_squared:.4f}"
            )
        lines.append(f"gamma threshold (metadata): {GAMMA_THRESHOLDS[self.limit]}")
        lines.append(f"note: {DIMENSION_NOTE}")
        if self.error is not None:
            lines.append(f"aborted: {self.error}")
        return "\n".join(lines) + "\n"


def gronwall_constant(series: RelEnergySeries) -> float:
    """max over samples of max(0, Sigma sum) / Phi, skipping samples with
    Phi <= 1e-3 sup Phi."""
    phi = series.phi
    if phi.size == 0:
        return 0.0
    rhs = np.maximum(series.rhs, 0.0)
    mask = phi > 1e-3 * float(np.max(phi))
    if not np.any(mask):
        return 0.0
    return float(np.max(rhs[mask] / phi[mask]))


def _sample_times(end_time: float, samples: int) -> FloatArray:
    return np.linspace(0.0, end_time, samples)


def run_comparison(
    settings: SweepSettings, eps: float, delta: float, reference: Reference
) -> Tuple[List[PlasmaState], List[LiftedReference]]:
    """Run the bipolar system and the limit system side by side and return
    the paired histories at the sample times."""
    mesh = settings.mesh
    eos, scheme = settings.eos, settings.scheme
    data = well_prepared_init(
        mesh, eps, delta, eos, settings.amplitude, reference, scheme, settings.kick
    )
    plasma: PlasmaState = data.plasma
    limit: LimitState = data.limit
    states = [plasma]
    refs = [data.lift]
    recent: Deque[LimitState] = deque([limit], maxlen=2)

    def keep(state: LimitState, report: StepReport) -> None:
        recent.append(state)

    for t in _sample_times(scheme.end_time, settings.samples)[1:]:
        plasma, _ = advance(mesh, plasma, eos, scheme, end_time=float(t))
        limit, _ = advance(mesh, limit, eos, scheme, end_time=float(t), on_step=keep)
        current, neighbour = recent[-1], recent[0]
        if isinstance(current, AdiabaticState):
            assert isinstance(neighbour, AdiabaticState)
            lift = lift_ae_solution(
                mesh, current, eos, neighbour, floor=scheme.density_floor
            )
        else:
            assert isinstance(neighbour, EulerState)
            lift = lift_euler_solution(
                mesh, current, eos, neighbour, floor=scheme.density_floor
            )
        states.append(plasma)
        refs.append(lift)
    return states, refs


def run_sweep_entry(
    settings: SweepSettings, eps: float, delta: float, reference: Reference
) -> SweepEntry:
    started = time.perf_counter()
    states, refs = run_comparison(settings, eps, delta, reference)
    series = build_relenergy_series(
        settings.mesh, states, refs, settings.eos, settings.scheme.density_floor
    )
    phi = series.phi
    phi_sup = float(np.max(phi))
    c = gronwall_constant(series)
    small = eps + (delta if reference == "euler" else 0.0)
    bound = math.exp(c * settings.scheme.end_time) * (float(phi[0]) + small)
    entry = SweepEntry(
        eps=eps,
        delta=delta,
        ncells=settings.ncells,
        phi0=float(phi[0]),
        phi_sup=phi_sup,
        gronwall_c=c,
        gronwall_holds=phi_sup <= bound,
        wall_clock=time.perf_counter() - started,
    )
    logger.info(
        f"sweep entry eps={eps:g} delta={delta:g}: Phi(0)={entry.phi0:.3e} "
        f"sup Phi={entry.phi_sup:.3e} C={entry.gronwall_c:.3g} "
        f"({entry.wall_clock:.1f}s)"
    )
    return entry


def _entry_task(
    args: Tuple[SweepSettings, float, float, Reference],
) -> Union[SweepEntry, str]:
    settings, eps, delta, reference = args
    try:
        return run_sweep_entry(settings, eps, delta, reference)
    except PlasmaLabError as e:
        return f"eps={eps:g} delta={delta:g}: {e}"


def _run_sweep(
    limit: Limit,
    settings: SweepSettings,
    pairs: Sequence[Tuple[float, float]],
    workers: int,
) -> SweepResult:
    if workers < 1:
        raise DomainError(f"workers must be at least 1, got {workers}")
    reference: Reference = "ae" if limit == "zem" else "euler"
    tasks = [(settings, eps, delta, reference) for eps, delta in pairs]
    outcomes: List[Union[SweepEntry, str]]
    if workers == 1:
        outcomes = []
        for task in tasks:
            outcomes.append(_entry_task(task))
            if isinstance(outcomes[-1], str):
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_entry_task, tasks))

    result = SweepResult(limit)
    for outcome in outcomes:
        if isinstance(outcome, str):
            result.error = outcome
            logger.error(f"sweep aborted: {outcome}")
            break
        result.entries.append(outcome)

    if len(result.entries) >= 2 and all(e.phi_sup > 0.0 for e in result.entries):
        result.fit = fit_rate(result.parameters(), [e.phi_sup for e in result.entries])
    return result


def _check_decreasing(name: str, values: List[float]) -> None:
    if any(b >= a for a, b in zip(values[:-1], values[1:])):
        raise DomainError(f"{name} must be strictly decreasing, got {values}")


def run_zem_sweep(
    settings: SweepSettings,
    eps_list: Sequence[float],
    delta: float = 1.0,
    workers: int = 1,
) -> SweepResult:
    """sup Phi of bipolar runs against the adiabatic-electron reference, per eps."""
    if not delta > 0.0:
        raise DomainError(f"delta must be positive, got {delta}")
    for eps in eps_list:
        if not eps > 0.0:
            raise DomainError(f"eps must be positive, got {eps}")
    _check_decreasing("eps_list", list(eps_list))
    return _run_sweep("zem", settings, [(eps, delta) for eps in eps_list], workers)


def run_joint_sweep(
    settings: SweepSettings,
    pairs: Sequence[Tuple[float, float]],
    workers: int = 1,
) -> SweepResult:
    """sup Phi of bipolar runs against the Euler reference, per (eps, delta)."""
    for eps, delta in pairs:
        if eps == 0.0 and delta == 0.0:
            raise DomainError("eps = delta = 0 leaves the bipolar system undefined")
        if not (eps > 0.0 and delta > 0.0):
            raise DomainError(
                f"eps and delta must be positive, got eps={eps}, delta={delta}"
            )
    _check_decreasing("eps + delta", [eps + delta for eps, delta in pairs])
    return _run_sweep("joint", settings, list(pairs), workers)


def sup_phi_monotone(result: SweepResult, tolerance: float = 0.1) -> bool:
    """True when sup Phi does not grow by more than `tolerance` along
    decreasing sweep parameter."""
    pairs = sorted(zip(result.parameters(), (e.phi_sup for e in result.entries)))
    for (_, smaller), (_, larger) in zip(pairs[:-1], pairs[1:]):
        if smaller > (1.0 + tolerance) * larger:
            return False
    return True


def slopes_agree(
    coarse: SweepResult, fine: SweepResult, tolerance: float = 0.15
) -> bool:
    """Grid-independence of the fitted rate."""
    if coarse.fit is None or fine.fit is None:
        return False
    return abs(coarse.fit.slope - fine.fit.slope) < tolerance


@dataclass
class RunRecord:
    """Energy history and requested snapshots of a single run."""

    final: AnyState
    times: List[float] = field(default_factory=list)
    energies: List[EnergyBreakdown] = field(default_factory=list)
    snapshots: List[Tuple[int, AnyState]] = field(default_factory=list)


def simulate(
    mesh: Mesh1D,
    initial: AnyState,
    eos: EosPair,
    scheme: SchemeConfig,
    on_snapshot: Optional[Callable[[int, AnyState], None]] = None,
) -> RunRecord:
    """Advance one system to scheme.end_time, recording the energy every step
    and a snapshot every `scheme.output_stride` steps (final state only when
    the stride is 0)."""
    floor = scheme.density_floor
    record = RunRecord(final=initial)
    record.times.append(initial.time)
    record.energies.append(total_energy(mesh, initial, eos, floor))
    steps = 0

    def on_step(state: AnyState, report: StepReport) -> None:
        nonlocal steps
        steps += 1
        record.times.append(state.time)
        record.energies.append(total_energy(mesh, state, eos, floor))
        stride = scheme.output_stride
        if stride > 0 and steps % stride == 0:
            record.snapshots.append((steps, state))
            if on_snapshot is not None:
                on_snapshot(steps, state)

    final, _ = advance(mesh, initial, eos, scheme, on_step=on_step)
    record.final = final
    if not record.snapshots or record.snapshots[-1][0] != steps:
        record.snapshots.append((steps, final))
        if on_snapshot is not None:
            on_snapshot(steps, final)
    logger.info(f"run finished after {steps} steps at t={final.time:.6g}")
    return record


__all__ = [
    "ScalingInputs",
    "Scaling",
    "WellPrepared",
    "RateFit",
    "SweepSettings",
    "SweepEntry",
    "SweepResult",
    "RunRecord",
    "nondimensionalize",
    "well_prepared_init",
    "fit_rate",
    "gronwall_constant",
    "run_comparison",
    "run_sweep_entry",
    "run_zem_sweep",
    "run_joint_sweep",
    "sup_phi_monotone",
    "slopes_agree",
    "simulate",
]
