"""Verification suites behind `plasmalab verify`.

Each suite returns CheckResults instead of raising, so one report can carry
every outcome.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .config import RunConfig
from .diagnostics import (
    build_relenergy_series,
    check_energy_dissipation,
    leading_order_check,
    leading_order_momentum,
    releng_identity_residual,
    total_energy,
)
from .eos import EosPair, FloatArray
from .errors import PlasmaLabError
from .experiments import SweepSettings, fit_rate, run_comparison, well_prepared_init
from .hyperbolic import (
    AnyState,
    ManufacturedSolution,
    SchemeConfig,
    advance,
    bep_manufactured,
    euler_manufactured,
)
from .mesh import AdiabaticState, Mesh1D, PlasmaState, integrate
from .poisson import solve_poisson, verify_ibp1, verify_ibp2

logger = logging.getLogger(__name__)

CHECKS: Tuple[str, ...] = ("mms", "ibp", "energy", "releng-identity", "leading-order")

MMS_GRIDS = (32, 64, 128)
MMS_END_TIME = 0.5
IBP2_GRIDS = (50, 100, 200)
ORDER_WINDOW = (0.8, 1.2)
DRIFT_HALVING = (0.35, 0.65)
DRIFT_FLOOR = 1e-10


@dataclass(frozen=True, slots=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def to_line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _mms_error(
    manufactured: ManufacturedSolution, ncells: int, scheme: SchemeConfig
) -> float:
    mesh = Mesh1D(manufactured.length, ncells)
    initial = manufactured.exact_state(mesh, 0.0)
    final, _ = advance(
        mesh,
        initial,
        manufactured.eos,
        scheme,
        end_time=MMS_END_TIME,
        source=manufactured.forcing(mesh),
    )
    exact = manufactured.exact_state(mesh, final.time)
    error = integrate(mesh, np.abs(final.ion.density - exact.ion.density))
    error += integrate(mesh, np.abs(final.ion.momentum - exact.ion.momentum))
    if isinstance(final, PlasmaState) and isinstance(exact, PlasmaState):
        error += integrate(
            mesh, np.abs(final.electron.density - exact.electron.density)
        )
        error += integrate(
            mesh, np.abs(final.electron.momentum - exact.electron.momentum)
        )
    return error


def mms_order(
    manufactured: ManufacturedSolution,
    grids: Sequence[int] = MMS_GRIDS,
    cfl: float = 0.5,
) -> Tuple[float, List[float]]:
    """L1 error slope against dx for a manufactured solution."""
    scheme = SchemeConfig(cfl=cfl, end_time=MMS_END_TIME)
    errors = [_mms_error(manufactured, n, scheme) for n in grids]
    dxs = [manufactured.length / n for n in grids]
    return fit_rate(dxs, errors).slope, errors


def check_mms(config: RunConfig) -> List[CheckResult]:
    eos = config.eos()
    results = []
    for label, manufactured in (
        ("mms-euler", euler_manufactured(config.L, eos)),
        ("mms-bep", bep_manufactured(config.L, eos)),
    ):
        slope, errors = mms_order(manufactured, cfl=config.cfl)
        low, high = ORDER_WINDOW
        results.append(
            CheckResult(
                label,
                low <= slope <= high,
                f"L1 slope {slope:.3f} (errors "
                + ", ".join(f"{e:.3e}" for e in errors)
                + ")",
            )
        )
    return results


def ibp2_order(length: float, delta: float, grids: Sequence[int] = IBP2_GRIDS) -> float:
    defects = []
    for n in grids:
        mesh = Mesh1D(length, n)
        x = mesh.centers
        f = np.cos(np.pi * x / length)
        ubar = np.sin(2.0 * np.pi * x / length)
        defects.append(verify_ibp2(mesh, f, ubar, delta))
    return fit_rate([length / n for n in grids], defects).slope


def _random_compatible(rng: np.random.Generator, n: int) -> FloatArray:
    values = rng.standard_normal(n)
    return values - np.mean(values)


def check_ibp(config: RunConfig, pairs: int = 100) -> List[CheckResult]:
    delta = config.delta if config.delta > 0.0 else 1.0
    mesh = config.mesh()
    rng = np.random.default_rng(config.seed)

    worst_ibp1 = 0.0
    worst_adjoint = 0.0
    for _ in range(pairs):
        f = _random_compatible(rng, mesh.ncells)
        g = _random_compatible(rng, mesh.ncells)
        worst_ibp1 = max(worst_ibp1, verify_ibp1(mesh, f, g, delta))
        phi_f, _ = solve_poisson(mesh, f, delta)
        phi_g, _ = solve_poisson(mesh, g, delta)
        scale = integrate(mesh, np.abs(g * phi_f)) + 1.0
        gap = abs(integrate(mesh, g * phi_f) - integrate(mesh, f * phi_g))
        worst_adjoint = max(worst_adjoint, gap / scale)

    slope = ibp2_order(config.L, delta)
    return [
        CheckResult("ibp1", worst_ibp1 <= 1e-10, f"max defect {worst_ibp1:.3e}"),
        CheckResult(
            "poisson-self-adjoint",
            worst_adjoint <= 1e-12,
            f"max relative gap {worst_adjoint:.3e} over {pairs} pairs",
        ),
        CheckResult("ibp2", abs(slope - 2.0) <= 0.3, f"defect slope {slope:.3f}"),
    ]


def _initial_state(config: RunConfig, mesh: Mesh1D, system: str) -> AnyState:
    data = well_prepared_init(
        mesh,
        config.eps,
        config.delta,
        config.eos(),
        config.amplitude,
        "euler" if system == "euler" else "ae",
        config.scheme(),
    )
    return data.plasma if system == "bep" else data.limit


@dataclass(frozen=True, slots=True)
class EnergyRun:
    passed: bool
    max_jump: float
    mass_drift: float
    drift_rate: float


def _energy_and_mass(config: RunConfig, system: str, ncells: int) -> EnergyRun:
    mesh = Mesh1D(config.L, ncells)
    eos = config.eos()
    scheme = config.scheme()
    if system == "bep" and not config.delta > 0.0:
        raise PlasmaLabError("the bipolar system needs delta > 0")
    initial = _initial_state(config, mesh, system)
    times = [initial.time]
    energies = [total_energy(mesh, initial, eos).total]
    masses = [_masses(mesh, initial)]

    def on_step(state: AnyState, _: object) -> None:
        times.append(state.time)
        energies.append(total_energy(mesh, state, eos).total)
        masses.append(_masses(mesh, state))

    advance(mesh, initial, eos, scheme, on_step=on_step)
    check = check_energy_dissipation(times, energies, mesh.dx)
    m = np.asarray(masses)
    drift = 0.0
    if len(m) > 1:
        drift = float(np.max(np.abs(np.diff(m, axis=0)) / np.abs(m[0])))
    rate = abs(energies[-1] - energies[0]) / (times[-1] - times[0])
    return EnergyRun(check.passed, check.max_jump, drift, rate)


def _masses(mesh: Mesh1D, state: AnyState) -> List[float]:
    masses = [integrate(mesh, state.ion.density)]
    if isinstance(state, PlasmaState):
        masses.append(integrate(mesh, state.electron.density))
    return masses


def drift_halves(
    rates: Sequence[float], window: Tuple[float, float] = DRIFT_HALVING
) -> bool:
    """True when each halving of dx scales the energy drift rate into `window`.

    A fine rate already at rounding level passes; a coarse rate at rounding
    level followed by a larger fine rate does not.
    """
    low, high = window
    for coarse, fine in zip(rates[:-1], rates[1:]):
        if fine <= DRIFT_FLOOR:
            continue
        if coarse <= DRIFT_FLOOR or not low <= fine / coarse <= high:
            return False
    return True


def check_energy(config: RunConfig) -> List[CheckResult]:
    results = []
    systems = ("bep", "ae", "euler") if config.delta > 0.0 else ("ae", "euler")
    grids = (max(3, config.ncells // 2), config.ncells, 2 * config.ncells)
    for system in systems:
        runs = [_energy_and_mass(config, system, ncells) for ncells in grids]
        run = runs[1]
        results.append(
            CheckResult(
                f"energy-{system}",
                run.passed,
                f"max uphill jump {run.max_jump:.3e}",
            )
        )
        results.append(
            CheckResult(
                f"mass-{system}",
                run.mass_drift <= 1e-12,
                f"max relative mass change per step {run.mass_drift:.3e}",
            )
        )
        rates = [r.drift_rate for r in runs]
        shown = " -> ".join(f"{r:.3e}" for r in rates)
        results.append(
            CheckResult(
                f"energy-drift-{system}",
                drift_halves(rates),
                f"drift rate {shown} on {', '.join(map(str, grids))} cells",
            )
        )
    return results


def _refinement_passes(coarse: float, fine: float, floor: float = 1e-12) -> bool:
    # slope >= 0.8 for one halving of dx, or both already at rounding level
    if fine <= floor:
        return True
    return fine <= coarse * 2.0**-0.8


def check_releng_identity(config: RunConfig) -> List[CheckResult]:
    if not config.delta > 0.0:
        return [CheckResult("releng-identity", False, "needs delta > 0")]
    drifts = []
    for ncells in (max(3, config.ncells // 2), config.ncells):
        settings = SweepSettings(
            config.L,
            ncells,
            config.eos(),
            config.scheme(),
            config.amplitude,
            config.samples,
        )
        states, refs = run_comparison(settings, config.eps, config.delta, "ae")
        series = build_relenergy_series(
            settings.mesh, states, refs, settings.eos, config.density_floor
        )
        residual = releng_identity_residual(series)
        drifts.append(max(0.0, float(np.max(residual))) if residual.size else 0.0)
    coarse, fine = drifts
    return [
        CheckResult(
            "releng-identity",
            _refinement_passes(coarse, fine),
            f"one-sided drift {coarse:.3e} -> {fine:.3e} under dx halving",
        )
    ]


def _ae_history(
    config: RunConfig, ncells: int, eos: EosPair
) -> Tuple[Mesh1D, List[AdiabaticState]]:
    mesh = Mesh1D(config.L, ncells)
    delta = config.delta if config.delta > 0.0 else 1e-2
    data = well_prepared_init(
        mesh, config.eps, delta, eos, config.amplitude, "ae", config.scheme()
    )
    assert isinstance(data.limit, AdiabaticState)
    history = [data.limit]

    def keep(state: AdiabaticState, _: object) -> None:
        history.append(state)

    advance(mesh, data.limit, eos, config.scheme(), on_step=keep)
    return mesh, history


def check_leading_order(config: RunConfig) -> List[CheckResult]:
    eos = config.eos()
    defects = []
    energy_drift = 0.0
    phi_defect = 0.0
    for ncells in (max(3, config.ncells // 2), config.ncells):
        mesh, history = _ae_history(config, ncells, eos)
        report = leading_order_check(mesh, history, eos)
        defects.append(report.max_continuity_defect)
        energy_drift = report.energy_drift
        phi_defect = max(phi_defect, report.phi_defect)

    # at delta = 0 the closure momentum is the ion momentum itself
    mesh = config.mesh()
    scheme = config.scheme()
    data = well_prepared_init(
        mesh, config.eps, 0.0, eos, config.amplitude, "ae", scheme
    )
    assert isinstance(data.limit, AdiabaticState)
    later, _ = advance(mesh, data.limit, eos, scheme, end_time=scheme.end_time / 4)
    mu0 = leading_order_momentum(mesh, data.limit, later, eos)
    m_mid = 0.5 * (data.limit.ion.momentum + later.ion.momentum)
    exact = bool(np.array_equal(mu0, m_mid))

    coarse, fine = defects
    return [
        CheckResult("leading-order-phi", phi_defect == 0.0, f"{phi_defect:.3e}"),
        CheckResult(
            "leading-order-continuity",
            _refinement_passes(coarse, fine),
            f"max defect {coarse:.3e} -> {fine:.3e} under dx halving "
            f"(energy drift {energy_drift:.3e})",
        ),
        CheckResult("leading-order-delta0", exact, "mu0 == m0 at delta = 0"),
    ]


SUITES: Dict[str, Callable[[RunConfig], List[CheckResult]]] = {
    "mms": check_mms,
    "ibp": check_ibp,
    "energy": check_energy,
    "releng-identity": check_releng_identity,
    "leading-order": check_leading_order,
}


def run_checks(config: RunConfig, names: Sequence[str] = CHECKS) -> List[CheckResult]:
    """Run the named suites in order; a suite that raises becomes a failure."""
    results: List[CheckResult] = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"Unknown check '{name}', expected one of {list(CHECKS)}")
        logger.info(f"Running check suite: {name}")
        try:
            results.extend(SUITES[name](config))
        except PlasmaLabError as e:
            results.append(CheckResult(name, False, f"error: {e}"))
    return results


def format_report(results: Sequence[CheckResult], header: Sequence[str] = ()) -> str:
    lines = [f"# {line}" for line in header]
    lines.extend(r.to_line() for r in results)
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"


__all__ = [
    "CHECKS",
    "CheckResult",
    "mms_order",
    "ibp2_order",
    "check_mms",
    "check_ibp",
    "check_energy",
    "drift_halves",
    "check_releng_identity",
    "check_leading_order",
    "run_checks",
    "format_report",
]
