"""Tests for energies, lifts, the relative energy and the closure checks."""

import numpy as np
import pytest

from plasmalab.diagnostics import (
    EnergyBreakdown,
    RelativeEnergy,
    RelEnergySeries,
    SigmaTerms,
    approx_residual,
    build_relenergy_series,
    check_energy_dissipation,
    format_energy_series,
    leading_order_check,
    leading_order_momentum,
    lift_ae_solution,
    lift_euler_solution,
    relative_energy,
    releng_identity_residual,
    sigma_terms,
    total_energy,
)
from plasmalab.eos import EosPair, EosSpec, h_prime
from plasmalab.errors import DomainError, HistoryAlignmentError
from plasmalab.hyperbolic import SchemeConfig, advance
from plasmalab.mesh import (
    AdiabaticState,
    EulerState,
    LiftedReference,
    Mesh1D,
    PlasmaState,
    SpeciesState,
    dirichlet_energy,
)
from plasmalab.poisson import solve_ae_elliptic, solve_poisson

EOS = EosPair(EosSpec(2.0, 1.0), EosSpec(2.0, 1.0))


def _ion(mesh, amplitude=0.05):
    x = mesh.centers / mesh.length
    rho = 1.0 + amplitude * np.cos(np.pi * x)
    return SpeciesState(rho, rho * amplitude * np.sin(np.pi * x))


def _plasma(mesh, eps=0.1, delta=1.0, shift=0.02, time=0.0):
    ion = _ion(mesh)
    n = 1.0 + shift * np.cos(np.pi * mesh.centers / mesh.length)
    electron = SpeciesState(n, 0.5 * ion.momentum)
    phi, _ = solve_poisson(mesh, ion.density - n, delta)
    return PlasmaState(ion, electron, phi, eps, delta, time)


def _self_reference(state):
    rho, n = state.ion.density, state.electron.density
    return LiftedReference(
        rhobar=rho,
        ubar=state.ion.momentum / rho,
        nbar=n,
        vbar=state.electron.momentum / n,
        phibar=state.phi,
        time=state.time,
    )


class TestTotalEnergy:
    """Test the energy of each system."""

    def test_breakdown_total_and_row(self):
        parts = EnergyBreakdown(1.0, 2.0, 3.0, 4.0, 5.0)
        assert parts.total == 15.0
        assert parts.as_row(0.5) == (0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 15.0)

    def test_euler_at_rest(self):
        mesh = Mesh1D(2.0, 10)
        state = EulerState(SpeciesState(np.ones(10), np.zeros(10)))
        energy = total_energy(mesh, state, EOS)
        assert energy.kin_ion == 0.0
        assert energy.int_ion == pytest.approx(2.0)
        assert energy.int_ele == pytest.approx(2.0)
        assert energy.total == pytest.approx(4.0)

    def test_plasma_terms(self):
        mesh = Mesh1D(1.0, 32)
        state = _plasma(mesh, eps=0.1, delta=0.5)
        energy = total_energy(mesh, state, EOS)
        assert energy.field == pytest.approx(dirichlet_energy(mesh, state.phi, 0.5))
        assert energy.kin_ele > 0.0
        # the electron kinetic energy carries the mass ratio
        heavier = total_energy(mesh, _plasma(mesh, eps=0.2, delta=0.5), EOS)
        assert heavier.kin_ele == pytest.approx(2.0 * energy.kin_ele)

    def test_adiabatic_field_term(self):
        mesh = Mesh1D(1.0, 32)
        ion = _ion(mesh)
        n, _ = solve_ae_elliptic(mesh, ion.density, 0.5, EOS.electron)
        energy = total_energy(mesh, AdiabaticState(ion, n, 0.5), EOS)
        expected = dirichlet_energy(mesh, h_prime(EOS.electron, n), 0.5)
        assert energy.field == pytest.approx(expected)
        assert energy.kin_ele == 0.0

    def test_euler_run_dissipates(self):
        mesh = Mesh1D(1.0, 64)
        initial = EulerState(_ion(mesh))
        times, energies = [0.0], [total_energy(mesh, initial, EOS).total]

        def record(state, report):
            times.append(state.time)
            energies.append(total_energy(mesh, state, EOS).total)

        advance(mesh, initial, EOS, SchemeConfig(end_time=0.1), on_step=record)
        assert check_energy_dissipation(times, energies, mesh.dx).passed
        assert energies[-1] <= energies[0]


class TestLifts:
    """Test lifting limit states to bipolar form."""

    def test_euler_lift(self):
        mesh = Mesh1D(1.0, 16)
        state = EulerState(_ion(mesh), time=0.3)
        ref = lift_euler_solution(mesh, state, EOS)
        np.testing.assert_array_equal(ref.nbar, ref.rhobar)
        np.testing.assert_array_equal(ref.vbar, ref.ubar)
        np.testing.assert_allclose(ref.phibar, h_prime(EOS.electron, ref.rhobar))
        assert ref.system == "euler"
        assert ref.dphibar_dt is None

    def test_steady_ae_lift(self):
        mesh = Mesh1D(1.0, 16)
        ion = _ion(mesh)
        n, _ = solve_ae_elliptic(mesh, ion.density, 1.0, EOS.electron)
        ref = lift_ae_solution(mesh, AdiabaticState(ion, n, 1.0), EOS)
        np.testing.assert_allclose(ref.vbar, ion.momentum / n)
        np.testing.assert_array_equal(ref.phibar, h_prime(EOS.electron, n))
        assert ref.continuity_defect is None

    def test_ae_lift_with_neighbour(self):
        mesh = Mesh1D(1.0, 32)
        ion = _ion(mesh)
        n, _ = solve_ae_elliptic(mesh, ion.density, 1.0, EOS.electron)
        state = AdiabaticState(ion, n, 1.0)
        later, _ = advance(mesh, state, EOS, SchemeConfig(), end_time=0.01)
        ref = lift_ae_solution(mesh, later, EOS, neighbour=state)
        assert ref.dt == pytest.approx(0.01)
        assert ref.dphibar_dt is not None
        assert ref.continuity_defect is not None
        assert ref.continuity_defect >= 0.0

    def test_neighbour_at_same_time(self):
        mesh = Mesh1D(1.0, 8)
        ion = _ion(mesh)
        state = AdiabaticState(ion, ion.density.copy(), 1.0)
        with pytest.raises(HistoryAlignmentError, match="shares the time"):
            lift_ae_solution(mesh, state, EOS, neighbour=state)


class TestRelativeEnergy:
    """Test Phi and the Sigma terms."""

    def test_vanishes_against_itself(self):
        mesh = Mesh1D(1.0, 32)
        state = _plasma(mesh)
        ref = _self_reference(state)
        parts = relative_energy(mesh, state, ref, EOS)
        assert parts.phi == pytest.approx(0.0, abs=1e-15)
        sigma = sigma_terms(mesh, state, ref, EOS)
        assert sigma.sig1 == pytest.approx(0.0, abs=1e-15)
        assert sigma.sig2 == pytest.approx(0.0, abs=1e-15)
        assert sigma.sigstar == 0.0

    def test_parts_are_nonnegative(self):
        mesh = Mesh1D(1.0, 32)
        state = _plasma(mesh)
        ref = lift_euler_solution(mesh, EulerState(_ion(mesh, 0.1)), EOS)
        parts = relative_energy(mesh, state, ref, EOS)
        assert all(p >= 0.0 for p in parts.components())
        assert parts.phi > 0.0

    def test_mass_ratio_weights_electron_kinetic_part(self):
        mesh = Mesh1D(1.0, 32)
        ref = lift_euler_solution(mesh, EulerState(_ion(mesh, 0.1)), EOS)
        light = relative_energy(mesh, _plasma(mesh, eps=0.01), ref, EOS)
        heavy = relative_energy(mesh, _plasma(mesh, eps=0.02), ref, EOS)
        assert heavy.rk_ele == pytest.approx(2.0 * light.rk_ele)

    def test_euler_reference_fills_star_column(self):
        mesh = Mesh1D(1.0, 32)
        earlier = EulerState(_ion(mesh, 0.1))
        later, _ = advance(mesh, earlier, EOS, SchemeConfig(), end_time=0.01)
        ref = lift_euler_solution(mesh, later, EOS, neighbour=earlier)
        state = _plasma(mesh, time=later.time)
        sigma = sigma_terms(mesh, state, ref, EOS)
        assert sigma.system == "euler"
        assert sigma.star_column == pytest.approx(sigma.sig4 + sigma.sig5 + sigma.sig6)
        assert sigma.total == pytest.approx(
            sigma.sig1 + sigma.sig2 + sigma.sig3 + sigma.star_column
        )

    def test_resting_reference_has_no_velocity_terms(self):
        mesh = Mesh1D(1.0, 32)
        state = _plasma(mesh)
        zero = np.zeros(32)
        ref = LiftedReference(_ion(mesh, 0.1).density, zero, np.ones(32), zero, zero, 0)
        sigma = sigma_terms(mesh, state, ref, EOS)
        assert sigma.sig1 == 0.0
        assert sigma.sig2 == 0.0

    def test_sig4_against_a_cosine_potential(self):
        ncells = 40
        mesh = Mesh1D(1.0, ncells)
        dx = mesh.dx
        wave = np.cos(np.pi * mesh.centers)
        rest = SpeciesState(np.ones(ncells), np.zeros(ncells))
        state = PlasmaState(rest, rest, np.zeros(ncells), 0.1, 0.5)
        zero = np.zeros(ncells)
        ref = LiftedReference(
            rhobar=np.ones(ncells),
            ubar=zero,
            nbar=np.ones(ncells),
            vbar=zero,
            phibar=wave,
            time=0.0,
            dphibar_dt=wave,
            system="euler",
        )
        sigma = sigma_terms(mesh, state, ref, EOS)
        eigenvalue = 4.0 / dx**2 * np.sin(np.pi * dx / 2.0) ** 2
        assert sigma.sig4 == pytest.approx(0.5 * 0.5 * eigenvalue, rel=1e-12)
        assert sigma.sig5 == 0.0
        assert sigma.sig6 == 0.0

    def test_sig5_and_sig6_against_a_charged_state(self):
        ncells = 40
        mesh = Mesh1D(1.0, ncells)
        dx = mesh.dx
        ubar = np.sin(np.pi * mesh.centers)
        ion = SpeciesState(np.full(ncells, 1.1), np.zeros(ncells))
        electron = SpeciesState(np.ones(ncells), np.zeros(ncells))
        state = PlasmaState(ion, electron, np.cos(np.pi * mesh.centers), 0.1, 1.0)
        ref = LiftedReference(
            rhobar=np.ones(ncells),
            ubar=ubar,
            nbar=np.ones(ncells),
            vbar=np.zeros(ncells),
            phibar=np.full(ncells, 2.0),
            time=0.0,
            dphibar_dt=np.ones(ncells),
            system="euler",
        )
        sigma = sigma_terms(mesh, state, ref, EOS)
        assert sigma.sig4 == pytest.approx(0.0, abs=1e-12)
        assert sigma.sig5 == pytest.approx(-0.1, rel=1e-12)
        assert sigma.sig6 == pytest.approx(-0.05 * np.sin(np.pi * dx) / dx, rel=1e-12)

    def test_quadrature_converges_under_refinement(self):
        def phi_on(ncells):
            mesh = Mesh1D(1.0, ncells)
            c, s = np.cos(np.pi * mesh.centers), np.sin(np.pi * mesh.centers)
            rho, n = 1.0 + 0.1 * c, 1.0 + 0.05 * c
            ion = SpeciesState(rho, rho * 0.1 * s)
            electron = SpeciesState(n, n * 0.2 * s)
            state = PlasmaState(ion, electron, 0.3 * c, 0.1, 1.0)
            ones = np.ones(ncells)
            ref = LiftedReference(ones, 0.05 * s, ones, 0.0 * s, 0.1 * c, 0.0)
            return relative_energy(mesh, state, ref, EOS).phi

        converged = phi_on(1024)
        coarse = abs(phi_on(32) - converged)
        fine = abs(phi_on(64) - converged)
        assert fine < 0.35 * coarse

    def test_sig3_needs_ebar(self):
        mesh = Mesh1D(1.0, 16)
        state = _plasma(mesh)
        ref = lift_euler_solution(mesh, EulerState(_ion(mesh, 0.1)), EOS)
        assert sigma_terms(mesh, state, ref, EOS).sig3 == 0.0
        ebar = np.ones(16)
        assert sigma_terms(mesh, state, ref, EOS, ebar).sig3 != 0.0


class TestApproxResidual:
    """Test the residuals of the lifted reference."""

    def test_steady_rest_state(self):
        mesh = Mesh1D(1.0, 8)
        ones = np.ones(8)
        ref = LiftedReference(ones, 0 * ones, ones, 0 * ones, 0 * ones, 0.0)
        residual = approx_residual(mesh, ref)
        assert residual.ebar_sup == 0.0
        assert residual.ebar0 is None
        assert residual.ebar0_sup is None

    def test_euler_reference_has_ebar0(self):
        mesh = Mesh1D(1.0, 16)
        ref = lift_euler_solution(mesh, EulerState(_ion(mesh)), EOS)
        residual = approx_residual(mesh, ref)
        assert residual.ebar0 is not None
        assert residual.ebar0_l1(mesh) > 0.0
        assert residual.ebar_l1(mesh) > 0.0


class TestRelEnergySeries:
    """Test sampled histories of Phi."""

    def _series(self, phis, totals):
        series = RelEnergySeries()
        for k, (phi, total) in enumerate(zip(phis, totals)):
            series.append(
                float(k),
                RelativeEnergy(phi, 0.0, 0.0, 0.0, 0.0),
                SigmaTerms(total, 0.0, 0.0, 0.0),
            )
        return series

    def test_identity_residual(self):
        residual = releng_identity_residual(self._series([0.0, 1.0], [2.0, 2.0]))
        np.testing.assert_allclose(residual, [-1.0])

    def test_identity_residual_needs_two_samples(self):
        assert releng_identity_residual(self._series([1.0], [0.0])).size == 0

    def test_to_csv(self):
        text = self._series([0.5], [0.25]).to_csv(["eps = 0.01"])
        lines = text.splitlines()
        assert lines[0] == "# eps = 0.01"
        assert lines[1] == (
            "t,Phi,rk_ion,ri_ion,rk_ele,ri_ele,field,sig1,sig2,sig3,sigstar"
        )
        assert lines[2] == "0,0.5,0.5,0,0,0,0,0.25,0,0,0"

    def test_build_rejects_length_mismatch(self):
        mesh = Mesh1D(1.0, 8)
        state = _plasma(mesh)
        with pytest.raises(HistoryAlignmentError, match="histories differ in length"):
            build_relenergy_series(mesh, [state, state], [_self_reference(state)], EOS)

    def test_build_rejects_misaligned_times(self):
        mesh = Mesh1D(1.0, 8)
        state = _plasma(mesh)
        ref = _self_reference(_plasma(mesh, time=0.5))
        with pytest.raises(HistoryAlignmentError, match="sample times differ"):
            build_relenergy_series(mesh, [state], [ref], EOS)

    def test_build_on_self_references(self):
        mesh = Mesh1D(1.0, 16)
        states = [_plasma(mesh, time=t) for t in (0.0, 0.1, 0.2)]
        refs = [_self_reference(s) for s in states]
        series = build_relenergy_series(mesh, states, refs, EOS)
        assert series.times == [0.0, 0.1, 0.2]
        np.testing.assert_allclose(series.phi, 0.0, atol=1e-15)


class TestLeadingOrder:
    """Test the leading-order closure diagnostics."""

    def _history(self, mesh, delta):
        ion = _ion(mesh)
        n, _ = solve_ae_elliptic(mesh, ion.density, delta, EOS.electron)
        history = [AdiabaticState(ion, n, delta)]
        advance(
            mesh,
            history[0],
            EOS,
            SchemeConfig(end_time=0.02),
            on_step=lambda state, report: history.append(state),
        )
        return history

    def test_zero_delta_momentum_is_ion_momentum(self):
        mesh = Mesh1D(1.0, 16)
        history = self._history(mesh, 0.0)
        mu0 = leading_order_momentum(mesh, history[0], history[1], EOS)
        expected = 0.5 * (history[0].ion.momentum + history[1].ion.momentum)
        np.testing.assert_array_equal(mu0, expected)

    def test_rejects_reversed_order(self):
        mesh = Mesh1D(1.0, 16)
        history = self._history(mesh, 0.5)
        with pytest.raises(HistoryAlignmentError, match="ordered in time"):
            leading_order_momentum(mesh, history[1], history[0], EOS)

    def test_report(self):
        mesh = Mesh1D(1.0, 32)
        history = self._history(mesh, 0.5)
        report = leading_order_check(mesh, history, EOS)
        assert report.phi_defect == 0.0
        assert len(report.continuity_defects) == len(history) - 1
        assert report.max_continuity_defect >= 0.0

    def test_empty_history(self):
        with pytest.raises(DomainError, match="at least one state"):
            leading_order_check(Mesh1D(1.0, 4), [], EOS)


class TestDissipationCheck:
    """Test the energy monotonicity check."""

    def test_decreasing_passes(self):
        check = check_energy_dissipation([0.0, 1.0, 2.0], [3.0, 2.0, 1.0], 0.1)
        assert check.passed
        assert check.max_jump == 0.0
        assert check.worst_index is None

    def test_uphill_jump_fails(self):
        check = check_energy_dissipation([0.0, 1.0, 2.0], [1.0, 1.0, 2.0], 0.01)
        assert not check.passed
        assert check.worst_index == 1
        assert check.max_jump == pytest.approx(1.0)

    def test_allowance_scales_with_dx(self):
        check = check_energy_dissipation([0.0, 1.0], [1.0, 1.05], 0.1)
        assert check.passed

    def test_length_mismatch(self):
        with pytest.raises(HistoryAlignmentError, match="2 times but 3 energies"):
            check_energy_dissipation([0.0, 1.0], [1.0, 1.0, 1.0], 0.1)


def test_format_energy_series():
    text = format_energy_series([0.0], [EnergyBreakdown(1.0, 2.0)], ["system = euler"])
    assert text == (
        "# system = euler\n"
        "t,kin_ion,int_ion,kin_ele,int_ele,field,total\n"
        "0,1,2,0,0,0,3\n"
    )
