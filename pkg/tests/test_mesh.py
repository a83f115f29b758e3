"""Tests for the grid, the state containers and the discrete calculus."""

import numpy as np
import pytest

from plasmalab.errors import DomainError, VacuumError
from plasmalab.mesh import (
    AdiabaticState,
    LiftedReference,
    Mesh1D,
    PlasmaState,
    SpeciesState,
    dirichlet_energy,
    face_gradient,
    format_field_dump,
    gradient,
    integrate,
    integrate_faces,
    laplacian,
    pad_wall,
    primitive_from_conserved,
)


def _species(n, rho=1.0):
    return SpeciesState(np.full(n, rho), np.zeros(n))


class TestMesh1D:
    """Test the cell-centred grid."""

    def test_spacing_and_centers(self):
        mesh = Mesh1D(1.0, 4)
        assert mesh.dx == 0.25
        np.testing.assert_allclose(mesh.centers, [0.125, 0.375, 0.625, 0.875])

    def test_rejects_bad_length(self):
        with pytest.raises(DomainError, match="length must be positive, got 0.0"):
            Mesh1D(0.0, 4)

    def test_rejects_bad_ncells(self):
        with pytest.raises(DomainError, match="ncells must be positive, got 0"):
            Mesh1D(1.0, 0)

    def test_check_shape(self):
        with pytest.raises(ValueError, match="rho must have length 4"):
            Mesh1D(1.0, 4).check(np.zeros(3), "rho")


class TestStates:
    """Test state validation."""

    def test_species_shape_mismatch(self):
        with pytest.raises(ValueError, match="same shape"):
            SpeciesState(np.ones(3), np.zeros(4))

    def test_plasma_state_needs_positive_eps(self):
        with pytest.raises(DomainError, match="eps must be positive, got 0.0"):
            PlasmaState(_species(3), _species(3), np.zeros(3), eps=0.0, delta=1.0)

    def test_plasma_state_accepts_quasi_neutral_delta(self):
        state = PlasmaState(_species(3), _species(3), np.zeros(3), 0.1, 0.0)
        assert state.delta == 0.0

    def test_adiabatic_state_rejects_negative_delta(self):
        with pytest.raises(DomainError, match="delta must be non-negative"):
            AdiabaticState(_species(3), np.ones(3), delta=-1.0)

    def test_lifted_reference_vacuum_bound(self):
        ones = np.ones(3)
        with pytest.raises(VacuumError, match="rhobar must stay above"):
            LiftedReference(
                rhobar=np.array([1.0, 0.0, 1.0]),
                ubar=ones,
                nbar=ones,
                vbar=ones,
                phibar=ones,
                time=0.0,
            )


class TestWallCalculus:
    """Test mirror ghosts and the difference operators."""

    def test_pad_wall_parities(self):
        values = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(pad_wall(values), [1, 1, 2, 3, 3])
        np.testing.assert_array_equal(pad_wall(values, "odd"), [-1, 1, 2, 3, -3])

    def test_pad_wall_unknown_parity(self):
        with pytest.raises(ValueError, match="Unknown parity 'mixed'"):
            pad_wall(np.ones(2), "mixed")  # type: ignore

    def test_gradient_of_linear_field(self):
        mesh = Mesh1D(1.0, 10)
        grad = gradient(mesh, mesh.centers)
        np.testing.assert_allclose(grad[1:-1], 1.0)
        np.testing.assert_allclose(grad[[0, -1]], 0.5)

    def test_odd_gradient_sees_wall_jump(self):
        mesh = Mesh1D(1.0, 5)
        grad = gradient(mesh, np.full(5, 2.0), "odd")
        assert grad[0] == pytest.approx(2.0 / mesh.dx)
        assert grad[-1] == pytest.approx(-2.0 / mesh.dx)
        np.testing.assert_allclose(grad[1:-1], 0.0)

    def test_laplacian_of_constant(self):
        mesh = Mesh1D(2.0, 8)
        np.testing.assert_array_equal(laplacian(mesh, np.full(8, 3.0)), 0.0)

    def test_laplacian_integrates_to_zero(self):
        mesh = Mesh1D(1.0, 32)
        f = np.cos(3.0 * mesh.centers) + mesh.centers**2
        assert abs(integrate(mesh, laplacian(mesh, f))) < 1e-8

    def test_summation_by_parts(self):
        mesh = Mesh1D(1.0, 40)
        rng = np.random.default_rng(2)
        f = rng.standard_normal(40)
        g = rng.standard_normal(40)
        lhs = integrate(mesh, f * laplacian(mesh, g))
        rhs = -integrate_faces(mesh, face_gradient(mesh, f) * face_gradient(mesh, g))
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_integrate(self):
        mesh = Mesh1D(3.0, 7)
        assert integrate(mesh, np.ones(7)) == pytest.approx(3.0)

    def test_integrate_faces_shape(self):
        with pytest.raises(ValueError, match="face field must have length 3"):
            integrate_faces(Mesh1D(1.0, 4), np.ones(4))

    def test_dirichlet_energy_of_linear_field(self):
        mesh = Mesh1D(1.0, 10)
        energy = dirichlet_energy(mesh, mesh.centers, weight=2.0)
        assert energy == pytest.approx(1.0 - mesh.dx)


class TestPrimitiveFromConserved:
    """Test velocity recovery with a density floor."""

    def test_floored_cells_are_counted(self):
        species = SpeciesState(np.array([1.0, 0.0, 2.0]), np.array([2.0, 0.0, 4.0]))
        velocity, floored = primitive_from_conserved(species)
        np.testing.assert_array_equal(velocity, [2.0, 0.0, 2.0])
        assert floored == 1

    def test_rejects_nonpositive_floor(self):
        with pytest.raises(DomainError, match="floor must be positive"):
            primitive_from_conserved(_species(3), 0.0)


def test_format_field_dump():
    mesh = Mesh1D(1.0, 4)
    zeros = np.zeros(4)
    text = format_field_dump(
        mesh, np.ones(4), zeros, np.ones(4), zeros, zeros, ("system = bep",)
    )
    lines = text.splitlines()
    assert lines[0] == "# system = bep"
    assert lines[1] == "x,rho,u,n,v,phi"
    assert lines[2] == "0.125,1,0,1,0,0"
    assert len(lines) == 6
