"""Tests for the power-law equations of state."""

import numpy as np
import pytest

from plasmalab.eos import (
    EosPair,
    EosSpec,
    h_double_prime,
    h_prime,
    h_prime_inverse,
    internal_energy,
    pressure,
    pressure_double_prime,
    pressure_prime,
    relative_quantity,
    sound_speed,
    total_pressure,
)
from plasmalab.errors import DomainError, SingularDerivativeError


class TestEosSpec:
    """Test closure parameters and their validation."""

    def test_rejects_gamma_at_most_one(self):
        with pytest.raises(DomainError, match="gamma must be greater than 1, got 1.0"):
            EosSpec(1.0)

    def test_rejects_nonpositive_k(self):
        with pytest.raises(DomainError, match="k must be positive, got 0.0"):
            EosSpec(2.0, 0.0)

    def test_k_hat(self):
        assert EosSpec(5.0 / 3.0).k_hat == pytest.approx(2.0 / 3.0)

    def test_scaled_keeps_exponent(self):
        scaled = EosSpec(1.4, 2.0).scaled(100.0)
        assert scaled.gamma == 1.4
        assert scaled.k == pytest.approx(200.0)


class TestPointValues:
    """Test closed-form values for gamma = 2, k = 1."""

    spec = EosSpec(2.0, 1.0)

    def test_pressure(self):
        assert float(pressure(self.spec, 3.0)) == 9.0
        assert float(pressure_prime(self.spec, 3.0)) == 6.0
        assert float(pressure_double_prime(self.spec, 3.0)) == 2.0

    def test_internal_energy(self):
        assert float(internal_energy(self.spec, 3.0)) == 9.0
        assert float(h_prime(self.spec, 3.0)) == 6.0
        assert float(h_double_prime(self.spec, 3.0)) == 2.0

    def test_vacuum_is_regular_for_gamma_two(self):
        assert float(h_double_prime(self.spec, 0.0)) == 2.0


def test_thermodynamic_identity():
    """r H''(r) equals P'(r) across exponents."""
    r = np.linspace(0.1, 5.0, 50)
    for gamma in (1.4, 5.0 / 3.0, 2.0, 3.0):
        spec = EosSpec(gamma, 0.7)
        np.testing.assert_allclose(
            r * h_double_prime(spec, r), pressure_prime(spec, r), rtol=1e-13
        )


def test_h_prime_inverse_round_trip():
    rng = np.random.default_rng(0)
    r = rng.uniform(1e-3, 10.0, 200)
    spec = EosSpec(1.4, 1.3)
    np.testing.assert_allclose(h_prime_inverse(spec, h_prime(spec, r)), r, rtol=1e-12)


def test_h_prime_inverse_rejects_nonpositive_w():
    with pytest.raises(DomainError, match="w must be positive"):
        h_prime_inverse(EosSpec(2.0), np.array([1.0, 0.0]))


def test_negative_density_rejected():
    with pytest.raises(DomainError, match="density must be non-negative"):
        pressure(EosSpec(2.0), np.array([1.0, -0.5]))


def test_singular_second_derivative_at_vacuum():
    spec = EosSpec(1.5)
    with pytest.raises(SingularDerivativeError, match="unbounded at r = 0"):
        h_double_prime(spec, np.array([0.0, 1.0]))
    with pytest.raises(SingularDerivativeError):
        pressure_double_prime(spec, 0.0)


class TestRelativeQuantity:
    """Test the relative internal energy and relative pressure."""

    def test_convexity_on_random_pairs(self):
        rng = np.random.default_rng(1)
        r = rng.uniform(0.0, 10.0, 1000)
        rbar = rng.uniform(1e-3, 10.0, 1000)
        for gamma in (1.4, 2.0, 3.0):
            spec = EosSpec(gamma)
            rel = relative_quantity("internal_energy", spec, r, rbar)
            assert np.all(rel >= -1e-10)

    def test_vanishes_on_the_diagonal(self):
        r = np.linspace(0.5, 2.0, 7)
        rel = relative_quantity("pressure", EosSpec(1.4), r, r)
        np.testing.assert_allclose(rel, 0.0, atol=1e-14)

    def test_quadratic_case(self):
        # gamma = 2, k = 1: H(r | rbar) = (r - rbar)^2
        rel = relative_quantity("internal_energy", EosSpec(2.0), 3.0, 1.0)
        assert float(rel) == pytest.approx(4.0)

    def test_rejects_vacuum_reference(self):
        with pytest.raises(DomainError, match="reference density must be positive"):
            relative_quantity("pressure", EosSpec(2.0), 1.0, 0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="Unknown relative quantity 'entropy'"):
            relative_quantity("entropy", EosSpec(2.0), 1.0, 1.0)  # type: ignore


def test_combined_closure():
    eos = EosPair(EosSpec(2.0, 1.0), EosSpec(2.0, 3.0))
    assert float(total_pressure(eos.combined, 2.0)) == pytest.approx(16.0)
    assert float(sound_speed(eos.combined, 1.0)) == pytest.approx(np.sqrt(8.0))
    assert float(sound_speed(eos.ion, 1.0)) == pytest.approx(np.sqrt(2.0))
