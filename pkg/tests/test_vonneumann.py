"""Mode-space density matrices and their exact evolution identity."""

import numpy as np
import pytest

from phasechain import (
    ModeSet,
    ValidationError,
    density_matrix_at,
    rho_time_derivative,
    von_neumann_residual,
)
from phasechain.vonneumann import coefficients_at


def test_mode_set_validation():
    with pytest.raises(ValidationError):
        ModeSet(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ValidationError):
        ModeSet(np.array([]), np.array([]))
    with pytest.raises(ValidationError):
        ModeSet(np.array([1.0]), np.array([np.inf]))
    with pytest.raises(ValidationError):
        ModeSet(np.array([1.0]), np.array([1.0]), hbar2=0.0)
    m = ModeSet(np.array([1.0 + 2.0j]), np.array([0.5]))
    assert m.n_modes == 1
    with pytest.raises(ValueError):
        m.energies[0] = 0.0


def test_mode_text_round_trip():
    m = ModeSet(np.array([1.0, 2.0 + 0.5j]), np.array([1.0 + 1.0j, -0.25]), hbar2=0.7)
    again = ModeSet.from_text(m.to_text(), hbar2=0.7)
    assert np.array_equal(again.energies, m.energies)
    assert np.array_equal(again.coeffs, m.coeffs)
    parsed = ModeSet.from_text(
        """
        # E_re E_im c_re c_im
        1.0 0.0 1.0 0.0
        2.0 0.5 0.0 -1.0
        """
    )
    assert parsed.n_modes == 2
    assert parsed.energies[1] == 2.0 + 0.5j
    with pytest.raises(ValidationError):
        ModeSet.from_text("1.0 0.0 1.0\n")
    with pytest.raises(ValidationError):
        ModeSet.from_text("# only a comment\n")


def test_frozen_two_mode_values():
    # real energies (1, 2), unit coefficients: at t = pi/2 the off-diagonal
    # phase is exp(i pi/2) = i, diagonals stay at 1
    m = ModeSet(np.array([1.0, 2.0]), np.array([1.0, 1.0]))
    rho = density_matrix_at(m, np.pi / 2.0)
    assert rho[0, 0] == pytest.approx(1.0)
    assert rho[1, 1] == pytest.approx(1.0)
    assert rho[0, 1] == pytest.approx(1j, abs=1e-14)
    assert rho[1, 0] == pytest.approx(-1j, abs=1e-14)
    # a decaying upper mode with Im E = +0.5 feeds the off-diagonal derivative
    m2 = ModeSet(np.array([1.0, 2.0 + 0.5j]), np.array([1.0, 1.0]))
    d0 = rho_time_derivative(m2, 0.0)
    assert d0[0, 1] == pytest.approx(0.5 + 1.0j, abs=1e-14)
    assert d0[1, 0] == pytest.approx(0.5 - 1.0j, abs=1e-14)
    assert d0[0, 0] == 0.0
    assert d0[1, 1] == pytest.approx(1.0)  # growth rate 2 Im E / hbar2 times rho


def test_density_matrix_is_hermitian_rank_one():
    rng = np.random.default_rng(41)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        m = ModeSet(
            rng.normal(size=n) + 1j * rng.normal(size=n) * 0.3,
            rng.normal(size=n) + 1j * rng.normal(size=n),
            hbar2=float(rng.uniform(0.5, 2.0)),
        )
        t = float(rng.uniform(-2.0, 2.0))
        rho = density_matrix_at(m, t)
        assert np.abs(rho - rho.conj().T).max() < 1e-12
        # rank one: rho^2 = tr(rho) rho
        assert np.abs(rho @ rho - np.trace(rho) * rho).max() < 1e-12


def test_growth_rates_follow_imaginary_energies():
    m = ModeSet(np.array([1.0 + 0.25j]), np.array([1.0]), hbar2=2.0)
    t = 1.5
    c = coefficients_at(m, t)
    assert abs(c[0]) == pytest.approx(np.exp(0.25 * t / 2.0), rel=1e-14)
    rho = density_matrix_at(m, t)
    assert rho[0, 0].real == pytest.approx(np.exp(2 * 0.25 * t / 2.0), rel=1e-14)


def test_residual_identity_and_finite_difference():
    rng = np.random.default_rng(42)
    for _ in range(25):
        n = int(rng.integers(1, 7))
        m = ModeSet(
            rng.normal(size=n) + 1j * rng.normal(size=n) * 0.5,
            rng.normal(size=n) + 1j * rng.normal(size=n),
        )
        chk = von_neumann_residual(m, float(rng.uniform(-1, 1)), dt=1e-4)
        assert chk.commutator < 1e-12
        assert chk.max_residual == chk.commutator
        assert chk.finite_difference_rel < 1e-6


def test_finite_difference_residual_scales_quadratically():
    m = ModeSet(np.array([1.0, 2.0 + 0.5j]), np.array([1.0, 0.5 - 0.5j]))
    wide = von_neumann_residual(m, 0.3, dt=1e-2).finite_difference
    tight = von_neumann_residual(m, 0.3, dt=1e-3).finite_difference
    assert wide / tight == pytest.approx(100.0, rel=0.05)
    with pytest.raises(ValidationError):
        von_neumann_residual(m, 0.0, dt=0.0)
