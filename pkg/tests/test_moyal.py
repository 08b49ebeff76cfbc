"""Polynomial potentials and the correction-series evolution residual."""

import numpy as np
import pytest

from phasechain import (
    PhysParams,
    PointwiseField,
    StencilScheme,
    ValidationError,
    build_term_table,
    make_axis,
    moyal_residual,
    moyal_rhs,
    sample_real,
    transport_lhs,
    u12_polynomial,
    w1234_analytic,
    w1234_field,
)
from phasechain.moyal import PolynomialPotential

P = PhysParams()
SCHEME = StencilScheme(order=4, h=0.01)


# --- potentials ---------------------------------------------------------------

def test_terms_are_canonicalized():
    u = PolynomialPotential(((0, 0, 1.0), (2, 0, 3.0), (0, 0, -1.0), (2, 0, 0.5)))
    assert u.terms == ((2, 0, 3.5),)
    assert PolynomialPotential(()).is_zero
    with pytest.raises(ValidationError):
        PolynomialPotential(((-1, 0, 1.0),))
    with pytest.raises(ValidationError):
        PolynomialPotential(((0, 0, float("nan")),))


def test_text_round_trip():
    u = PolynomialPotential(((2, 0, 0.1 + 0.2), (1, 3, -7.25)))
    again = PolynomialPotential.from_text(u.to_text())
    assert again.terms == u.terms  # repr formatting keeps every bit
    parsed = PolynomialPotential.from_text(
        """
        # confining part
        2 0 0.5

        0 2 1.5  # comment after values
        """
    )
    assert parsed.coefficient(2, 0) == 0.5
    assert parsed.coefficient(0, 2) == 1.5
    with pytest.raises(ValidationError):
        PolynomialPotential.from_text("2 0\n")
    with pytest.raises(ValidationError):
        PolynomialPotential.from_text("2 0 abc\n")


def test_potential_queries_and_derivatives():
    u = PolynomialPotential(((3, 2, 2.0), (1, 0, -1.0)))
    assert u.degree == 5
    assert u.degree_in("x") == 3
    assert u.degree_in("v") == 2
    assert not u.v_independent
    assert PolynomialPotential(((4, 0, 1.0),)).v_independent
    d = u.derivative(dx=2, dv=1)
    assert d.terms == ((1, 1, 24.0),)
    assert u.derivative(dx=4).is_zero
    assert u(2.0, 1.0) == pytest.approx(2.0 * 8.0 - 2.0)
    got = u(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    assert np.allclose(got, [0.0, 2.0 * 4.0 - 1.0])


# --- term table ---------------------------------------------------------------

def test_quadratic_potentials_have_no_corrections():
    assert build_term_table(u12_polynomial(P), P) == ()
    assert build_term_table(PolynomialPotential(((2, 0, 0.5), (0, 2, 1.5))), P) == ()
    with pytest.raises(ValidationError):
        build_term_table("x**4", P)


def test_quartic_x_table():
    table = build_term_table(PolynomialPotential(((4, 0, 1.0),)), P)
    assert len(table) == 1
    (t,) = table
    assert (t.l, t.n) == (1, 3)
    assert t.vddot_power == 3 and t.vdot_power == 0
    assert t.du.terms == ((1, 0, 24.0),)
    assert t.coeff == pytest.approx((P.hbar2 / (2 * P.m)) ** 2 / (6 * P.m))


def test_mixed_quartic_table_signs():
    table = build_term_table(PolynomialPotential(((2, 2, 1.0),)), P)
    assert [(t.l, t.n) for t in table] == [(1, 1), (1, 2)]
    first, second = table
    assert first.du.terms == ((1, 0, 4.0),)
    assert second.du.terms == ((0, 1, 4.0),)
    assert first.coeff == pytest.approx(0.125)
    assert second.coeff == pytest.approx(-0.125)
    # mass enters through both the ratio and the overall 1/m
    heavy = build_term_table(PolynomialPotential(((2, 2, 1.0),)), PhysParams(m=2.0))
    assert heavy[0].coeff == pytest.approx(0.125 / 8.0)


# --- residuals ----------------------------------------------------------------

def test_stationary_solution_solves_its_equation():
    rng = np.random.default_rng(21)
    pts = tuple(rng.uniform(-4, 4, size=600) for _ in range(4))
    res = moyal_residual(w1234_field(P), u12_polynomial(P), P, SCHEME, points=pts)
    assert np.abs(res).max() < 1e-8


def test_wrong_potential_is_detected():
    rng = np.random.default_rng(22)
    pts = tuple(rng.uniform(-2, 2, size=600) for _ in range(4))
    bad = u12_polynomial(PhysParams(omega=2.0))
    res = moyal_residual(w1234_field(P), bad, P, SCHEME, points=pts)
    assert np.abs(res).max() > 1e-2 * w1234_analytic(0, 0, 0, 0, P)


def test_quadratic_series_is_identically_zero_on_grids():
    axes = tuple(make_axis(n, -6.0, 6.0, 16) for n in ("x", "v", "vdot", "vddot"))
    w4 = sample_real(lambda x, v, vd, vdd: w1234_analytic(x, v, vd, vdd, P), axes)
    rhs = moyal_rhs(w4, u12_polynomial(P), P, StencilScheme(order=4))
    assert np.all(rhs.data == 0.0)


def test_grid_and_pointwise_modes_agree_at_interior_nodes():
    u = PolynomialPotential(((4, 0, 0.25),))
    axes = tuple(make_axis(n, -6.0, 6.0, 16) for n in ("x", "v", "vdot", "vddot"))
    w4 = sample_real(lambda x, v, vd, vdd: w1234_analytic(x, v, vd, vdd, P), axes)
    h = axes[0].step
    scheme = StencilScheme(order=4, h=h)
    grid_res = moyal_residual(w4, u, P, scheme)
    field = PointwiseField(lambda x, v, vd, vdd: w1234_analytic(x, v, vd, vdd, P), 4)
    inner = axes[0].points()[3:-3]
    pts = tuple(c.ravel() for c in np.meshgrid(*([inner] * 4), indexing="ij"))
    pw_res = moyal_residual(field, u, P, scheme, points=pts)
    sl = (slice(3, -3),) * 4
    assert np.allclose(grid_res.data[sl].ravel(), pw_res, rtol=1e-10, atol=1e-14)


def test_dt_term_shifts_transport():
    axes = tuple(make_axis(n, -6.0, 6.0, 8) for n in ("x", "v", "vdot", "vddot"))
    w4 = sample_real(lambda x, v, vd, vdd: w1234_analytic(x, v, vd, vdd, P), axes)
    scheme = StencilScheme(order=2)
    base = transport_lhs(w4, u12_polynomial(P), P, scheme)
    bump = np.full(w4.data.shape, 0.7)
    shifted = transport_lhs(w4, u12_polynomial(P), P, scheme, dt_term=bump)
    assert np.allclose(shifted.data, base.data + 0.7, rtol=0, atol=1e-15)


def test_mode_validation():
    u = u12_polynomial(P)
    field = w1234_field(P)
    with pytest.raises(ValidationError):
        moyal_rhs(field, u, P, SCHEME)  # pointwise mode needs points
    with pytest.raises(ValidationError):
        transport_lhs(field, u, P, SCHEME)
    axes = tuple(make_axis(n, -6.0, 6.0, 8) for n in ("x", "vdot", "v", "vddot"))
    w4 = sample_real(lambda x, vd, v, vdd: w1234_analytic(x, v, vd, vdd, P), axes)
    with pytest.raises(ValidationError):
        moyal_residual(w4, u, P, SCHEME)  # axes out of canonical order
