"""Phase-space toolkit for rank-4 quasi-probability distributions.

Builds generalized Wigner functions over (x, v, vdot, vddot) from rank-2 wave
functions, evaluates their Moyal-type evolution residuals and chain continuity
closures, and checks everything against the closed-form harmonic oscillator
solution. Field persistence and a CLI front end live in fieldfile and cli.
"""

from .fields import (
    AxisGrid,
    ComplexField,
    NumericError,
    PointwiseField,
    RealField,
    StencilScheme,
    ValidationError,
    integrate_axis,
    make_axis,
    partial_derivative,
    sample_complex,
    sample_real,
    stencil_coefficients,
)
from .fieldfile import FieldFormatError, export_csv, read_field, write_field
from .moyal import MoyalTerm, PolynomialPotential, build_term_table, moyal_residual, moyal_rhs, transport_lhs
from .oscillator import (
    GammaForm,
    PhysParams,
    gamma_form,
    gamma_transport_residual,
    mean_flux_analytic,
    potential_u12,
    psi12,
    radiation_power,
    u12_polynomial,
    w12_analytic,
    w12_field,
    w123_analytic,
    w123_field,
    w124_analytic,
    w124_field,
    w1234_analytic,
    w1234_field,
)
from .vlasov import (
    DissipationReport,
    FluxField,
    accel_flux_124_from_w4,
    dissipation_report,
    divergence_series_gap,
    mean_flux_from_w4,
    vlasov_moyal_accel_flux,
    vlasov_moyal_velocity_flux,
    vlasov_residual,
)
from .vonneumann import ModeSet, density_matrix_at, rho_time_derivative, von_neumann_residual
from .wigner import (
    TransformPlan,
    marginal_to_2,
    wigner3,
    wigner4,
    wigner4_marginal_to_3,
    wigner4_marginal_to_24,
    wigner24,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AxisGrid",
    "ComplexField",
    "RealField",
    "PointwiseField",
    "StencilScheme",
    "ValidationError",
    "NumericError",
    "make_axis",
    "sample_real",
    "sample_complex",
    "partial_derivative",
    "integrate_axis",
    "stencil_coefficients",
    "FieldFormatError",
    "read_field",
    "write_field",
    "export_csv",
    "PolynomialPotential",
    "MoyalTerm",
    "build_term_table",
    "moyal_rhs",
    "transport_lhs",
    "moyal_residual",
    "PhysParams",
    "GammaForm",
    "psi12",
    "u12_polynomial",
    "potential_u12",
    "gamma_form",
    "gamma_transport_residual",
    "w1234_analytic",
    "w123_analytic",
    "w124_analytic",
    "w12_analytic",
    "w1234_field",
    "w123_field",
    "w124_field",
    "w12_field",
    "mean_flux_analytic",
    "radiation_power",
    "TransformPlan",
    "wigner4",
    "wigner3",
    "wigner24",
    "wigner4_marginal_to_3",
    "wigner4_marginal_to_24",
    "marginal_to_2",
    "FluxField",
    "DissipationReport",
    "mean_flux_from_w4",
    "vlasov_moyal_accel_flux",
    "vlasov_moyal_velocity_flux",
    "accel_flux_124_from_w4",
    "vlasov_residual",
    "divergence_series_gap",
    "dissipation_report",
    "ModeSet",
    "density_matrix_at",
    "rho_time_derivative",
    "von_neumann_residual",
]
