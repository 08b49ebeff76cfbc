"""Mode-space density matrices under a diagonal, non-self-adjoint Hamiltonian.

Complex mode energies are first-class: growth and decay live in Im E. With
C_n(t) = c_n exp(-i E_n t / hbar2) the pure-state density matrix is
rho_kn = C_k conj(C_n) and its exact evolution is

    d0 rho = (i/hbar2) (rho Hbar - H rho),   H = diag(E_n),

which reduces entrywise to (i/hbar2)(conj(E_n) - E_k) rho_kn. No integrator
lives here; the module provides exact snapshots and residual checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Array, ValidationError

__all__ = [
    "ModeSet",
    "VonNeumannCheck",
    "coefficients_at",
    "density_matrix_at",
    "rho_time_derivative",
    "von_neumann_residual",
]


@dataclass(frozen=True)
class ModeSet:
    """Complex energies and amplitudes of a finite mode expansion."""

    energies: Array
    coeffs: Array
    hbar2: float = 1.0

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.energies, dtype=np.complex128))
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=np.complex128))
        if e.ndim != 1 or c.ndim != 1 or e.size == 0 or e.shape != c.shape:
            raise ValidationError(f"need matching 1-d energies and coeffs, got {e.shape} and {c.shape}")
        if not (np.all(np.isfinite(e.view(np.float64))) and np.all(np.isfinite(c.view(np.float64)))):
            raise ValidationError("mode energies and coeffs must be finite")
        if not (np.isfinite(self.hbar2) and self.hbar2 > 0):
            raise ValidationError(f"hbar2 must be positive, got {self.hbar2}")
        e.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_modes(self) -> int:
        return self.energies.size

    @classmethod
    def from_text(cls, text: str, hbar2: float = 1.0) -> "ModeSet":
        """Parse lines '<Re E> <Im E> <Re c> <Im c>'; '#' comments and blanks skipped."""
        es, cs = [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValidationError(f"mode line {lineno}: expected 4 numbers, got {raw!r}")
            try:
                vals = [float(s) for s in parts]
            except ValueError as exc:
                raise ValidationError(f"mode line {lineno}: {exc}") from exc
            es.append(complex(vals[0], vals[1]))
            cs.append(complex(vals[2], vals[3]))
        if not es:
            raise ValidationError("mode file contains no modes")
        return cls(np.array(es), np.array(cs), hbar2)

    def to_text(self) -> str:
        lines = [
            f"{float(e.real)!r} {float(e.imag)!r} {float(c.real)!r} {float(c.imag)!r}"
            for e, c in zip(self.energies, self.coeffs)
        ]
        return "\n".join(lines) + "\n"


def coefficients_at(modes: ModeSet, t: float) -> Array:
    """C_n(t) = c_n exp(-i E_n t / hbar2); |C_n| grows for Im E_n > 0."""
    return modes.coeffs * np.exp(-1j * modes.energies * t / modes.hbar2)


def density_matrix_at(modes: ModeSet, t: float) -> Array:
    """Pure-state density matrix rho_kn = C_k conj(C_n) (Hermitian, rank one)."""
    c = coefficients_at(modes, t)
    return np.outer(c, np.conj(c))


def rho_time_derivative(modes: ModeSet, t: float) -> Array:
    """Exact d0 rho, entrywise (i/hbar2)(conj(E_n) - E_k) rho_kn."""
    rho = density_matrix_at(modes, t)
    e = modes.energies
    return (1j / modes.hbar2) * (np.conj(e)[None, :] - e[:, None]) * rho


@dataclass(frozen=True)
class VonNeumannCheck:
    """Residual magnitudes of the evolution identity at one instant."""

    commutator: float        # max |(i/hbar2)(rho Hbar - H rho) - d0 rho|
    finite_difference: float  # max |centered FD of rho - d0 rho|
    finite_difference_rel: float

    @property
    def max_residual(self) -> float:
        return self.commutator


def von_neumann_residual(modes: ModeSet, t: float, dt: float = 1e-4) -> VonNeumannCheck:
    """Check d0 rho against the matrix commutator form and a centered difference.

    The commutator residual is pure rounding; the finite-difference residual
    scales as dt^2 and is also reported relative to the derivative's own peak.
    """
    if not (np.isfinite(dt) and dt > 0):
        raise ValidationError(f"dt must be positive, got {dt}")
    rho = density_matrix_at(modes, t)
    h = np.diag(modes.energies)
    rhs = (1j / modes.hbar2) * (rho @ np.conj(h) - h @ rho)
    exact = rho_time_derivative(modes, t)
    commutator = float(np.abs(rhs - exact).max())
    fd = (density_matrix_at(modes, t + dt) - density_matrix_at(modes, t - dt)) / (2.0 * dt)
    fd_abs = float(np.abs(fd - exact).max())
    scale = float(np.abs(exact).max())
    fd_rel = fd_abs / scale if scale > 0 else fd_abs
    return VonNeumannCheck(commutator, fd_abs, fd_rel)
