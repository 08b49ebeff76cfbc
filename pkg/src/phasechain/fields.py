"""Uniform phase-space grids, field containers, and finite-difference calculus.

Axes are endpoint-exclusive: sample i sits at min + i*step with step =
(max - min)/n, so the right endpoint is never a node and the grid is the
natural index set for DFT-based transforms. All field payloads are float64
or complex128, row major, last axis fastest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

Array = np.ndarray

AXIS_NAMES = ("x", "v", "vdot", "vddot", "s1", "s2")

KINEMATIC_ORDER = ("x", "v", "vdot", "vddot")


class ValidationError(ValueError):
    """Bad arguments or malformed containers."""


class NumericError(ArithmeticError):
    """A numerical consistency check failed (not a usage error)."""


@dataclass(frozen=True)
class AxisGrid:
    """One uniform, endpoint-exclusive axis."""

    name: str
    n: int
    min: float
    max: float

    @property
    def step(self) -> float:
        return (self.max - self.min) / self.n

    def points(self) -> Array:
        return self.min + self.step * np.arange(self.n)

    def nearest_index(self, value: float) -> int:
        # ties between two nodes resolve toward -inf
        i = int(math.ceil((value - self.min) / self.step - 0.5))
        return min(max(i, 0), self.n - 1)


def make_axis(name: str, lo: float, hi: float, n: int) -> AxisGrid:
    """Build a validated axis; n must be even and at least 4, hi > lo."""
    if name not in AXIS_NAMES:
        raise ValidationError(f"unknown axis name {name!r}; expected one of {AXIS_NAMES}")
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ValidationError(f"axis {name!r}: n must be an integer, got {n!r}")
    if n < 4:
        raise ValidationError(f"axis {name!r}: n must be >= 4, got {n}")
    if n % 2:
        raise ValidationError(f"axis {name!r}: n must be even, got {n}")
    lo = float(lo)
    hi = float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValidationError(f"axis {name!r}: bounds must be finite")
    if hi <= lo:
        raise ValidationError(f"axis {name!r}: max must exceed min, got [{lo}, {hi})")
    return AxisGrid(name, int(n), lo, hi)


def _check_axes(axes, lo_rank, hi_rank):
    axes = tuple(axes)
    if not (lo_rank <= len(axes) <= hi_rank):
        raise ValidationError(f"rank {len(axes)} outside [{lo_rank}, {hi_rank}]")
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate axis names {names}")
    for a in axes:
        if not isinstance(a, AxisGrid):
            raise ValidationError(f"axes must be AxisGrid, got {type(a)!r}")
    return axes


class _BaseField:
    """Shared container behaviour; immutable after construction."""

    _dtype: type
    _rank_range = (1, 4)

    def __init__(self, axes, data):
        self.axes = _check_axes(axes, *self._rank_range)
        data = np.asarray(data, dtype=self._dtype)
        shape = tuple(a.n for a in self.axes)
        if data.shape != shape:
            raise ValidationError(f"data shape {data.shape} does not match axes {shape}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("field data contains non-finite values")
        data = np.ascontiguousarray(data)
        data.flags.writeable = False
        self.data = data

    @property
    def rank(self) -> int:
        return len(self.axes)

    def axis_index(self, name: str) -> int:
        for i, a in enumerate(self.axes):
            if a.name == name:
                return i
        raise ValidationError(f"field has no axis {name!r}; axes are {[a.name for a in self.axes]}")

    def axis(self, name: str) -> AxisGrid:
        return self.axes[self.axis_index(name)]

    def mesh(self):
        """Sparse broadcastable coordinate arrays, one per axis."""
        return np.meshgrid(*[a.points() for a in self.axes], indexing="ij", sparse=True)

    def with_data(self, data):
        return type(self)(self.axes, data)


class RealField(_BaseField):
    """Real scalar field sampled on a tensor-product grid (rank 1..4)."""

    _dtype = np.float64
    _rank_range = (1, 4)


class ComplexField(_BaseField):
    """Complex scalar field on a rank-1 or rank-2 grid (wave functions)."""

    _dtype = np.complex128
    _rank_range = (1, 2)


def sample_real(func, axes) -> RealField:
    axes = _check_axes(axes, 1, 4)
    grids = np.meshgrid(*[a.points() for a in axes], indexing="ij", sparse=True)
    data = np.broadcast_to(func(*grids), tuple(a.n for a in axes))
    return RealField(axes, np.array(data, dtype=np.float64))


def sample_complex(func, axes) -> ComplexField:
    """Sample a complex-valued callable on the tensor grid of the given axes."""
    axes = _check_axes(axes, 1, 2)
    grids = np.meshgrid(*[a.points() for a in axes], indexing="ij", sparse=True)
    data = np.broadcast_to(func(*grids), tuple(a.n for a in axes))
    return ComplexField(axes, np.array(data, dtype=np.complex128))


# ---------------------------------------------------------------------------
# finite differences

MAX_DERIVATIVE_POWER = 6

_STENCIL_ORDERS = (2, 4, 6)


@dataclass(frozen=True)
class StencilScheme:
    """Central finite-difference policy: accuracy order and optional step override.

    h = None means grid operations use the axis step; pointwise operations
    require an explicit h.
    """

    order: int = 4
    h: float | None = None

    def __post_init__(self):
        if self.order not in _STENCIL_ORDERS:
            raise ValidationError(f"stencil order must be one of {_STENCIL_ORDERS}, got {self.order}")
        if self.h is not None and not (np.isfinite(self.h) and self.h > 0):
            raise ValidationError(f"stencil step must be positive, got {self.h}")


@lru_cache(maxsize=None)
def stencil_coefficients(power: int, order: int) -> tuple[float, ...]:
    """Symmetric central-difference weights for d^power/dx^power, given accuracy order.

    Solved exactly over rationals (sum_j c_j j^k = power! * delta_{k,power} for
    k = 0..2w) so polynomial exactness up to degree 2w survives the float cast.
    Weights are returned unscaled; divide by h**power at application time.
    """
    if not (1 <= power <= MAX_DERIVATIVE_POWER):
        raise ValidationError(f"derivative power must be in [1, {MAX_DERIVATIVE_POWER}], got {power}")
    if order not in _STENCIL_ORDERS:
        raise ValidationError(f"stencil order must be one of {_STENCIL_ORDERS}, got {order}")
    w = (power + 1) // 2 + order // 2 - 1
    size = 2 * w + 1
    # rows: moment conditions sum_j c_j j^k = power! delta_{k,power}
    mat = [[Fraction(j) ** k for j in range(-w, w + 1)] for k in range(size)]
    rhs = [Fraction(math.factorial(power)) if k == power else Fraction(0) for k in range(size)]
    # exact Gaussian elimination with partial pivoting over Fraction
    for col in range(size):
        piv = next(r for r in range(col, size) if mat[r][col] != 0)
        mat[col], mat[piv] = mat[piv], mat[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = Fraction(1) / mat[col][col]
        mat[col] = [e * inv for e in mat[col]]
        rhs[col] = rhs[col] * inv
        for r in range(size):
            if r != col and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[col])]
                rhs[r] = rhs[r] - f * rhs[col]
    return tuple(float(c) for c in rhs)


def stencil_halfwidth(power: int, order: int) -> int:
    return (power + 1) // 2 + order // 2 - 1


def _apply_stencil_along_axis(data: Array, axis: int, coeffs, w: int, h: float, power: int) -> Array:
    """Zero-extended central difference along one array axis."""
    pad = [(0, 0)] * data.ndim
    pad[axis] = (w, w)
    padded = np.pad(data, pad)
    n = data.shape[axis]
    out = np.zeros_like(data)
    sl = [slice(None)] * data.ndim
    for j, c in zip(range(-w, w + 1), coeffs):
        if c == 0.0:
            continue
        sl[axis] = slice(w + j, w + j + n)
        out += c * padded[tuple(sl)]
    out /= h**power
    return out


def partial_derivative(field: RealField, axis: str, power: int, scheme: StencilScheme) -> RealField:
    """Central finite-difference partial along a named axis, zero extension outside.

    Boundary samples use the same stencil wrapped onto zeros, so results within
    stencil_halfwidth of an edge assume the field vanishes beyond the grid.
    """
    if not isinstance(field, (RealField, ComplexField)):
        raise ValidationError(f"expected a field, got {type(field)!r}")
    k = field.axis_index(axis)
    coeffs = stencil_coefficients(power, scheme.order)
    w = stencil_halfwidth(power, scheme.order)
    h = scheme.h if scheme.h is not None else field.axes[k].step
    out = _apply_stencil_along_axis(field.data, k, coeffs, w, h, power)
    return field.with_data(out)


def integrate_axis(field: RealField, axis: str, weight: float = 1.0):
    """Riemann-sum reduction weight * step * sum along one axis.

    Matches the DFT quadrature convention and is spectrally accurate for
    fields decaying to zero at the boundary. Returns a field of rank - 1,
    or a float when the last axis is integrated away.
    """
    k = field.axis_index(axis)
    total = field.data.sum(axis=k) * (weight * field.axes[k].step)
    rest = field.axes[:k] + field.axes[k + 1 :]
    if not rest:
        return float(total)
    return type(field)(rest, total)


# ---------------------------------------------------------------------------
# pointwise evaluation mode

class PointwiseField:
    """Scalar field given by a vectorized callable, differentiable pointwise.

    Mixed partials come from tensor-product central stencils of step h (from
    the scheme), or from an exact rule when one is attached. The exact rule
    receives (powers, *coords) and may return None to fall back to stencils.
    Used for residual evaluation at arbitrary points without storing a grid.
    """

    def __init__(self, func, rank: int, exact_partial=None):
        if not (1 <= rank <= 4):
            raise ValidationError(f"pointwise rank must be in [1, 4], got {rank}")
        self.func = func
        self.rank = rank
        self.exact_partial = exact_partial

    def values(self, coords) -> Array:
        coords = self._coerce(coords)
        return np.asarray(self.func(*coords), dtype=np.float64)

    def derivative(self, powers, coords, scheme: StencilScheme) -> Array:
        powers = tuple(int(p) for p in powers)
        if len(powers) != self.rank:
            raise ValidationError(f"powers {powers} do not match rank {self.rank}")
        if any(p < 0 or p > MAX_DERIVATIVE_POWER for p in powers):
            raise ValidationError(f"derivative powers {powers} outside [0, {MAX_DERIVATIVE_POWER}]")
        coords = self._coerce(coords)
        if all(p == 0 for p in powers):
            return self.values(coords)
        if self.exact_partial is not None:
            out = self.exact_partial(powers, *coords)
            if out is not None:
                return np.asarray(out, dtype=np.float64)
        if scheme.h is None:
            raise ValidationError("pointwise derivatives need an explicit stencil step h")
        h = scheme.h
        active = [(k, p) for k, p in enumerate(powers) if p > 0]
        tables = [(k, stencil_coefficients(p, scheme.order), stencil_halfwidth(p, scheme.order), p)
                  for k, p in active]
        out = np.zeros(np.broadcast(*coords).shape, dtype=np.float64)
        scale = 1.0 / h ** sum(p for _, p in active)
        for offsets in np.ndindex(*[2 * w + 1 for _, _, w, _ in tables]):
            weight = 1.0
            shifted = list(coords)
            for (k, coeffs, w, _), o in zip(tables, offsets):
                weight *= coeffs[o]
                if weight == 0.0:
                    break
                shifted[k] = shifted[k] + (o - w) * h
            if weight == 0.0:
                continue
            out += weight * np.asarray(self.func(*shifted), dtype=np.float64)
        return out * scale

    def _coerce(self, coords):
        coords = tuple(np.asarray(c, dtype=np.float64) for c in coords)
        if len(coords) != self.rank:
            raise ValidationError(f"expected {self.rank} coordinate arrays, got {len(coords)}")
        return coords
