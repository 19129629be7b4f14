"""Uniform periodic grid, Fourier transforms, multiplier operators, and norms.

The domain is [-L/2, L/2) with periodic identification, sampled at
``num_points`` equispaced nodes.  Fourier coefficients follow the convention

    coeff(k) = (1/num_points) * sum_m values(m) * exp(-i xi_k x_m),

with physical frequency xi_k = 2*pi*k/L, so a unit-amplitude cosine mode has
coefficients 1/2 at k = +-1.  Pointwise products of fields are dealiased by
zero-padding to twice the grid, which is exact for nonlinearities up to
degree three.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.fft import fft, ifft, irfft, rfft


class GridMismatchError(ValueError):
    """Operands live on different grids."""


class HermitianSymmetryError(ValueError):
    """Spectral coefficients do not describe a real field."""


class MultiplierError(ValueError):
    """Multiplier is odd or non-finite at a grid frequency."""


def _fft_workers():
    try:
        return max(1, int(os.environ.get("NOVLAB_THREADS", "1")))
    except ValueError:
        return 1


_WORKERS = _fft_workers()


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-length/2, length/2).

    ``max_frequency``, when supplied, is the largest physical frequency the
    caller intends to use; construction fails unless it lies strictly below
    the Nyquist frequency pi*num_points/length.
    """

    num_points: int
    length: float
    max_frequency: float | None = field(default=None, compare=False)

    def __post_init__(self):
        n = self.num_points
        if n < 16 or (n & (n - 1)) != 0:
            raise ValueError(f"num_points must be a power of two >= 16, got {n}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError(f"length must be positive and finite, got {self.length}")
        if self.max_frequency is not None and self.max_frequency >= self.nyquist:
            raise ValueError(
                f"requested max frequency {self.max_frequency:g} is not resolved: "
                f"Nyquist frequency is {self.nyquist:g}"
            )

    @property
    def spacing(self) -> float:
        return self.length / self.num_points

    @property
    def nyquist(self) -> float:
        """Largest resolved physical frequency, pi*num_points/length."""
        return math.pi * self.num_points / self.length

    @cached_property
    def points(self) -> np.ndarray:
        x = -self.length / 2 + self.spacing * np.arange(self.num_points)
        x.flags.writeable = False
        return x

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Physical frequencies xi_k in numpy fft order (k = 0..N/2-1, -N/2..-1)."""
        xi = 2 * math.pi * np.fft.fftfreq(self.num_points, d=self.spacing)
        xi.flags.writeable = False
        return xi

    @cached_property
    def half_frequencies(self) -> np.ndarray:
        """Nonnegative physical frequencies (rfft layout, k = 0..N/2)."""
        xi = 2 * math.pi * np.fft.rfftfreq(self.num_points, d=self.spacing)
        xi.flags.writeable = False
        return xi


class RealField:
    """Real-valued function sampled on a Grid.  Values are immutable."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.num_points,):
            raise ValueError(
                f"expected {grid.num_points} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        if values.flags.writeable:
            values = values.copy()
            values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("RealField is immutable")

    def __add__(self, other):
        _check_same_grid(self, other)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return RealField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return RealField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


class SpectralCoeffs:
    """Complex Fourier coefficients indexed by integer wavenumber.

    Storage follows numpy fft order; ``coeff(k)`` accepts signed wavenumbers.
    """

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: Grid, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (grid.num_points,):
            raise ValueError(
                f"expected {grid.num_points} coefficients, got shape {coeffs.shape}"
            )
        if coeffs.flags.writeable:
            coeffs = coeffs.copy()
            coeffs.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralCoeffs is immutable")

    def coeff(self, k: int) -> complex:
        n = self.grid.num_points
        if not -n // 2 <= k < n // 2:
            raise IndexError(f"wavenumber {k} outside [-{n//2}, {n//2})")
        return complex(self.coeffs[k % n])

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies

    def hermitian_defect(self) -> float:
        """Relative departure from coeff(-k) == conj(coeff(k))."""
        c = self.coeffs
        d = c - np.conj(c[_reflect_index(self.grid.num_points)])
        scale = np.max(np.abs(c))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(d)) / scale)


@lru_cache(maxsize=32)
def _reflect_index(n: int) -> np.ndarray:
    idx = (-np.arange(n)) % n
    idx.flags.writeable = False
    return idx


@lru_cache(maxsize=32)
def _phase(n: int) -> np.ndarray:
    # exp(-i xi_k x_0) with x_0 = -L/2 reduces to (-1)^k for every k
    p = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    p.flags.writeable = False
    return p


@lru_cache(maxsize=32)
def _half_phase(n: int) -> np.ndarray:
    p = np.where(np.arange(n // 2 + 1) % 2 == 0, 1.0, -1.0)
    p.flags.writeable = False
    return p


def _check_same_grid(*objs):
    g = objs[0].grid
    for o in objs[1:]:
        if o.grid != g:
            raise GridMismatchError(f"grid mismatch: {o.grid} vs {g}")


def forward_transform(f: RealField) -> SpectralCoeffs:
    """Fourier coefficients of a real field under the module convention."""
    c = fft(f.values, workers=_WORKERS) / f.grid.num_points
    return SpectralCoeffs(f.grid, _phase(f.grid.num_points) * c)


HERMITIAN_TOL = 1e-12


def inverse_transform(c: SpectralCoeffs, tol: float = HERMITIAN_TOL) -> RealField:
    """Reconstruct the real field; rejects non-Hermitian coefficients."""
    defect = c.hermitian_defect()
    if defect > tol:
        raise HermitianSymmetryError(
            f"coefficients are not Hermitian-symmetric (relative defect {defect:.2e})"
        )
    n = c.grid.num_points
    v = ifft(_phase(n) * c.coeffs, workers=_WORKERS) * n
    return RealField(c.grid, v.real)


# -- half-spectrum helpers (internal fast path; realness is structural) ------

def half_spectrum(f: RealField) -> np.ndarray:
    """rfft of the values scaled to the coefficient convention, without phase.

    Diagonal operators are phase-invariant, so multiplier application and
    products work directly on this representation.
    """
    return rfft(f.values, workers=_WORKERS) / f.grid.num_points


def field_from_half(grid: Grid, half: np.ndarray) -> RealField:
    v = irfft(half, n=grid.num_points, workers=_WORKERS) * grid.num_points
    return RealField(grid, v)


def half_to_coeffs(grid: Grid, half: np.ndarray) -> SpectralCoeffs:
    n = grid.num_points
    full = np.empty(n, dtype=complex)
    full[: n // 2 + 1] = half
    full[n // 2 + 1 :] = np.conj(half[1 : n // 2][::-1])
    return SpectralCoeffs(grid, _phase(n) * full)


def apply_half_multiplier(f: RealField, samples: np.ndarray) -> RealField:
    """Apply multiplier samples given on the nonnegative frequencies."""
    return field_from_half(f.grid, samples * half_spectrum(f))


def apply_multiplier(f: RealField, m) -> RealField:
    """Apply the Fourier multiplier operator with even real symbol ``m``.

    ``m`` is a callable of the physical frequency.  Odd or non-finite
    symbols are rejected since they would break realness.
    """
    xi = f.grid.half_frequencies
    samples = np.asarray(m(xi), dtype=float)
    mirror = np.asarray(m(-xi), dtype=float)
    if not (np.all(np.isfinite(samples)) and np.all(np.isfinite(mirror))):
        raise MultiplierError("multiplier is non-finite at a grid frequency")
    if not np.array_equal(samples, mirror):
        raise MultiplierError("multiplier must be even to preserve realness")
    return apply_half_multiplier(f, samples)


def derivative(f: RealField) -> RealField:
    """Spectral derivative; the (sign-ambiguous) Nyquist bin is zeroed."""
    half = half_spectrum(f)
    out = 1j * f.grid.half_frequencies * half
    out[-1] = 0.0
    return field_from_half(f.grid, out)


def helmholtz_inverse(f: RealField) -> RealField:
    """Invert 1 - d^2/dx^2, i.e. divide each mode by 1 + xi^2."""
    xi = f.grid.half_frequencies
    return apply_half_multiplier(f, 1.0 / (1.0 + xi * xi))


def lp_norm(f: RealField, p) -> float:
    """Grid quadrature of the L^p norm; p = inf gives the max norm."""
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(np.max(a))
    if p == 1.0:
        return float(f.grid.spacing * np.sum(a))
    if p == 2.0:
        return float(math.sqrt(f.grid.spacing * np.sum(a * a)))
    return float((f.grid.spacing * np.sum(a**p)) ** (1.0 / p))


# -- dealiased products -------------------------------------------------------

def pad_half_spectrum(half: np.ndarray, n: int) -> np.ndarray:
    """Zero-pad a half spectrum from grid n to grid 2n.

    The original Nyquist bin splits evenly between +-n/2, which the padded
    half spectrum represents by halving it.
    """
    out = np.zeros(n + 1, dtype=complex)
    out[: n // 2 + 1] = half
    out[n // 2] *= 0.5
    return out


def _padded_values(half: np.ndarray, n: int) -> np.ndarray:
    return irfft(pad_half_spectrum(half, n), n=2 * n, workers=_WORKERS) * (2 * n)


def _truncate_half(half_padded: np.ndarray, n: int) -> np.ndarray:
    out = half_padded[: n // 2 + 1].copy()
    out[-1] = 0.0  # discard the (unrepresentable) Nyquist content
    return out


def dealiased_half_product(grid: Grid, halves) -> np.ndarray:
    """Half spectrum of the pointwise product of fields given by half spectra.

    Factor-two zero padding makes the retained modes exact for products of
    up to three fields whose spectra fill the grid.
    """
    n = grid.num_points
    acc = _padded_values(halves[0], n)
    for h in halves[1:]:
        acc = acc * _padded_values(h, n)
    return _truncate_half(rfft(acc, workers=_WORKERS) / (2 * n), n)


def product(f: RealField, g: RealField) -> RealField:
    """Dealiased pointwise product of two fields."""
    _check_same_grid(f, g)
    return field_from_half(
        f.grid, dealiased_half_product(f.grid, [half_spectrum(f), half_spectrum(g)])
    )


def triple_product(f: RealField, g: RealField, h: RealField) -> RealField:
    """Dealiased pointwise product of three fields (exact for cubic terms)."""
    _check_same_grid(f, g, h)
    halves = [half_spectrum(f), half_spectrum(g), half_spectrum(h)]
    return field_from_half(f.grid, dealiased_half_product(f.grid, halves))
