"""Oscillatory initial data built from a compactly supported Fourier bump.

The bump phi has a smooth, even, nonnegative transform equal to 1 on
|xi| <= 1/4 and 0 on |xi| >= 1/2.  The data are lacunary sums of modulated
copies,

    rho0 = sum_n 2^(-n(s-1)) phi(x) cos(lambda 2^n x),
    u0   = sum_n 2^(-n s)    phi(x) cos(lambda 2^n x),

with lambda in [67/48, 69/48], so term n occupies the frequency band
lambda 2^n +- 1/2 and, for n >= 3, falls entirely inside the plateau of
dyadic ring n.  Each term is synthesized spectrally (coefficients are exact
samples of the shifted bump profile), which keeps every band machine-exact;
in physical space this equals the periodization of the line function, whose
wrap-around tail at these domain sizes is ~1e-5 and documented per grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import solver
from .spectral import Grid, RealField, field_from_half, _half_phase

LAMBDA_MIN = 67.0 / 48.0
LAMBDA_MAX = 69.0 / 48.0
LAMBDA_DEFAULT = 68.0 / 48.0


class ResolutionError(ValueError):
    """Requested data needs frequencies the grid cannot represent."""


class FloorError(ValueError):
    """u0 vanishes at the origin; the pointwise lower bound is void."""


@dataclass(frozen=True)
class BumpSpec:
    """Support radii for the bump's Fourier profile (plateau and cutoff)."""

    inner_radius: float = 0.25
    outer_radius: float = 0.5

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValueError(
                f"need 0 < inner_radius < outer_radius, got "
                f"{self.inner_radius}, {self.outer_radius}"
            )

    def profile(self, xi) -> np.ndarray:
        """Transform samples: 1 inside the plateau, glued to 0 at the cutoff."""
        from .littlewood_paley import smooth_step

        a = np.abs(np.asarray(xi, dtype=float))
        return smooth_step((self.outer_radius - a) / (self.outer_radius - self.inner_radius))


def modulated_bump(grid: Grid, omega: float, amplitude: float = 1.0,
                   spec: BumpSpec = BumpSpec()) -> RealField:
    """Spectral synthesis of amplitude * phi(x) cos(omega x) on the grid.

    Coefficients are (amplitude/2)(phihat(xi-omega) + phihat(xi+omega))/L,
    the exact line transform of the product sampled at grid frequencies.
    """
    if omega < 0:
        raise ValueError("modulation frequency must be nonnegative")
    if omega + spec.outer_radius >= grid.nyquist:
        raise ResolutionError(
            f"band {omega:g} +- {spec.outer_radius:g} exceeds Nyquist {grid.nyquist:g}"
        )
    xi = grid.half_frequencies
    half = (amplitude / (2.0 * grid.length)) * (
        spec.profile(xi - omega) + spec.profile(xi + omega)
    )
    return field_from_half(grid, half * _half_phase(grid.num_points))


def build_bump(spec: BumpSpec, grid: Grid) -> RealField:
    """The unmodulated bump phi itself (even, Schwartz-decaying)."""
    return modulated_bump(grid, 0.0, 1.0, spec)


@dataclass(frozen=True)
class IllposedDataParams:
    """Parameters of the lacunary data family.

    The regularity must satisfy s > max(2 + 1/p, 5/2); the modulation
    lambda stays in [67/48, 69/48] so that band n sits in ring n's plateau.
    ``enforce_range=False`` lifts the regularity restriction for diagnostic
    runs outside the main regime (the construction itself works for any s).
    """

    s: float
    p: float
    lam: float = LAMBDA_DEFAULT
    num_terms: int = 12
    grid: Grid = None
    bump: BumpSpec = field(default=BumpSpec())
    enforce_range: bool = True

    def __post_init__(self):
        if self.grid is None:
            raise ValueError("grid is required")
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise ValueError(f"p must lie in [1, inf], got {p}")
        s_min = max(2.0 + 1.0 / p, 2.5)
        if self.enforce_range and not self.s > s_min:
            raise ValueError(f"s must exceed max(2 + 1/p, 5/2) = {s_min:g}, got {self.s}")
        if not LAMBDA_MIN <= self.lam <= LAMBDA_MAX:
            raise ValueError(
                f"lambda must lie in [{LAMBDA_MIN:.6g}, {LAMBDA_MAX:.6g}], got {self.lam}"
            )
        if self.num_terms < 1:
            raise ValueError("num_terms must be positive")
        top = self.lam * 2 ** (self.num_terms - 1)
        if top * (1.0 + 0.5 / 2 ** (self.num_terms - 1)) >= self.grid.nyquist:
            raise ResolutionError(
                f"top band {top:g} + 1/2 is not resolved (Nyquist {self.grid.nyquist:g}); "
                f"reduce num_terms or refine the grid"
            )

    def band_frequency(self, n: int) -> float:
        return self.lam * 2.0**n


@dataclass(frozen=True)
class InitialData:
    """The data pair plus the sup-norm bound on the dropped tail."""

    rho: RealField
    u: RealField
    tail_bound: float


def build_initial_data(params: IllposedDataParams) -> InitialData:
    """Truncated lacunary sums for rho0 and u0, synthesized band by band."""
    grid = params.grid
    s, lam, n_terms = params.s, params.lam, params.num_terms
    rho = np.zeros(grid.num_points)
    u = np.zeros(grid.num_points)
    for n in range(n_terms):
        term = modulated_bump(grid, lam * 2.0**n, 1.0, params.bump).values
        rho = rho + 2.0 ** (-n * (s - 1)) * term
        u = u + 2.0 ** (-n * s) * term
    bump_sup = build_bump(params.bump, grid).sup_norm()
    # dropped terms n >= N sum to at most this in sup norm (rho dominates u)
    tail = bump_sup * 2.0 ** (-n_terms * (s - 1)) / (1.0 - 2.0 ** (-(s - 1)))
    return InitialData(RealField(grid, rho), RealField(grid, u), tail)


def first_variation(rho0: RealField, u0: RealField):
    """Initial time derivative of the flow started at (rho0, u0).

    Identical to the solver's right-hand side at time zero:
    the rho rate is u0^2 rho0_x + rho0 u0 u0_x and the u rate adds the
    nonlocal terms to u0^2 u0_x.
    """
    state = solver.SystemState(rho=rho0, u=u0, time=0.0)
    return solver.rhs(state)


@dataclass(frozen=True)
class FloorCheck:
    sigma: float
    floor: float


def pointwise_floor_check(u0: RealField) -> FloorCheck:
    """Largest grid radius sigma with u0^2 >= u0^2(0)/2 on |x| <= sigma.

    Raises FloorError when u0 vanishes at the origin, which would signal a
    broken data construction.
    """
    grid = u0.grid
    center = grid.num_points // 2  # x = 0 lies exactly on the grid
    w = u0.values * u0.values
    floor = 0.5 * w[center]
    if floor == 0.0:
        raise FloorError("floor violated at origin: u0(0) = 0")
    r = 0
    max_r = grid.num_points // 2 - 1
    while r < max_r and w[center + r + 1] >= floor and w[center - r - 1] >= floor:
        r += 1
    if r == 0:
        raise FloorError("floor violated at origin: no neighborhood sustains u0^2(0)/2")
    return FloorCheck(sigma=r * grid.spacing, floor=floor)
