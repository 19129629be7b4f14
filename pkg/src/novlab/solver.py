"""Pseudospectral time integration of the two-component Novikov system.

The system is evolved in its nonlocal form, where the momentum variable has
been eliminated with the inverse Helmholtz operator G = (1 - d^2/dx^2)^-1:

    rho_t = u^2 rho_x + rho u u_x
    u_t   = u^2 u_x + d/dx G(u^3 + (3/2) u u_x^2 - (1/2) u rho^2)
                    + G((1/2) u_x^3 - (1/2) u_x rho^2)

All products are dealiased by factor-two zero padding (exact for the cubic
nonlinearities), and time stepping is classical fixed-step RK4; the studies
run on horizons far below any stability limit of these smooth bounded
rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import irfft, rfft

from .spectral import (
    Grid,
    RealField,
    _WORKERS,
    _check_same_grid,
    _padded_values,
    _truncate_half,
    field_from_half,
    half_spectrum,
)


class BlowupError(RuntimeError):
    """Sup norm exceeded the guard threshold during integration."""

    def __init__(self, time, sup):
        super().__init__(f"blow-up guard tripped at t={time:g} (sup norm {sup:.3e})")
        self.time = time
        self.sup = sup


@dataclass(frozen=True)
class SystemState:
    """The pair (rho, u) at one time."""

    rho: RealField
    u: RealField
    time: float = 0.0

    def __post_init__(self):
        _check_same_grid(self.rho, self.u)
        if self.time < 0:
            raise ValueError("time must be nonnegative")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def sup_norm(self) -> float:
        return max(self.rho.sup_norm(), self.u.sup_norm())


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-step integration settings.

    ``blowup_threshold`` defaults to 100x the initial sup norm when left
    unset.  ``dealias`` disables the padded products when switched off
    (useful only for demonstrating aliasing).
    """

    dt: float
    t_final: float
    blowup_threshold: float | None = None
    dealias: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")
        if self.t_final > 0 and self.dt > self.t_final:
            raise ValueError("dt must not exceed t_final")
        if self.blowup_threshold is not None and self.blowup_threshold <= 0:
            raise ValueError("blowup_threshold must be positive")


@lru_cache(maxsize=32)
def _derivative_symbol(grid: Grid) -> np.ndarray:
    d = 1j * grid.half_frequencies
    d[-1] = 0.0
    d.flags.writeable = False
    return d


@lru_cache(maxsize=32)
def _smoothing_symbol(grid: Grid) -> np.ndarray:
    xi = grid.half_frequencies
    g = 1.0 / (1.0 + xi * xi)
    g.flags.writeable = False
    return g


def nonlocal_velocity_terms(u: RealField) -> RealField:
    """The smoothing terms of the u equation that involve u alone:

    d/dx G(u^3) + (3/2) d/dx G(u u_x^2) + (1/2) G(u_x^3),  G = (1-dxx)^-1.
    """
    grid = u.grid
    d = _derivative_symbol(grid)
    g = _smoothing_symbol(grid)
    hu = half_spectrum(u)
    hux = d * hu
    n = grid.num_points
    up = _padded_values(hu, n)
    uxp = _padded_values(hux, n)
    arg_dx = up * (up * up + 1.5 * uxp * uxp)
    arg_plain = 0.5 * uxp * uxp * uxp
    t_dx = _truncate_half(rfft(arg_dx, workers=_WORKERS) / (2 * n), n)
    t_plain = _truncate_half(rfft(arg_plain, workers=_WORKERS) / (2 * n), n)
    return field_from_half(grid, d * g * t_dx + g * t_plain)


def nonlocal_coupling_terms(u: RealField, rho: RealField) -> RealField:
    """The smoothing terms coupling u to rho:

    -(1/2) d/dx G(u rho^2) - (1/2) G(u_x rho^2),  G = (1-dxx)^-1.
    """
    _check_same_grid(u, rho)
    grid = u.grid
    d = _derivative_symbol(grid)
    g = _smoothing_symbol(grid)
    hu = half_spectrum(u)
    hrho = half_spectrum(rho)
    n = grid.num_points
    up = _padded_values(hu, n)
    uxp = _padded_values(d * hu, n)
    rp = _padded_values(hrho, n)
    r2 = rp * rp
    t_dx = _truncate_half(rfft(up * r2, workers=_WORKERS) / (2 * n), n)
    t_plain = _truncate_half(rfft(uxp * r2, workers=_WORKERS) / (2 * n), n)
    return field_from_half(grid, -0.5 * d * g * t_dx - 0.5 * g * t_plain)


def _rhs_arrays(grid: Grid, rho_vals, u_vals, dealias=True):
    """Right-hand side on raw value arrays (hot path for RK4 stages)."""
    d = _derivative_symbol(grid)
    g = _smoothing_symbol(grid)
    n = grid.num_points
    hrho = rfft(rho_vals, workers=_WORKERS) / n
    hu = rfft(u_vals, workers=_WORKERS) / n
    hrx = d * hrho
    hux = d * hu
    if dealias:
        up = _padded_values(hu, n)
        rp = _padded_values(hrho, n)
        uxp = _padded_values(hux, n)
        rxp = _padded_values(hrx, n)
        m = 2 * n
    else:
        up = irfft(hu, n=n, workers=_WORKERS) * n
        rp = irfft(hrho, n=n, workers=_WORKERS) * n
        uxp = irfft(hux, n=n, workers=_WORKERS) * n
        rxp = irfft(hrx, n=n, workers=_WORKERS) * n
        m = n
    u2 = up * up
    arg_rho = u2 * rxp + rp * up * uxp
    arg_u = u2 * uxp
    arg_dx_smooth = up * (u2 + 1.5 * uxp * uxp - 0.5 * rp * rp)
    arg_smooth = 0.5 * uxp * (uxp * uxp - rp * rp)

    def back(vals):
        h = rfft(vals, workers=_WORKERS) / m
        if dealias:
            return _truncate_half(h, n)
        h = h.copy()
        h[-1] = 0.0
        return h

    h_rho_t = back(arg_rho)
    h_u_t = back(arg_u) + d * g * back(arg_dx_smooth) + g * back(arg_smooth)
    rho_t = irfft(h_rho_t, n=n, workers=_WORKERS) * n
    u_t = irfft(h_u_t, n=n, workers=_WORKERS) * n
    return rho_t, u_t


def rhs(state: SystemState, dealias: bool = True):
    """Time derivative (rho_t, u_t) of the nonlocal system at this state."""
    rho_t, u_t = _rhs_arrays(state.grid, state.rho.values, state.u.values, dealias)
    return RealField(state.grid, rho_t), RealField(state.grid, u_t)


def step_rk4(state: SystemState, dt: float, blowup_threshold: float | None = None,
             dealias: bool = True) -> SystemState:
    """One classical four-stage Runge-Kutta step of size dt."""
    if dt == 0:
        raise ValueError("dt must be nonzero")
    grid = state.grid
    r0, u0 = state.rho.values, state.u.values
    k1r, k1u = _rhs_arrays(grid, r0, u0, dealias)
    k2r, k2u = _rhs_arrays(grid, r0 + 0.5 * dt * k1r, u0 + 0.5 * dt * k1u, dealias)
    k3r, k3u = _rhs_arrays(grid, r0 + 0.5 * dt * k2r, u0 + 0.5 * dt * k2u, dealias)
    k4r, k4u = _rhs_arrays(grid, r0 + dt * k3r, u0 + dt * k3u, dealias)
    r1 = r0 + (dt / 6.0) * (k1r + 2 * k2r + 2 * k3r + k4r)
    u1 = u0 + (dt / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u)
    if not (np.all(np.isfinite(r1)) and np.all(np.isfinite(u1))):
        raise BlowupError(state.time + dt, math.inf)
    sup = max(np.max(np.abs(r1)), np.max(np.abs(u1)))
    if blowup_threshold is not None and sup > blowup_threshold:
        raise BlowupError(state.time + dt, sup)
    return SystemState(
        rho=RealField(grid, r1), u=RealField(grid, u1), time=state.time + dt
    )


@dataclass(frozen=True)
class Trajectory:
    """Initial state plus the states at each requested checkpoint.

    ``sup_norms`` records (time, sup rho, sup u) after every step taken.
    """

    states: tuple
    sup_norms: tuple


def integrate(state0: SystemState, cfg: SolverConfig, checkpoints=None) -> Trajectory:
    """Fixed-step RK4 up to t_final, landing exactly on each checkpoint.

    Between consecutive checkpoints the step is cfg.dt shrunk just enough
    to divide the interval evenly; it never exceeds cfg.dt.
    """
    if checkpoints is None:
        checkpoints = [cfg.t_final] if cfg.t_final > 0 else []
    checkpoints = sorted(float(t) for t in checkpoints)
    if checkpoints and (checkpoints[0] <= state0.time or checkpoints[-1] > cfg.t_final + 1e-15):
        raise ValueError("checkpoints must lie in (t0, t_final]")
    threshold = cfg.blowup_threshold
    if threshold is None:
        threshold = 100.0 * max(state0.sup_norm(), np.finfo(float).tiny)
    elif threshold <= state0.sup_norm():
        raise ValueError("blowup_threshold must exceed the initial sup norm")

    states = [state0]
    sup_norms = []
    current = state0
    t_prev = state0.time
    for t_next in checkpoints:
        seg = t_next - t_prev
        n_steps = max(1, math.ceil(seg / cfg.dt - 1e-12))
        h = seg / n_steps
        for _ in range(n_steps):
            current = step_rk4(current, h, threshold, cfg.dealias)
            sup_norms.append(
                (current.time, current.rho.sup_norm(), current.u.sup_norm())
            )
        # land exactly on the checkpoint despite accumulated rounding
        current = SystemState(rho=current.rho, u=current.u, time=t_next)
        states.append(current)
        t_prev = t_next
    return Trajectory(states=tuple(states), sup_norms=tuple(sup_norms))
