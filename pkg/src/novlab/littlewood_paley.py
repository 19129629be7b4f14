"""Smooth dyadic filter bank, frequency blocks, Besov norms, commutators.

The bank is built from a single smooth low-pass profile T with T = 1 for
|xi| <= 1 and T = 0 for |xi| >= 4/3, glued by the standard exponential
transition.  The low-pass symbol is chi = T and the ring symbol is
phi(xi) = T(xi/2) - T(xi), so the partition

    chi(xi) + sum_{j>=0} phi(2^-j xi) = T(2^-(J+1) xi)

telescopes exactly and equals 1 on every resolved frequency once
2^(J+1) exceeds the Nyquist frequency.  The ring symbol is supported in
{1 <= |xi| <= 8/3} and equals 1 exactly on {4/3 <= |xi| <= 2}; rings two
indices apart are disjoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    RealField,
    _check_same_grid,
    apply_half_multiplier,
    dealiased_half_product,
    derivative,
    field_from_half,
    half_spectrum,
    lp_norm,
)

CHI_PLATEAU_END = 1.0
CHI_SUPPORT_END = 4.0 / 3.0
RING_SUPPORT = (1.0, 8.0 / 3.0)
RING_PLATEAU = (4.0 / 3.0, 2.0)


class UnresolvedSpectrumError(ValueError):
    """Field carries significant energy above the resolved dyadic band."""


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly monotone between.

    Built as g(t)/(g(t) + g(1-t)) with g(t) = exp(-1/t) for t > 0.
    """
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        g = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        g1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return g / (g + g1)


def low_pass_profile(xi):
    """The profile T: identically 1 on |xi| <= 1, identically 0 on |xi| >= 4/3."""
    a = np.abs(np.asarray(xi, dtype=float))
    return smooth_step((CHI_SUPPORT_END - a) / (CHI_SUPPORT_END - CHI_PLATEAU_END))


def ring_profile(xi):
    """The ring symbol T(xi/2) - T(xi); nonnegative, supported in 1 <= |xi| <= 8/3."""
    xi = np.asarray(xi, dtype=float)
    return low_pass_profile(xi / 2) - low_pass_profile(xi)


@dataclass(frozen=True)
class BesovIndex:
    """Besov space indices (s, p, r); p and r may be math.inf."""

    s: float
    p: float
    r: float = math.inf

    def __post_init__(self):
        for name in ("p", "r"):
            v = float(getattr(self, name))
            if math.isnan(v) or v < 1:
                raise ValueError(f"{name} must lie in [1, inf], got {v}")


class LPFilterBank:
    """Sampled dyadic multipliers for one grid.

    ``chi`` and ``phi[j]`` hold samples on the nonnegative grid frequencies;
    ``j_max`` is the largest dyadic index whose ring intersects the resolved
    band.  Because the partition telescopes, blocks -1..j_max reconstruct
    every grid field exactly.
    """

    __slots__ = ("grid", "chi", "phi", "j_max")

    def __init__(self, grid: Grid, chi: np.ndarray, phi: np.ndarray, j_max: int):
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "j_max", j_max)

    def __setattr__(self, name, value):
        raise AttributeError("LPFilterBank is immutable")

    def block_multiplier(self, j: int) -> np.ndarray:
        if j == -1:
            return self.chi
        return self.phi[j]

    def resolved_band_end(self) -> float:
        """Guard frequency for Besov norms: content above (3/2) 2^j_max sits
        so close to Nyquist that the grid is considered too coarse for it."""
        return 1.5 * 2.0**self.j_max


def build_filter_bank(grid: Grid) -> LPFilterBank:
    """Sample chi and all resolved ring multipliers on the grid."""
    xi = grid.half_frequencies
    chi = low_pass_profile(xi)
    chi.flags.writeable = False
    j_max = int(math.floor(math.log2(grid.nyquist)))
    phi = np.empty((j_max + 1, xi.size))
    for j in range(j_max + 1):
        phi[j] = ring_profile(xi / 2.0**j)
    phi.flags.writeable = False
    return LPFilterBank(grid, chi, phi, j_max)


def dyadic_block(bank: LPFilterBank, f: RealField, j: int) -> RealField:
    """Frequency block: chi(D)f for j = -1, phi(2^-j D)f for j >= 0.

    Indices j <= -2 give the zero field; j beyond the resolved band is an
    error because the grid cannot represent that ring.
    """
    _check_same_grid(bank, f)
    if j > bank.j_max:
        raise ValueError(f"block {j} exceeds resolved band j_max={bank.j_max}")
    if j <= -2:
        return RealField(f.grid, np.zeros(f.grid.num_points))
    return apply_half_multiplier(f, bank.block_multiplier(j))


@dataclass(frozen=True)
class DyadicDecomposition:
    """All resolved blocks of one field, keyed by dyadic index."""

    blocks: dict

    def reconstruct(self) -> RealField:
        fields = list(self.blocks.values())
        total = fields[0]
        for b in fields[1:]:
            total = total + b
        return total


def dyadic_decomposition(bank: LPFilterBank, f: RealField) -> DyadicDecomposition:
    half = half_spectrum(f)
    blocks = {
        j: field_from_half(f.grid, bank.block_multiplier(j) * half)
        for j in range(-1, bank.j_max + 1)
    }
    return DyadicDecomposition(blocks)


UNRESOLVED_ENERGY_TOL = 1e-12


def _check_resolved(bank: LPFilterBank, half: np.ndarray) -> None:
    xi = bank.grid.half_frequencies
    w = np.abs(half) ** 2
    w[1:-1] *= 2.0  # rfft layout counts interior bins twice
    total = float(np.sum(w))
    if total == 0.0:
        return
    hi = float(np.sum(w[xi > bank.resolved_band_end()]))
    if hi > UNRESOLVED_ENERGY_TOL * total:
        raise UnresolvedSpectrumError(
            f"fraction {hi/total:.2e} of the energy lies above frequency "
            f"{bank.resolved_band_end():g}; grid too coarse for this field"
        )


def weighted_block_norms(bank: LPFilterBank, f: RealField, idx: BesovIndex,
                         check_resolved: bool = True) -> np.ndarray:
    """The sequence 2^(j s) ||block_j f||_Lp for j = -1 .. j_max.

    ``check_resolved=False`` skips the near-Nyquist energy guard.  That is
    needed for tiny difference fields (e.g. expansion residuals shrinking
    like t^2) whose genuine content cancels while the ~1e-16-level spectral
    dust of the subtracted terms does not, inflating the relative
    high-frequency fraction without any actual resolution problem.
    """
    _check_same_grid(bank, f)
    half = half_spectrum(f)
    if check_resolved:
        _check_resolved(bank, half)
    out = np.empty(bank.j_max + 2)
    for j in range(-1, bank.j_max + 1):
        block = field_from_half(f.grid, bank.block_multiplier(j) * half)
        out[j + 1] = 2.0 ** (j * idx.s) * lp_norm(block, idx.p)
    return out


def besov_norm(bank: LPFilterBank, f: RealField, idx: BesovIndex,
               check_resolved: bool = True) -> float:
    """Besov norm: l^r aggregation of the weighted block norms."""
    seq = weighted_block_norms(bank, f, idx, check_resolved)
    if math.isinf(idx.r):
        return float(np.max(seq))
    return float(np.sum(seq ** idx.r) ** (1.0 / idx.r))


def commutator(bank: LPFilterBank, j: int, u: RealField, v: RealField) -> RealField:
    """[block_j, u] d/dx v = block_j(u v_x) - u block_j(v_x), dealiased."""
    _check_same_grid(bank, u, v)
    if j > bank.j_max:
        raise ValueError(f"block {j} exceeds resolved band j_max={bank.j_max}")
    grid = u.grid
    hu = half_spectrum(u)
    hvx = half_spectrum(derivative(v))
    h_uvx = dealiased_half_product(grid, [hu, hvx])
    if j <= -2:
        return RealField(grid, np.zeros(grid.num_points))
    m = bank.block_multiplier(j)
    first = m * h_uvx
    second = dealiased_half_product(grid, [hu, m * hvx])
    return field_from_half(grid, first - second)
