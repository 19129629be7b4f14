import math

import numpy as np
import pytest

from novlab import (
    Grid,
    IllposedDataParams,
    RealField,
    build_filter_bank,
    build_initial_data,
)

LAMBDA = 68.0 / 48.0


@pytest.fixture(scope="session")
def small_grid():
    return Grid(2**12, 64.0)


@pytest.fixture(scope="session")
def small_bank(small_grid):
    return build_filter_bank(small_grid)


@pytest.fixture(scope="session")
def medium_grid():
    # Nyquist 256*pi ~ 804 resolves bands up to n = 8 and blocks up to j = 9
    return Grid(2**14, 64.0)


@pytest.fixture(scope="session")
def medium_bank(medium_grid):
    return build_filter_bank(medium_grid)


@pytest.fixture(scope="session")
def medium_params(medium_grid):
    return IllposedDataParams(s=3.0, p=2.0, lam=LAMBDA, num_terms=9, grid=medium_grid)


@pytest.fixture(scope="session")
def medium_data(medium_params):
    return build_initial_data(medium_params)


def mode(grid, freq_index, kind="cos", amplitude=1.0):
    """Pure grid mode with wavenumber freq_index (physical freq 2 pi k / L)."""
    xi = 2 * math.pi * freq_index / grid.length
    fn = np.cos if kind == "cos" else np.sin
    return RealField(grid, amplitude * fn(xi * grid.points))


def random_field(grid, seed, cutoff_fraction=0.25):
    """Seeded random real field, band-limited below a fraction of Nyquist."""
    rng = np.random.default_rng(seed)
    half = np.zeros(grid.num_points // 2 + 1, dtype=complex)
    n_active = int(cutoff_fraction * (grid.num_points // 2))
    half[:n_active] = rng.standard_normal(n_active) + 1j * rng.standard_normal(n_active)
    half[0] = half[0].real
    half /= grid.num_points**0.5
    from novlab.spectral import field_from_half

    return field_from_half(grid, half)
