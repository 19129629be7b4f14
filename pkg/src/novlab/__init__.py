"""novlab: a numerical laboratory for the two-component Novikov system.

Spectral core on a periodic grid, a Littlewood-Paley/Besov toolkit, the
oscillatory lacunary data family, an RK4 pseudospectral solver for the
nonlocal form of the system, and verdict-bearing scaling studies.
"""

from .spectral import (
    Grid,
    GridMismatchError,
    HermitianSymmetryError,
    MultiplierError,
    RealField,
    SpectralCoeffs,
    apply_multiplier,
    derivative,
    forward_transform,
    helmholtz_inverse,
    inverse_transform,
    lp_norm,
    product,
    triple_product,
)
from .littlewood_paley import (
    BesovIndex,
    DyadicDecomposition,
    LPFilterBank,
    UnresolvedSpectrumError,
    besov_norm,
    build_filter_bank,
    commutator,
    dyadic_block,
    dyadic_decomposition,
    weighted_block_norms,
)
from .initial_data import (
    BumpSpec,
    FloorCheck,
    FloorError,
    IllposedDataParams,
    InitialData,
    ResolutionError,
    build_bump,
    build_initial_data,
    first_variation,
    modulated_bump,
    pointwise_floor_check,
)
from .solver import (
    BlowupError,
    SolverConfig,
    SystemState,
    Trajectory,
    integrate,
    nonlocal_coupling_terms,
    nonlocal_velocity_terms,
    rhs,
    step_rk4,
)
from .experiments import (
    DegenerateDataError,
    ScalingFit,
    StudyReport,
    fit_powerlaw,
    study_block_scaling,
    study_inequalities,
    study_separation,
    study_short_time,
    write_study,
)
from .fieldio import load_field, save_field

__version__ = "0.1.0"
