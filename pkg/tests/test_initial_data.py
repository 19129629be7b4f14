import math

import numpy as np
import pytest
from scipy.integrate import quad

from novlab import (
    BesovIndex,
    BumpSpec,
    FloorError,
    Grid,
    IllposedDataParams,
    RealField,
    ResolutionError,
    besov_norm,
    build_bump,
    build_initial_data,
    derivative,
    dyadic_block,
    first_variation,
    forward_transform,
    load_field,
    lp_norm,
    modulated_bump,
    nonlocal_velocity_terms,
    pointwise_floor_check,
    product,
    save_field,
    triple_product,
)

from conftest import LAMBDA, mode


class TestBumpSpec:
    def test_profile_plateau_and_cutoff(self):
        spec = BumpSpec()
        xi = np.array([0.0, 0.1, 0.25, 0.3, 0.49, 0.5, 0.75, 2.0])
        v = spec.profile(xi)
        assert v[0] == 1.0 and v[1] == 1.0 and v[2] == 1.0
        assert 0.0 < v[3] < 1.0
        assert v[5] == 0.0 and v[6] == 0.0 and v[7] == 0.0

    def test_profile_even(self):
        spec = BumpSpec()
        xi = np.linspace(-1, 1, 501)
        assert np.array_equal(spec.profile(xi), spec.profile(-xi))

    def test_rejects_bad_radii(self):
        with pytest.raises(ValueError):
            BumpSpec(inner_radius=0.5, outer_radius=0.25)


class TestBuildBump:
    def test_transform_matches_profile(self, small_grid):
        spec = BumpSpec()
        bump = build_bump(spec, small_grid)
        coeffs = forward_transform(bump)
        xi = small_grid.frequencies
        # line-normalized: length * coeff reproduces the profile samples
        recovered = small_grid.length * coeffs.coeffs
        expected = spec.profile(xi)
        assert np.abs(recovered - expected).max() < 1e-10

    def test_transform_at_origin_and_beyond_cutoff(self, small_grid):
        bump = build_bump(BumpSpec(), small_grid)
        c = forward_transform(bump)
        assert small_grid.length * c.coeff(0) == pytest.approx(1.0, abs=1e-12)
        k_075 = round(0.75 * small_grid.length / (2 * math.pi))
        assert abs(small_grid.length * c.coeff(k_075)) < 1e-12

    def test_even_and_real(self, small_grid):
        bump = build_bump(BumpSpec(), small_grid)
        v = bump.values
        # grid point m and N-m mirror each other around x=0
        mirrored = v[(-np.arange(small_grid.num_points)) % small_grid.num_points]
        assert np.abs(v - mirrored).max() < 1e-12 * np.abs(v).max()

    def test_origin_value_against_quadrature_oracle(self, small_grid):
        spec = BumpSpec()
        bump = build_bump(spec, small_grid)
        center = bump.values[small_grid.num_points // 2]
        # independent quadrature of the fixed profile
        integral, _ = quad(lambda t: spec.profile(t), 0.0, spec.outer_radius, limit=200)
        line_value = integral / math.pi  # (1/2pi) * int over both signs
        # the periodization tail at |x| >= L shifts the grid value at ~1e-3
        assert center == pytest.approx(line_value, rel=1e-2)
        # and the grid value is exactly the Riemann sum of the sampled profile
        xi = small_grid.half_frequencies
        riemann = (spec.profile(xi).sum() * 2 - spec.profile(0.0)) / small_grid.length
        assert center == pytest.approx(float(riemann), rel=1e-13)

    def test_decay_toward_box_edge(self, small_grid):
        # glued-exponential profiles decay like exp(-c sqrt(x)): a few percent
        # of the peak at |x| = 32, dropping with the box size
        bump = build_bump(BumpSpec(), small_grid)
        center = bump.values[small_grid.num_points // 2]
        edge = np.abs(bump.values[: small_grid.num_points // 64]).max()
        assert edge < 0.05 * center
        bigger = Grid(2**13, 128.0)
        bump2 = build_bump(BumpSpec(), bigger)
        edge2 = np.abs(bump2.values[: bigger.num_points // 128]).max()
        assert edge2 < 0.3 * edge


class TestModulatedBump:
    def test_band_support_audit(self, medium_grid):
        omega = LAMBDA * 2.0**5
        f = modulated_bump(medium_grid, omega)
        c = forward_transform(f)
        xi = np.abs(medium_grid.frequencies)
        inside = (xi >= omega - 0.5) & (xi <= omega + 0.5)
        energy_out = np.sum(np.abs(c.coeffs[~inside]) ** 2)
        energy_total = np.sum(np.abs(c.coeffs) ** 2)
        assert energy_out < 1e-12 * energy_total

    def test_rejects_unresolved_band(self, small_grid):
        with pytest.raises(ResolutionError):
            modulated_bump(small_grid, 0.999 * small_grid.nyquist)


class TestParamsValidation:
    def test_accepts_theorem_range(self, medium_grid):
        IllposedDataParams(s=3.0, p=2.0, grid=medium_grid, num_terms=8)
        IllposedDataParams(s=2.6, p=math.inf, grid=medium_grid, num_terms=8)

    def test_rejects_low_regularity(self, medium_grid):
        with pytest.raises(ValueError, match="5/2"):
            IllposedDataParams(s=2.0, p=2.0, grid=medium_grid, num_terms=8)
        with pytest.raises(ValueError, match="2 \\+ 1/p"):
            IllposedDataParams(s=2.6, p=1.0, grid=medium_grid, num_terms=8)

    def test_range_enforcement_can_be_lifted(self, medium_grid):
        p = IllposedDataParams(
            s=2.6, p=1.0, grid=medium_grid, num_terms=8, enforce_range=False
        )
        assert p.s == 2.6

    def test_rejects_lambda_outside_window(self, medium_grid):
        with pytest.raises(ValueError, match="lambda"):
            IllposedDataParams(s=3.0, p=2.0, lam=1.5, grid=medium_grid, num_terms=8)

    def test_rejects_unresolved_top_band(self, medium_grid):
        with pytest.raises(ResolutionError):
            IllposedDataParams(s=3.0, p=2.0, grid=medium_grid, num_terms=12)


class TestBuildInitialData:
    def test_single_term_is_single_band(self, medium_grid):
        params = IllposedDataParams(s=3.0, p=2.0, grid=medium_grid, num_terms=1)
        data = build_initial_data(params)
        expected = modulated_bump(medium_grid, LAMBDA)
        assert np.abs(data.rho.values - expected.values).max() < 1e-14
        assert np.abs(data.u.values - expected.values).max() < 1e-14

    def test_block_extraction_recovers_terms(self, medium_params, medium_data, medium_bank):
        s = medium_params.s
        for n in range(3, medium_params.num_terms):
            expected = 2.0 ** (-n * (s - 1)) * modulated_bump(
                medium_params.grid, LAMBDA * 2.0**n
            )
            got = dyadic_block(medium_bank, medium_data.rho, n)
            assert lp_norm(got - expected, 2) < 1e-8 * lp_norm(expected, 2)

    def test_besov_norm_close_to_single_block_value(self, medium_params, medium_data,
                                                    medium_bank):
        s, p = medium_params.s, medium_params.p
        single = lp_norm(modulated_bump(medium_params.grid, LAMBDA * 2.0**4), p)
        got = besov_norm(medium_bank, medium_data.rho, BesovIndex(s - 1, p))
        assert got == pytest.approx(single, rel=0.01)

    def test_truncation_stability(self, medium_grid, medium_bank):
        s, p = 3.0, 2.0
        norms = []
        for n_terms in (6, 7, 8):
            params = IllposedDataParams(s=s, p=p, grid=medium_grid, num_terms=n_terms)
            data = build_initial_data(params)
            norms.append(
                (
                    besov_norm(medium_bank, data.rho, BesovIndex(s - 1, p)),
                    besov_norm(medium_bank, data.u, BesovIndex(s, p)),
                    2.0 ** (-n_terms * (s - 1)),
                )
            )
        for (r0, u0, tail0), (r1, u1, _) in zip(norms, norms[1:]):
            assert abs(r1 - r0) < 10 * tail0
            assert abs(u1 - u0) < 10 * tail0

    def test_tail_bound_reported(self, medium_params, medium_data):
        s, n = medium_params.s, medium_params.num_terms
        bump_sup = build_bump(medium_params.bump, medium_params.grid).sup_norm()
        expected = bump_sup * 2.0 ** (-n * (s - 1)) / (1 - 2.0 ** (-(s - 1)))
        assert medium_data.tail_bound == pytest.approx(expected, rel=1e-12)


class TestFirstVariation:
    def test_zero_data(self, small_grid):
        z = RealField(small_grid, np.zeros(small_grid.num_points))
        v0, w0 = first_variation(z, z)
        assert lp_norm(v0, math.inf) == 0.0
        assert lp_norm(w0, math.inf) == 0.0

    def test_rho_zero_annihilates_coupling(self, small_grid):
        z = RealField(small_grid, np.zeros(small_grid.num_points))
        u0 = modulated_bump(small_grid, LAMBDA * 2.0**3)
        v0, w0 = first_variation(z, u0)
        assert lp_norm(v0, math.inf) < 1e-15
        expected = nonlocal_velocity_terms(u0) + triple_product(u0, u0, derivative(u0))
        scale = lp_norm(expected, math.inf)
        assert lp_norm(w0 - expected, math.inf) < 1e-12 * scale

    def test_single_mode_trig_oracle(self, small_grid):
        # u0 = rho0 = cos(xi0 x):
        # u0^2 drho0 + rho0 u0 du0 = -(xi0/2)(sin(xi0 x) + sin(3 xi0 x))
        k = 6
        xi0 = 2 * math.pi * k / small_grid.length
        f = mode(small_grid, k)
        v0, _ = first_variation(f, f)
        expected = -(xi0 / 2.0) * (
            mode(small_grid, k, "sin").values + mode(small_grid, 3 * k, "sin").values
        )
        assert np.abs(v0.values - expected).max() < 1e-10 * xi0


class TestPointwiseFloor:
    def test_floor_matches_truncated_geometric_formula(self, medium_params, medium_data):
        # u0(0) = sum_n 2^(-ns) * phi(0) up to the periodization tail (~1e-3 here)
        s, n = medium_params.s, medium_params.num_terms
        phi0 = build_bump(medium_params.bump, medium_params.grid).values[
            medium_params.grid.num_points // 2
        ]
        geometric = (1 - 2.0 ** (-n * s)) * 2.0**s / (2.0**s - 1)
        expected_floor = 0.5 * (geometric * phi0) ** 2
        check = pointwise_floor_check(medium_data.u)
        assert check.floor == pytest.approx(expected_floor, rel=0.03)

    def test_sigma_positive_across_family(self, medium_grid):
        for lam in (67.0 / 48.0, 68.0 / 48.0, 69.0 / 48.0):
            for s in (2.6, 3.0, 3.5):
                params = IllposedDataParams(s=s, p=2.0, lam=lam, grid=medium_grid,
                                            num_terms=8)
                data = build_initial_data(params)
                check = pointwise_floor_check(data.u)
                assert check.sigma > 0

    def test_doubling_amplitude_quadruples_floor(self, medium_data):
        base = pointwise_floor_check(medium_data.u)
        doubled = pointwise_floor_check(2.0 * medium_data.u)
        assert doubled.floor == pytest.approx(4.0 * base.floor, rel=1e-12)

    def test_zero_at_origin_rejected(self, small_grid):
        f = mode(small_grid, 1, kind="sin")  # vanishes at x = 0
        with pytest.raises(FloorError):
            pointwise_floor_check(f)


class TestFieldIO:
    def test_round_trip(self, small_grid, tmp_path):
        f = modulated_bump(small_grid, LAMBDA * 4)
        path = tmp_path / "field.csv"
        save_field(f, path, time=0.25, note="trial")
        back, meta = load_field(path)
        assert back.grid == small_grid
        assert np.abs(back.values - f.values).max() < 1e-16
        assert float(meta["time"]) == 0.25
        assert meta["note"] == "'trial'"
