import math

import numpy as np
import pytest

from novlab import (
    BlowupError,
    RealField,
    SolverConfig,
    SystemState,
    derivative,
    fit_powerlaw,
    integrate,
    lp_norm,
    nonlocal_coupling_terms,
    nonlocal_velocity_terms,
    rhs,
    step_rk4,
    triple_product,
)

from conftest import mode


def _zero(grid):
    return RealField(grid, np.zeros(grid.num_points))


def _smoothing_oracle_terms(grid, k, amplitude):
    """Trig expansion of the u-only smoothing terms for u = A cos(omega x)."""
    om = 2 * math.pi * k / grid.length
    a3 = amplitude**3
    s1 = mode(grid, k, "sin").values
    s3 = mode(grid, 3 * k, "sin").values
    g1, g3 = 1.0 / (1.0 + om**2), 1.0 / (1.0 + 9.0 * om**2)
    p1 = -(3 * a3 * om / 4.0) * (s1 * g1 + s3 * g3)
    p2 = (3 * a3 * om**3 / 8.0) * (-s1 * g1 + 3 * s3 * g3)
    p3 = -(a3 * om**3 / 8.0) * (3 * s1 * g1 - s3 * g3)
    return p1 + p2 + p3


class TestNonlocalVelocityTerms:
    def test_zero(self, small_grid):
        out = nonlocal_velocity_terms(_zero(small_grid))
        assert lp_norm(out, math.inf) == 0.0

    def test_constant(self, small_grid):
        u = RealField(small_grid, np.full(small_grid.num_points, 1.3))
        out = nonlocal_velocity_terms(u)
        assert lp_norm(out, math.inf) < 1e-13

    @pytest.mark.parametrize("k,amplitude", [(3, 1.0), (7, 0.5)])
    def test_single_mode_trig_oracle(self, small_grid, k, amplitude):
        u = amplitude * mode(small_grid, k)
        out = nonlocal_velocity_terms(u)
        expected = _smoothing_oracle_terms(small_grid, k, amplitude)
        scale = np.abs(expected).max()
        assert np.abs(out.values - expected).max() < 1e-10 * scale


class TestNonlocalCouplingTerms:
    def test_rho_zero(self, small_grid):
        u = mode(small_grid, 4)
        out = nonlocal_coupling_terms(u, _zero(small_grid))
        assert lp_norm(out, math.inf) == 0.0

    def test_constant_u(self, small_grid):
        c = 2.0
        u = RealField(small_grid, np.full(small_grid.num_points, c))
        r = mode(small_grid, 5)
        out = nonlocal_coupling_terms(u, r)
        # u_x = 0 kills the plain term; the rest is
        # -(c/2) d/dx G(rho^2) = (c nu / 2) sin(2 nu x) / (1 + 4 nu^2)
        nu = 2 * math.pi * 5 / small_grid.length
        expected = (c * nu / 2.0) * mode(small_grid, 10, "sin").values / (1.0 + 4 * nu**2)
        assert np.abs(out.values - expected).max() < 1e-12

    def test_single_mode_trig_oracle(self, small_grid):
        ku, kr, a, b = 6, 2, 0.8, 1.1
        om = 2 * math.pi * ku / small_grid.length
        nu = 2 * math.pi * kr / small_grid.length
        u = a * mode(small_grid, ku)
        r = b * mode(small_grid, kr)
        out = nonlocal_coupling_terms(u, r)
        x = small_grid.points

        def gterm(freq):
            return np.sin(freq * x) / (1.0 + freq**2)

        ab2 = a * b * b
        q1 = (ab2 / 4.0) * (
            om * gterm(om)
            + 0.5 * (om + 2 * nu) * gterm(om + 2 * nu)
            + 0.5 * (om - 2 * nu) * gterm(om - 2 * nu)
        )
        q2 = (ab2 * om / 4.0) * (
            gterm(om) + 0.5 * gterm(om + 2 * nu) + 0.5 * gterm(om - 2 * nu)
        )
        expected = q1 + q2
        scale = np.abs(expected).max()
        assert np.abs(out.values - expected).max() < 1e-10 * scale


class TestRhs:
    def test_zero_state(self, small_grid):
        st = SystemState(rho=_zero(small_grid), u=_zero(small_grid))
        r_t, u_t = rhs(st)
        assert lp_norm(r_t, math.inf) == 0.0
        assert lp_norm(u_t, math.inf) == 0.0

    def test_u_zero_freezes_everything(self, small_grid):
        st = SystemState(rho=mode(small_grid, 3), u=_zero(small_grid))
        r_t, u_t = rhs(st)
        assert lp_norm(r_t, math.inf) == 0.0
        assert lp_norm(u_t, math.inf) == 0.0

    def test_matches_term_by_term_composition(self, medium_data):
        rho0, u0 = medium_data.rho, medium_data.u
        st = SystemState(rho=rho0, u=u0)
        r_t, u_t = rhs(st)
        rho_expected = triple_product(u0, u0, derivative(rho0)) + triple_product(
            rho0, u0, derivative(u0)
        )
        u_expected = (
            triple_product(u0, u0, derivative(u0))
            + nonlocal_velocity_terms(u0)
            + nonlocal_coupling_terms(u0, rho0)
        )
        assert lp_norm(r_t - rho_expected, math.inf) < 1e-12 * lp_norm(r_t, math.inf)
        assert lp_norm(u_t - u_expected, math.inf) < 1e-12 * lp_norm(u_t, math.inf)

    def test_even_data_gives_odd_rates(self, medium_data):
        st = SystemState(rho=medium_data.rho, u=medium_data.u)
        r_t, u_t = rhs(st)
        n = st.grid.num_points
        reflect = (-np.arange(n)) % n
        for f in (r_t, u_t):
            residual = np.abs(f.values + f.values[reflect]).max()
            assert residual < 1e-10 * np.abs(f.values).max()


class TestStepRK4:
    def test_zero_fixed_point(self, small_grid):
        st = SystemState(rho=_zero(small_grid), u=_zero(small_grid))
        out = step_rk4(st, 1e-2)
        assert lp_norm(out.rho, math.inf) == 0.0
        assert lp_norm(out.u, math.inf) == 0.0
        assert out.time == 1e-2

    def test_forward_backward_reversal_is_fifth_order_small(self, medium_data):
        # the dt^5 leading errors of the +dt and -dt steps cancel at leading
        # order, so the reversal residual decays at least like dt^5
        st = SystemState(rho=medium_data.rho, u=medium_data.u)
        resid = []
        dts = [2e-2, 1e-2, 5e-3]
        for dt in dts:
            fwd = step_rk4(st, dt)
            back = step_rk4(fwd, -dt)
            r = max(
                np.abs(back.rho.values - st.rho.values).max(),
                np.abs(back.u.values - st.u.values).max(),
            )
            resid.append(r)
        fit = fit_powerlaw(list(zip(dts, resid)), kind="loglog")
        assert fit.slope >= 4.5
        assert resid[-1] < 1e-15

    def test_first_order_consistency_with_rhs(self, medium_data):
        st = SystemState(rho=medium_data.rho, u=medium_data.u)
        r_t, u_t = rhs(st)
        pts = []
        for dt in (2e-3, 1e-3, 5e-4, 2.5e-4):
            out = step_rk4(st, dt)
            err = max(
                np.abs(out.rho.values - st.rho.values - dt * r_t.values).max(),
                np.abs(out.u.values - st.u.values - dt * u_t.values).max(),
            )
            pts.append((dt, err))
        fit = fit_powerlaw(pts, kind="loglog")
        assert fit.slope == pytest.approx(2.0, abs=0.1)


class TestIntegrate:
    def test_zero_horizon_returns_initial_state(self, medium_data):
        st = SystemState(rho=medium_data.rho, u=medium_data.u)
        traj = integrate(st, SolverConfig(dt=1e-3, t_final=0.0))
        assert traj.states == (st,)
        assert traj.sup_norms == ()

    def test_checkpoints_hit_exactly(self, medium_data):
        st = SystemState(rho=medium_data.rho, u=medium_data.u)
        times = [1e-3, 2.5e-3, 4e-3]
        traj = integrate(st, SolverConfig(dt=3e-4, t_final=4e-3), checkpoints=times)
        assert [s.time for s in traj.states] == [0.0] + times
        assert len(traj.sup_norms) > 0

    def test_self_convergence_order_four(self, small_grid):
        # smooth O(1) data so the truncation error sits far above roundoff
        from novlab import BumpSpec, build_bump

        bump = 8.0 * build_bump(BumpSpec(), small_grid)
        st = SystemState(rho=bump, u=bump)
        t_final = 0.1
        finals = []
        for dt in (0.02, 0.01, 0.005):
            traj = integrate(st, SolverConfig(dt=dt, t_final=t_final))
            finals.append(traj.states[-1])
        e1 = max(
            np.abs(finals[0].rho.values - finals[1].rho.values).max(),
            np.abs(finals[0].u.values - finals[1].u.values).max(),
        )
        e2 = max(
            np.abs(finals[1].rho.values - finals[2].rho.values).max(),
            np.abs(finals[1].u.values - finals[2].u.values).max(),
        )
        order = math.log2(e1 / e2)
        assert order == pytest.approx(4.0, abs=0.3)

    def test_blowup_guard(self, medium_data):
        # inflate the data until the cubic rates destabilize this step size
        st = SystemState(rho=50.0 * medium_data.rho, u=50.0 * medium_data.u)
        cfg = SolverConfig(dt=0.25, t_final=2.0)
        with pytest.raises(BlowupError):
            integrate(st, cfg)

    def test_threshold_must_clear_initial_sup(self, medium_data):
        st = SystemState(rho=medium_data.rho, u=medium_data.u)
        cfg = SolverConfig(dt=1e-3, t_final=1e-2, blowup_threshold=1e-9)
        with pytest.raises(ValueError, match="initial sup"):
            integrate(st, cfg)

    def test_dealias_flag_changes_high_band_dynamics(self, small_grid):
        # a unit mode at half Nyquist: its cube folds back onto the mode
        # itself without padding, so the flag must change the answer
        k = small_grid.num_points // 4
        f = mode(small_grid, k)
        st = SystemState(rho=f, u=f)
        r_on, u_on = rhs(st, dealias=True)
        r_off, u_off = rhs(st, dealias=False)
        assert lp_norm(r_on - r_off, math.inf) > 1e-3
        assert lp_norm(u_on - u_off, math.inf) > 1e-3
