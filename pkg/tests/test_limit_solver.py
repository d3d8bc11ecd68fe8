"""Incompressible limit solver: analytic oracles and conservation."""

import numpy as np
import pytest

from qnl.errors import BlowUpError, NonpositiveTemperatureError
from qnl.limit_solver import (LimitState, PhysParams, default_limit_dt,
                              limit_step, ns_rhs, recover_pressure, run_limit,
                              strain_dissipation)
from qnl.projections import leray_p
from qnl.spectral import (constant_scalar, divergence, gradient, laplacian,
                          make_grid, scalar_from_function, sobolev_norm,
                          vector_from_functions, zeros_vector)

from conftest import smooth_vector


def taylor_green(grid):
    return vector_from_functions(grid,
                                 lambda x, y: np.sin(x) * np.cos(y),
                                 lambda x, y: -np.cos(x) * np.sin(y))


class TestPhysParams:
    def test_euler_detection(self):
        assert PhysParams(0, 0, 0).is_euler
        assert not PhysParams(0.1, 0, 0).is_euler

    def test_viscous_constraints(self):
        PhysParams(0.05, 0.0, 0.05).validate(2)
        PhysParams(0.05, -0.04, 0.0).validate(2)  # 2*mu + N*nu = 0.02 > 0
        with pytest.raises(ValueError):
            PhysParams(0.0, 0.1, 0.0).validate(2)  # mu = 0 but not Euler
        with pytest.raises(ValueError):
            PhysParams(0.05, -0.06, 0.0).validate(2)
        with pytest.raises(ValueError):
            PhysParams(-0.1, 0.0, 0.0).validate(2)


class TestNsRhs:
    def test_pure_heat_flow(self, grid2d):
        theta = scalar_from_function(grid2d, lambda x, y: np.sin(x) + 2.0)
        state = LimitState(zeros_vector(grid2d), theta)
        params = PhysParams(0.0, 0.0, 0.3)
        dv, dtheta = ns_rhs(state, params)
        assert sobolev_norm(dv, 0) < 1e-14
        assert sobolev_norm(dtheta - 0.3 * laplacian(theta), 0) < 1e-13

    def test_taylor_green_tendency(self, grid2d):
        # the Taylor-Green nonlinearity is a pure gradient, so P kills it
        mu = 0.1
        state = LimitState(taylor_green(grid2d), constant_scalar(grid2d, 1.0))
        dv, _ = ns_rhs(state, PhysParams(mu, 0.0, 0.0))
        assert sobolev_norm(dv - (-2.0 * mu) * state.v, 0) < 1e-12

    def test_rest_state(self, grid2d):
        state = LimitState(zeros_vector(grid2d), constant_scalar(grid2d, 2.0))
        dv, dtheta = ns_rhs(state, PhysParams(0.05, 0.0, 0.05))
        assert sobolev_norm(dv, 0) < 1e-15
        assert sobolev_norm(dtheta, 0) < 1e-15


class TestRecoverPressure:
    def test_zero_velocity(self, grid2d):
        state = LimitState(zeros_vector(grid2d), constant_scalar(grid2d, 1.0))
        assert sobolev_norm(recover_pressure(state), 0) < 1e-15

    def test_taylor_green_pressure(self, grid2d):
        # direct substitution: (v.grad)v = (sin 2x)/2, (sin 2y)/2) so that
        # grad(Pi) = -(v.grad)v gives Pi = (cos 2x + cos 2y)/4
        state = LimitState(taylor_green(grid2d), constant_scalar(grid2d, 1.0))
        pi = recover_pressure(state, PhysParams(0.1, 0.0, 0.0))
        expected = scalar_from_function(
            grid2d, lambda x, y: 0.25 * (np.cos(2 * x) + np.cos(2 * y)))
        assert sobolev_norm(pi - expected, 0) < 1e-13

    def test_poisson_residual_single_mode(self, grid2d):
        from qnl.spectral import advect
        v = vector_from_functions(grid2d,
                                  lambda x, y: np.sin(y),
                                  lambda x, y: np.zeros_like(y))
        state = LimitState(v, constant_scalar(grid2d, 1.0))
        pi = recover_pressure(state)
        residual = laplacian(pi) + divergence(advect(v, v))
        assert sobolev_norm(residual, 0) < 1e-12

    def test_gradient_completes_projected_tendency(self, grid2d, rng):
        # grad(Pi) + projected tendency recovers the unprojected tendency
        params = PhysParams(0.07, 0.0, 0.0)
        v = leray_p(smooth_vector(grid2d, rng))
        state = LimitState(v, constant_scalar(grid2d, 1.0))
        from qnl.spectral import advect
        full = -1.0 * advect(v, v) + params.mu * laplacian(v)
        dv, _ = ns_rhs(state, params)
        pi = recover_pressure(state, params)
        assert sobolev_norm(dv + gradient(pi) - full, 0) \
            <= 1e-11 * max(1.0, sobolev_norm(full, 0))


class TestStepping:
    def test_taylor_green_decay(self):
        grid = make_grid(2, 32)
        mu = 0.1
        params = PhysParams(mu, 0.0, 0.0)
        state = LimitState(taylor_green(grid), constant_scalar(grid, 1.0))
        norm0 = sobolev_norm(state.v, 0)
        traj = run_limit(state, params, 1.0, dt=1e-3, snapshot_times=[0.0, 1.0])
        end = traj.state_at(1.0)
        expected = np.exp(-2.0 * mu * 1.0) * norm0
        assert abs(sobolev_norm(end.v, 0) - expected) <= 1e-6 * expected

    def test_euler_energy_conservation(self, rng):
        grid = make_grid(2, 32)
        v0 = leray_p(smooth_vector(grid, rng))
        state = LimitState(v0, constant_scalar(grid, 1.0))
        e0 = sobolev_norm(state.v, 0)
        traj = run_limit(state, PhysParams(0, 0, 0), 1.0, dt=0.01,
                         snapshot_times=[0.0, 1.0])
        e1 = sobolev_norm(traj.state_at(1.0).v, 0)
        assert abs(e1 - e0) <= 1e-8 * e0

    def test_heat_mode_exact_decay(self):
        grid = make_grid(2, 32)
        kappa = 0.5
        theta0 = scalar_from_function(grid, lambda x, y: 2.0 + np.sin(x))
        state = LimitState(zeros_vector(grid), theta0)
        traj = run_limit(state, PhysParams(0.05, 0.0, kappa), 1.0, dt=0.05,
                         snapshot_times=[0.0, 1.0])
        expected = scalar_from_function(
            grid, lambda x, y: 2.0 + np.exp(-kappa) * np.sin(x))
        assert sobolev_norm(traj.state_at(1.0).theta - expected, 0) < 1e-8

    def test_divergence_free_every_step(self, grid2d, rng):
        params = PhysParams(0.05, 0.0, 0.05)
        state = LimitState(leray_p(smooth_vector(grid2d, rng)),
                           constant_scalar(grid2d, 2.0))
        traj = run_limit(state, params, 0.1, dt=0.01)
        for t in traj.times:
            v = traj.state_at(t).v
            assert sobolev_norm(divergence(v), 0) <= 1e-10 * max(1.0, sobolev_norm(v, 0))

    def test_mean_temperature_increases_by_dissipation(self, grid2d, rng):
        params = PhysParams(0.05, 0.0, 0.05)
        state = LimitState(leray_p(smooth_vector(grid2d, rng)),
                           constant_scalar(grid2d, 2.0))
        traj = run_limit(state, params, 0.2, dt=0.01)
        means = [traj.state_at(t).theta.mean for t in traj.times]
        diffs = np.diff(means)
        assert np.all(diffs >= -1e-12)
        assert means[-1] > means[0]

    def test_temporal_self_convergence_order(self, grid2d, rng):
        params = PhysParams(0.0, 0.0, 0.0)
        v0 = leray_p(smooth_vector(grid2d, rng))
        theta0 = constant_scalar(grid2d, 2.0)
        ends = {}
        for dt in (0.02, 0.01, 0.005):
            traj = run_limit(LimitState(v0.copy(), theta0.copy()), params, 0.2,
                             dt=dt, snapshot_times=[0.0, 0.2])
            ends[dt] = traj.state_at(0.2).v
        e1 = sobolev_norm(ends[0.02] - ends[0.01], 0)
        e2 = sobolev_norm(ends[0.01] - ends[0.005], 0)
        assert np.log2(e1 / e2) >= 3.5

    def test_blow_up_guard(self, grid2d, rng):
        # CFL-violating Euler step on a large field explodes quickly
        v0 = leray_p(smooth_vector(grid2d, rng)) * 100.0
        state = LimitState(v0, constant_scalar(grid2d, 2.0))
        with pytest.raises(BlowUpError):
            run_limit(state, PhysParams(0, 0, 0), 20.0, dt=1.0)

    def test_positivity_monitor(self, grid2d):
        theta = scalar_from_function(grid2d, lambda x, y: 0.5 + np.sin(x))
        state = LimitState(zeros_vector(grid2d), theta)
        with pytest.raises(NonpositiveTemperatureError):
            run_limit(state, PhysParams(0.05, 0, 0.05), 0.1, dt=0.01)

    def test_rejects_divergent_initial_velocity(self, grid2d, rng):
        u = smooth_vector(grid2d, rng)  # generic field, not divergence-free
        state = LimitState(u, constant_scalar(grid2d, 2.0))
        with pytest.raises(ValueError):
            run_limit(state, PhysParams(0, 0, 0), 0.1, dt=0.01)

    def test_limit_step_single(self, grid2d):
        state = LimitState(taylor_green(grid2d), constant_scalar(grid2d, 1.0))
        out = limit_step(state, PhysParams(0.1, 0.0, 0.0), 1e-3)
        decay = np.exp(-2.0 * 0.1 * 1e-3)
        assert sobolev_norm(out.v - decay * state.v, 0) < 1e-12

    def test_default_dt_is_advective(self, grid2d):
        state = LimitState(taylor_green(grid2d), constant_scalar(grid2d, 1.0))
        dt = default_limit_dt(state)
        vmax = max(np.abs(c.samples()).max() for c in state.v)
        assert abs(dt - 0.5 * grid2d.spacing / vmax) < 1e-12


class TestHermiteInterpolation:
    def test_between_node_accuracy(self, grid2d, rng):
        params = PhysParams(0.02, 0.0, 0.0)
        v0 = leray_p(smooth_vector(grid2d, rng))
        state = LimitState(v0, constant_scalar(grid2d, 2.0))
        coarse = run_limit(state, params, 0.2, dt=0.02)
        fine = run_limit(LimitState(v0.copy(), constant_scalar(grid2d, 2.0)),
                         params, 0.2, dt=0.002)
        t_mid = 0.07  # off the coarse node grid
        diff = sobolev_norm(coarse.v_at(t_mid) - fine.v_at(t_mid), 0)
        assert diff < 1e-7

    def test_node_lookup_exact(self, grid2d, rng):
        params = PhysParams(0.02, 0.0, 0.0)
        state = LimitState(leray_p(smooth_vector(grid2d, rng)),
                           constant_scalar(grid2d, 2.0))
        traj = run_limit(state, params, 0.1, dt=0.01)
        t = traj.times[3]
        assert sobolev_norm(traj.v_at(t) - traj.state_at(t).v, 0) < 1e-14


def test_strain_dissipation_shear_example(grid2d):
    # v = (sin y, 0): only cross term d_y v_x = cos y contributes,
    # sum_ij (d_i v_j + d_j v_i)^2 = 2 cos^2 y
    v = vector_from_functions(grid2d,
                              lambda x, y: np.sin(y),
                              lambda x, y: np.zeros_like(x))
    mu = 0.3
    out = strain_dissipation(v, mu)
    expected = scalar_from_function(grid2d, lambda x, y: mu * np.cos(y) ** 2)
    assert sobolev_norm(out - expected, 0) < 1e-13
