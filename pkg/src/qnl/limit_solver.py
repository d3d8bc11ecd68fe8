"""Incompressible Navier-Stokes / Euler limit system with temperature.

The velocity obeys the pressure-free projected momentum equation and the
temperature is advected with heat conduction and viscous self-heating:

    dv/dt     = P(-(v.grad)v) + mu lap(v)
    dtheta/dt = -(v.grad)theta + kappa lap(theta)
                + (mu/2) sum_ij (d_i v_j + d_j v_i)^2

Pressure is eliminated by the Leray projection during stepping and recovered
on demand from the Poisson equation lap(Pi) = -div((v.grad)v - mu lap(v)).
Time stepping is RK4 with exact integrating factors for both Laplacians, so
the Euler case (all coefficients zero) degenerates to classical RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, NonpositiveTemperatureError
from .projections import leray_p
from .spectral import (SpectralScalar, SpectralVector, advect, derivative,
                       divergence, inverse_laplacian, laplacian, product,
                       sobolev_norm)
from .stepping import lawson_rk4_step, substep_count

BLOWUP_FACTOR = 1e6
DIV_TOL = 1e-10


@dataclass(frozen=True)
class PhysParams:
    """Viscosity / conduction coefficients (c_V = R = 1 throughout)."""

    mu: float = 0.0
    nu: float = 0.0
    kappa: float = 0.0

    @property
    def is_euler(self) -> bool:
        return self.mu == 0.0 and self.nu == 0.0 and self.kappa == 0.0

    def validate(self, dims: int) -> None:
        if self.mu < 0 or self.kappa < 0:
            raise ValueError("mu and kappa must be non-negative")
        if not self.is_euler:
            if self.mu <= 0 or 2.0 * self.mu + dims * self.nu <= 0:
                raise ValueError(
                    "viscous mode needs mu > 0 and 2*mu + N*nu > 0 "
                    f"(got mu={self.mu}, nu={self.nu})")


@dataclass(eq=False)
class LimitState:
    """Divergence-free velocity, positive temperature, optional pressure."""

    v: SpectralVector
    theta: SpectralScalar
    pi: SpectralScalar | None = None

    @property
    def grid(self):
        return self.v.grid

    def validate(self) -> None:
        div_norm = sobolev_norm(divergence(self.v), 0)
        if div_norm > DIV_TOL * max(1.0, sobolev_norm(self.v, 0)):
            raise ValueError(f"velocity is not divergence-free: |div v| = {div_norm:.3e}")
        if self.theta.samples().min() <= 0.0:
            raise NonpositiveTemperatureError("initial temperature not positive")


def strain_dissipation(v: SpectralVector, mu: float) -> SpectralScalar:
    """(mu/2) * sum_ij (d_i v_j + d_j v_i)^2, dealiased."""
    grid = v.grid
    out = None
    for i in range(grid.dims):
        for j in range(i, grid.dims):
            sij = derivative(v[j], i) + derivative(v[i], j)
            term = product(sij, sij)
            if i != j:
                term = term * 2.0
            out = term if out is None else out + term
    return out * (0.5 * mu)


def ns_rhs(state: LimitState, params: PhysParams):
    """Full tendency (dv, dtheta) of the limit system."""
    v, theta = state.v, state.theta
    dv = leray_p(-advect(v, v))
    if params.mu != 0.0:
        dv = dv + params.mu * laplacian(v)
    dtheta = -advect(v, theta)
    if params.kappa != 0.0:
        dtheta = dtheta + params.kappa * laplacian(theta)
    if params.mu != 0.0:
        dtheta = dtheta + strain_dissipation(v, params.mu)
    return dv, dtheta


def recover_pressure(state: LimitState, params: PhysParams | None = None) -> SpectralScalar:
    """Mean-zero Pi with lap(Pi) = -div((v.grad)v - mu lap(v))."""
    mu = params.mu if params is not None else 0.0
    unprojected = advect(state.v, state.v)
    if mu != 0.0:
        unprojected = unprojected - mu * laplacian(state.v)
    return inverse_laplacian(-divergence(unprojected))


def _pack(state: LimitState):
    return tuple(c.coeffs for c in state.v) + (state.theta.coeffs,)


def _unpack(grid, y) -> LimitState:
    n = grid.dims
    v = SpectralVector(grid, tuple(SpectralScalar(grid, y[a]) for a in range(n)))
    return LimitState(leray_p(v), SpectralScalar(grid, y[n]))


def _make_ops(grid, params: PhysParams):
    k_sq = grid.k_sq
    n = grid.dims

    def explicit(y, t):
        state = _unpack(grid, y)
        dv, dtheta = ns_rhs(state, params)
        parts = [dv[a].coeffs + params.mu * k_sq * state.v[a].coeffs for a in range(n)]
        parts.append(dtheta.coeffs + params.kappa * k_sq * y[n])
        return tuple(parts)

    def propagate(y, delta):
        fv = np.exp(-params.mu * k_sq * delta) if params.mu else None
        ft = np.exp(-params.kappa * k_sq * delta) if params.kappa else None
        parts = [y[a] if fv is None else fv * y[a] for a in range(n)]
        parts.append(y[n] if ft is None else ft * y[n])
        return tuple(parts)

    return explicit, propagate


def limit_step(state: LimitState, params: PhysParams, dt: float,
               _ops=None) -> LimitState:
    """One integrating-factor RK4 step; velocity re-projected afterwards."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    explicit, propagate = _ops if _ops is not None else _make_ops(state.grid, params)
    y = lawson_rk4_step(_pack(state), 0.0, dt, explicit, propagate)
    return _unpack(state.grid, y)


def default_limit_dt(state: LimitState) -> float:
    """Advective CFL bound 0.5 h / |v|_inf (diffusion is exact here)."""
    vmax = max(np.abs(c.samples()).max() for c in state.v)
    h = state.grid.spacing
    return 0.5 * h / max(vmax, 1e-12)


@dataclass(eq=False)
class LimitTrajectory:
    """Dense limit solve with stored tendencies for Hermite interpolation."""

    grid: object
    params: PhysParams
    times: np.ndarray
    v_nodes: list           # per node: (dims, *shape) complex array
    theta_nodes: list       # per node: shape complex array
    dv_nodes: list          # per node: (dims, *shape) tendency of v
    snapshot_times: np.ndarray
    states: dict = field(default_factory=dict)  # time -> LimitState with pi

    def _vector(self, block) -> SpectralVector:
        return SpectralVector(
            self.grid, tuple(SpectralScalar(self.grid, block[a].copy())
                             for a in range(self.grid.dims)))

    def node_index(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9:
            raise ValueError(f"time {t} is not a trajectory node")
        return idx

    def state_at(self, t: float) -> LimitState:
        idx = self.node_index(t)
        return LimitState(self._vector(self.v_nodes[idx]),
                          SpectralScalar(self.grid, self.theta_nodes[idx].copy()))

    def snapshot_state(self, t: float) -> LimitState:
        """Stored snapshot (with recovered pressure) nearest to t."""
        idx = int(np.argmin(np.abs(self.snapshot_times - t)))
        key = float(self.snapshot_times[idx])
        if abs(key - t) > 1e-9:
            raise ValueError(f"time {t} is not a snapshot time")
        return self.states[key]

    def v_at(self, t: float) -> SpectralVector:
        """Cubic Hermite interpolation of the velocity between nodes."""
        times = self.times
        if t <= times[0]:
            return self._vector(self.v_nodes[0])
        if t >= times[-1]:
            return self._vector(self.v_nodes[-1])
        i = int(np.searchsorted(times, t, side="right")) - 1
        if abs(times[i] - t) < 1e-13:
            return self._vector(self.v_nodes[i])
        h = times[i + 1] - times[i]
        s = (t - times[i]) / h
        h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
        h10 = s * (1.0 - s) ** 2
        h01 = s * s * (3.0 - 2.0 * s)
        h11 = s * s * (s - 1.0)
        block = (h00 * self.v_nodes[i] + h01 * self.v_nodes[i + 1]
                 + h * (h10 * self.dv_nodes[i] + h11 * self.dv_nodes[i + 1]))
        return self._vector(block)


def run_limit(initial: LimitState, params: PhysParams, t_end: float,
              dt: float | None = None,
              snapshot_times=None) -> LimitTrajectory:
    """Integrate the limit system, recording every node for interpolation."""
    grid = initial.grid
    params.validate(grid.dims)
    initial.validate()
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if snapshot_times is None:
        snapshot_times = np.array([0.0, t_end])
    snapshot_times = np.asarray(sorted(set(float(t) for t in snapshot_times)))
    if snapshot_times[0] > 0.0:
        snapshot_times = np.concatenate([[0.0], snapshot_times])
    if dt is None:
        dt = default_limit_dt(initial)

    explicit, propagate = _make_ops(grid, params)
    guard = BLOWUP_FACTOR * max(sobolev_norm(initial.v, 1), 1e-8)

    times = [0.0]
    state = LimitState(leray_p(initial.v), initial.theta.copy())
    v_nodes = [np.stack([c.coeffs for c in state.v])]
    theta_nodes = [state.theta.coeffs.copy()]
    dv0, _ = ns_rhs(state, params)
    dv_nodes = [np.stack([c.coeffs for c in dv0])]

    t = 0.0
    for target in snapshot_times[1:]:
        nsub = substep_count(target - t, dt)
        sub = (target - t) / nsub
        span_start = t
        for i in range(1, nsub + 1):
            y = lawson_rk4_step(_pack(state), t, sub, explicit, propagate)
            state = _unpack(grid, y)
            t = target if i == nsub else span_start + i * sub
            if sobolev_norm(state.v, 1) > guard:
                raise BlowUpError(f"limit velocity blew up at t = {t:.4f}")
            if state.theta.samples().min() <= 0.0:
                raise NonpositiveTemperatureError(
                    f"limit temperature lost positivity at t = {t:.4f}")
            times.append(t)
            v_nodes.append(np.stack([c.coeffs for c in state.v]))
            theta_nodes.append(state.theta.coeffs.copy())
            dv, _ = ns_rhs(state, params)
            dv_nodes.append(np.stack([c.coeffs for c in dv]))

    traj = LimitTrajectory(grid, params, np.asarray(times), v_nodes,
                           theta_nodes, dv_nodes, snapshot_times)
    for ts in snapshot_times:
        snap = traj.state_at(ts)
        snap.pi = recover_pressure(snap, params)
        traj.states[float(ts)] = snap
    return traj
