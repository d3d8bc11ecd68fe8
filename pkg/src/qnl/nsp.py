"""Rescaled compressible Navier-Stokes-Poisson solver on the torus.

State is (rho, u, theta, phi) with the elliptic constraint
-lambda * lap(phi) = rho - 1.  The singular 1/lambda coupling lives entirely
in the skew exchange between the gradient velocity part Qu and the electric
gradient grad(phi); the stepper advances that pair in rotated (filtered)
variables so the exchange is integrated exactly, while everything else --
transport, pressure, viscous and heating terms, and the O(1) electric
residue of the continuity equation -- is advanced explicitly by RK4 with
integrating factors for the constant-coefficient Laplacians on the
divergence-free velocity part and the temperature.  After each step phi is
re-solved from the Poisson equation, projecting the state back onto the
constraint manifold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (BlowUpError, DegenerateDensityError, MassDefectError,
                     NonpositiveTemperatureError)
from .limit_solver import PhysParams, strain_dissipation
from .oscillation import rotate_slots
from .projections import decompose, leray_q
from .spectral import (MEAN_TOL, SpectralScalar, SpectralVector, advect,
                       constant_scalar, divergence, gradient, laplacian,
                       product, sobolev_norm, transform_forward)
from .stepping import lawson_rk4_step, substep_count

RHO_FLOOR = 1e-6
BLOWUP_FACTOR = 1e6
DEFAULT_DT_MAX = 0.01
DEFAULT_PHASE_RESOLUTION = 16


@dataclass(eq=False)
class NSPState:
    """Density (mean 1), velocity, positive temperature, rescaled potential."""

    rho: SpectralScalar
    u: SpectralVector
    theta: SpectralScalar
    phi: SpectralScalar | None = None

    @property
    def grid(self):
        return self.rho.grid

    def mass(self) -> float:
        return self.rho.mean

    def poisson_residual(self, lam: float) -> float:
        """L2 norm of -lambda*lap(phi) - (rho - 1)."""
        if self.phi is None:
            return float("nan")
        res = (-lam) * laplacian(self.phi) - self.rho + constant_scalar(self.grid, 1.0)
        return sobolev_norm(res, 0)


def poisson_solve(rho: SpectralScalar, lam: float,
                  mean_tol: float = MEAN_TOL) -> SpectralScalar:
    """Mean-zero phi with -lambda*lap(phi) = rho - 1."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    defect = abs(rho.mean - 1.0)
    if defect > mean_tol:
        raise MassDefectError(f"density mean differs from 1 by {defect:.3e}")
    grid = rho.grid
    coeffs = rho.coeffs * grid.inv_k_sq / lam  # k = 0 mode killed by inv_k_sq
    return SpectralScalar(grid, coeffs)


def _inverse_density(rho: SpectralScalar) -> SpectralScalar:
    samples = rho.samples()
    if samples.min() <= RHO_FLOOR:
        raise DegenerateDensityError(
            f"density reached floor: min rho = {samples.min():.3e}")
    return transform_forward(rho.grid, 1.0 / samples)


def nsp_rhs_nonstiff(state: NSPState, params: PhysParams, lam: float):
    """Tendencies (drho, du, dtheta) excluding the 1/lambda skew exchange.

    The momentum tendency omits the electric term -(1/lambda) grad(phi)
    entirely (it is exactly the rotated pair's generator); everything else,
    including the density-weighted viscous terms, is assembled here.
    """
    grid = state.grid
    rho, u, theta = state.rho, state.u, state.theta
    inv_rho = _inverse_density(rho)

    flux = SpectralVector(grid, tuple(product(rho, u[a]) for a in range(grid.dims)))
    drho = -divergence(flux)

    du = -advect(u, u)
    grad_p = gradient(product(rho, theta))
    du = du - SpectralVector(grid, tuple(product(inv_rho, grad_p[a])
                                         for a in range(grid.dims)))
    if params.mu != 0.0 or params.nu != 0.0:
        visc = params.mu * laplacian(u) + (params.mu + params.nu) * gradient(divergence(u))
        du = du + SpectralVector(grid, tuple(product(inv_rho, visc[a])
                                             for a in range(grid.dims)))

    div_u = divergence(u)
    dtheta = -advect(u, theta) - product(theta, div_u)
    heat = None
    if params.kappa != 0.0:
        heat = params.kappa * laplacian(theta)
    if params.nu != 0.0:
        term = params.nu * product(div_u, div_u)
        heat = term if heat is None else heat + term
    if params.mu != 0.0:
        term = strain_dissipation(u, params.mu)  # equals 2*mu*D(u):D(u)
        heat = term if heat is None else heat + term
    if heat is not None:
        dtheta = dtheta + product(inv_rho, heat)
    return drho, du, dtheta


def _electric_residue(u: SpectralVector, grad_phi: SpectralVector) -> SpectralVector:
    """Nonstiff part of d/dt grad(phi): -Q(u * lap(phi))."""
    lap_phi = divergence(grad_phi)
    grid = u.grid
    prod = SpectralVector(grid, tuple(product(u[a], lap_phi) for a in range(grid.dims)))
    return -leray_q(prod)


def _pack(rho, pu, qu, gphi, theta):
    return ((rho.coeffs,) + tuple(c.coeffs for c in pu) + tuple(c.coeffs for c in qu)
            + tuple(c.coeffs for c in gphi) + (theta.coeffs,))


def _unpack(grid, y):
    n = grid.dims
    rho = SpectralScalar(grid, y[0])
    pu = SpectralVector(grid, tuple(SpectralScalar(grid, y[1 + a]) for a in range(n)))
    qu = SpectralVector(grid, tuple(SpectralScalar(grid, y[1 + n + a]) for a in range(n)))
    gphi = SpectralVector(grid, tuple(SpectralScalar(grid, y[1 + 2 * n + a])
                                      for a in range(n)))
    theta = SpectralScalar(grid, y[1 + 3 * n])
    return rho, pu, qu, gphi, theta


def _make_ops(grid, params: PhysParams, lam: float):
    k_sq = grid.k_sq
    n = grid.dims

    def explicit(y, t):
        rho, pu, qu, gphi, theta = _unpack(grid, y)
        u = pu + qu
        drho, du, dtheta = nsp_rhs_nonstiff(
            NSPState(rho, u, theta, None), params, lam)
        duq = leray_q(du)
        parts = [drho.coeffs]
        parts += [du[a].coeffs - duq[a].coeffs + params.mu * k_sq * pu[a].coeffs
                  for a in range(n)]
        parts += [c.coeffs for c in duq]
        residue = _electric_residue(u, gphi)
        parts += [c.coeffs for c in residue]
        parts.append(dtheta.coeffs + params.kappa * k_sq * theta.coeffs)
        return tuple(parts)

    def propagate(y, delta):
        fv = np.exp(-params.mu * k_sq * delta) if params.mu else None
        ft = np.exp(-params.kappa * k_sq * delta) if params.kappa else None
        rho, pu, qu, gphi, theta = _unpack(grid, y)
        qu_rot, gphi_rot = rotate_slots(delta / lam, qu, gphi)
        parts = [rho.coeffs]
        parts += [pu[a].coeffs if fv is None else fv * pu[a].coeffs for a in range(n)]
        parts += [c.coeffs for c in qu_rot]
        parts += [c.coeffs for c in gphi_rot]
        parts.append(theta.coeffs if ft is None else ft * theta.coeffs)
        return tuple(parts)

    return explicit, propagate


def nsp_step(state: NSPState, params: PhysParams, lam: float, dt: float,
             _ops=None) -> NSPState:
    """One Lawson step; phi re-solved from the updated density afterwards."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = state.grid
    explicit, propagate = _ops if _ops is not None else _make_ops(grid, params, lam)
    phi = state.phi if state.phi is not None else poisson_solve(state.rho, lam)
    pu, qu, _ = decompose(state.u)
    y = lawson_rk4_step(_pack(state.rho, pu, qu, gradient(phi), state.theta),
                        0.0, dt, explicit, propagate)
    rho, pu, qu, _, theta = _unpack(grid, y)
    new_phi = poisson_solve(rho, lam)
    new = NSPState(rho, pu + qu, theta, new_phi)
    if new.theta.samples().min() <= 0.0:
        raise NonpositiveTemperatureError("temperature lost positivity in nsp_step")
    return new


def default_nsp_dt(state: NSPState, lam: float,
                   phase_resolution: int = DEFAULT_PHASE_RESOLUTION,
                   dt_max: float = DEFAULT_DT_MAX) -> float:
    """min(advective CFL, one oscillation period / phase_resolution, dt_max)."""
    umax = max(np.abs(c.samples()).max() for c in state.u)
    h = state.grid.spacing
    cfl = 0.5 * h / max(umax, 1e-12)
    return min(cfl, 2.0 * np.pi * lam / phase_resolution, dt_max)


@dataclass(eq=False)
class NSPTrajectory:
    """Snapshot states plus per-snapshot diagnostics of one NSP run."""

    lam: float
    params: PhysParams
    times: np.ndarray
    states: list
    diagnostics: list = field(default_factory=list)

    def state_at(self, t: float) -> NSPState:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9:
            raise ValueError(f"time {t} is not a snapshot time")
        return self.states[idx]


def _diagnostic_row(t, state: NSPState, lam: float, norm_s: float):
    return {
        "t": t,
        "mass": state.mass(),
        "min_rho": float(state.rho.samples().min()),
        "min_theta": float(state.theta.samples().min()),
        "rho_hs": sobolev_norm(state.rho, norm_s),
        "u_hs": sobolev_norm(state.u, norm_s),
        "theta_hs": sobolev_norm(state.theta, norm_s),
        "grad_phi_hs1": sobolev_norm(gradient(state.phi), norm_s + 1.0),
        "poisson_residual": state.poisson_residual(lam),
    }


def run_nsp(initial: NSPState, params: PhysParams, lam: float, t_end: float,
            dt: float | None = None, snapshot_times=None, norm_s: float = 3.0,
            phase_resolution: int = DEFAULT_PHASE_RESOLUTION,
            dt_max: float = DEFAULT_DT_MAX) -> NSPTrajectory:
    """Integrate to t_end, recording snapshots and diagnostics."""
    grid = initial.grid
    params.validate(grid.dims)
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if snapshot_times is None:
        snapshot_times = np.array([0.0, t_end])
    snapshot_times = np.asarray(sorted(set(float(t) for t in snapshot_times)))
    if snapshot_times[0] > 0.0:
        snapshot_times = np.concatenate([[0.0], snapshot_times])
    if dt is None:
        dt = default_nsp_dt(initial, lam, phase_resolution, dt_max)

    state = NSPState(initial.rho.copy(), initial.u.copy(), initial.theta.copy(),
                     poisson_solve(initial.rho, lam))
    if state.theta.samples().min() <= 0.0:
        raise NonpositiveTemperatureError("initial temperature not positive")
    explicit, propagate = _make_ops(grid, params, lam)
    ops = (explicit, propagate)
    guard = BLOWUP_FACTOR * max(sobolev_norm(state.u, 1), sobolev_norm(state.rho, 1), 1e-8)

    times = [0.0]
    states = [state]
    diag = [_diagnostic_row(0.0, state, lam, norm_s)]
    t = 0.0
    for target in snapshot_times[1:]:
        nsub = substep_count(target - t, dt)
        sub = (target - t) / nsub
        for _ in range(nsub):
            state = nsp_step(state, params, lam, sub, _ops=ops)
            if sobolev_norm(state.u, 1) > guard:
                raise BlowUpError(f"NSP solution blew up near t = {target:.4f}")
        t = target
        times.append(t)
        states.append(state)
        diag.append(_diagnostic_row(t, state, lam, norm_s))
    return NSPTrajectory(lam, params, np.asarray(times), states, diag)
