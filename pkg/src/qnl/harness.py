"""Quasineutral-limit sweep harness: initial data, errors, rates, reports.

A sweep solves the limit system once, the lambda-independent filtered pair
system once, then for each Debye length generates matched initial data, runs
the compressible solver and measures the four sup-in-time Sobolev error
channels

    E_rho   = sup_t |rho - 1|_{H^s}
    E_u     = sup_t |u - v - u_osc|_{H^s}
    E_theta = sup_t |theta - theta_lim|_{H^s}
    E_phi   = sup_t |grad phi - grad phi_osc|_{H^(s+1)}

whose log-log slopes against lambda quantify the O(lambda) convergence rate.
Failed runs are recorded as rows with a status string and skipped by the
rate fit.  Output is a CSV report, a CSV of fitted rates and a meta echo of
the resolved configuration; identical configurations produce byte-identical
files.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ansatz import build_oscillation, solve_osc
from .errors import (BlowUpError, DegenerateDensityError,
                     DensityNotPositiveError, InsufficientDataError,
                     InvalidConfigError, MassDefectError,
                     NonpositiveTemperatureError, QnlError)
from .limit_solver import (LimitState, PhysParams, default_limit_dt,
                           run_limit)
from .nsp import NSPState, NSPTrajectory, poisson_solve, run_nsp
from .oscillation import GradientPair, check_gradient
from .projections import leray_p
from .spectral import (SpectralScalar, SpectralVector, constant_scalar,
                       divergence, gradient, laplacian, make_grid,
                       scalar_from_function, sobolev_norm, transform_forward,
                       vector_from_functions, write_snapshot)

ERROR_CHANNELS = ("E_rho", "E_u", "E_theta", "E_phi")

_STATUS_BY_ERROR = {
    DensityNotPositiveError: "density_not_positive",
    BlowUpError: "blow_up",
    DegenerateDensityError: "degenerate_density",
    NonpositiveTemperatureError: "nonpositive_temperature",
    MassDefectError: "mass_defect",
}


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class RunConfig:
    dims: int = 2
    resolution: int = 64
    s_norm: float = 3.0
    lambda_list: tuple = (0.1, 0.05, 0.025, 0.0125)
    mu: float = 0.05
    nu: float = 0.0
    kappa: float = 0.05
    euler_mode: bool = False
    dissipation_coupling: float = 0.2
    t_end: float = 0.5
    snapshots: int = 17
    snapshot_times: tuple | None = None
    ic: str = "ill"
    ic_random_amp: float = 0.0
    seed: int = 0
    output_dir: str = "qnl_out"
    workers: int = 1
    dt_max: float = 0.01
    phase_resolution: int = 16
    limit_dt: float | None = None
    save_snapshots: bool = False

    def validate(self) -> None:
        if self.dims not in (2, 3):
            raise InvalidConfigError(f"dims must be 2 or 3, got {self.dims}")
        if self.resolution % 2 != 0 or self.resolution < 8:
            raise InvalidConfigError(
                f"resolution must be even and >= 8, got {self.resolution}")
        if not self.lambda_list:
            raise InvalidConfigError("lambda_list must not be empty")
        lams = tuple(float(x) for x in self.lambda_list)
        if any(x <= 0 for x in lams):
            raise InvalidConfigError("lambda values must be positive")
        if any(b >= a for a, b in zip(lams, lams[1:])):
            raise InvalidConfigError("lambda_list must be strictly decreasing")
        if self.s_norm < self.dims / 2.0 + 2.0:
            raise InvalidConfigError(
                f"s_norm must be at least N/2 + 2 = {self.dims / 2 + 2}, got {self.s_norm}")
        if self.t_end <= 0:
            raise InvalidConfigError("t_end must be positive")
        if self.snapshots < 2:
            raise InvalidConfigError("need at least 2 snapshots")
        if self.ic not in ("ill", "well"):
            raise InvalidConfigError(f"ic must be 'ill' or 'well', got {self.ic!r}")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")
        if self.phase_resolution < 4:
            raise InvalidConfigError("phase_resolution must be >= 4")

    def resolved_snapshot_times(self) -> np.ndarray:
        if self.snapshot_times is not None:
            times = np.asarray(sorted(set(float(t) for t in self.snapshot_times)))
            if times[0] < 0 or times[-1] > self.t_end + 1e-12:
                raise InvalidConfigError("snapshot_times must lie in [0, t_end]")
            if times[0] > 0:
                times = np.concatenate([[0.0], times])
            return times
        return np.linspace(0.0, self.t_end, self.snapshots)

    def limit_params(self) -> PhysParams:
        if self.euler_mode:
            return PhysParams(0.0, 0.0, 0.0)
        return PhysParams(self.mu, self.nu, self.kappa)

    def nsp_params(self, lam: float) -> PhysParams:
        if self.euler_mode:
            c = self.dissipation_coupling * lam
            return PhysParams(c, c, c)
        return PhysParams(self.mu, self.nu, self.kappa)

    def echo_lines(self):
        def fmt(value):
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, tuple):
                return ", ".join(repr(float(x)) for x in value)
            return repr(value) if isinstance(value, str) else str(value)

        skip_none = ("snapshot_times", "limit_dt")
        lines = []
        for key in sorted(self.__dataclass_fields__):
            value = getattr(self, key)
            if value is None and key in skip_none:
                continue
            lines.append(f"{key} = {fmt(value)}")
        return lines


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise InvalidConfigError(f"cannot parse boolean from {text!r}")


def _parse_float_list(text: str) -> tuple:
    items = [s for s in (p.strip() for p in text.split(",")) if s]
    if not items:
        raise InvalidConfigError("empty list value")
    return tuple(float(s) for s in items)


_CONFIG_PARSERS = {
    "dims": int,
    "resolution": int,
    "s_norm": float,
    "lambda_list": _parse_float_list,
    "mu": float,
    "nu": float,
    "kappa": float,
    "euler_mode": _parse_bool,
    "dissipation_coupling": float,
    "t_end": float,
    "snapshots": int,
    "snapshot_times": _parse_float_list,
    "ic": lambda s: s.strip(),
    "ic_random_amp": float,
    "seed": int,
    "output_dir": lambda s: s.strip(),
    "workers": int,
    "dt_max": float,
    "phase_resolution": int,
    "limit_dt": float,
    "save_snapshots": _parse_bool,
}


def load_config(path: str) -> RunConfig:
    """Parse a line-oriented 'key = value' configuration file."""
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidConfigError(
                    f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            parser = _CONFIG_PARSERS.get(key)
            if parser is None:
                raise InvalidConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                overrides[key] = parser(value.strip())
            except (ValueError, TypeError) as exc:
                raise InvalidConfigError(
                    f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    config = RunConfig(**overrides)
    config.validate()
    return config


# ---------------------------------------------------------------------------
# initial data

@dataclass(eq=False)
class BaseFields:
    """User-level initial fields feeding both the limit and NSP solves."""

    v0: SpectralVector
    theta0: SpectralScalar
    qu0: SpectralVector      # gradient part of the initial velocity
    phi0: SpectralScalar     # initial electric potential


def default_base_fields(grid, kind: str = "ill", random_amp: float = 0.0,
                        seed: int = 0) -> BaseFields:
    """Smooth few-mode defaults: Taylor-Green velocity, positive temperature,
    single-mode gradient velocity part and electric potential."""
    if grid.dims == 2:
        v0 = vector_from_functions(
            grid,
            lambda x, y: np.sin(x) * np.cos(y),
            lambda x, y: -np.cos(x) * np.sin(y))
        theta0 = scalar_from_function(grid, lambda x, y: 2.0 + 0.5 * np.sin(x) * np.sin(y))
        chi = scalar_from_function(grid, lambda x, y: 0.4 * np.cos(y))
        phi0 = scalar_from_function(grid, lambda x, y: 0.3 * np.sin(x))
    else:
        v0 = vector_from_functions(
            grid,
            lambda x, y, z: np.sin(x) * np.cos(y) * np.cos(z),
            lambda x, y, z: -np.cos(x) * np.sin(y) * np.cos(z),
            lambda x, y, z: np.zeros_like(z))
        theta0 = scalar_from_function(
            grid, lambda x, y, z: 2.0 + 0.5 * np.sin(x) * np.sin(y))
        chi = scalar_from_function(grid, lambda x, y, z: 0.4 * np.cos(y))
        phi0 = scalar_from_function(grid, lambda x, y, z: 0.3 * np.sin(x))

    if random_amp > 0.0:
        rng = np.random.default_rng(seed)
        v0 = v0 + random_amp * leray_p(random_smooth_vector(grid, rng))
        theta0 = theta0 + random_amp * random_smooth_scalar(grid, rng)

    if kind == "well":
        zero_v = 0.0 * v0
        return BaseFields(v0, theta0, zero_v, 0.0 * phi0)
    return BaseFields(v0, theta0, gradient(chi), phi0)


def random_smooth_scalar(grid, rng, decay: float = 4.0) -> SpectralScalar:
    """Unit-scale random field with a Gaussian spectral envelope."""
    raw = transform_forward(grid, rng.standard_normal(grid.shape))
    envelope = np.exp(-grid.k_sq / (2.0 * decay))
    f = SpectralScalar(grid, raw.coeffs * envelope)
    scale = sobolev_norm(f, 0)
    return f * (1.0 / scale) if scale > 0 else f


def random_smooth_vector(grid, rng, decay: float = 4.0) -> SpectralVector:
    return SpectralVector(grid, tuple(
        random_smooth_scalar(grid, rng, decay) for _ in range(grid.dims)))


def gen_initial_data(kind: str, lam: float, base: BaseFields) -> NSPState:
    """Initial NSP data matching the limit data with zero slack."""
    if kind not in ("ill", "well"):
        raise ValueError(f"kind must be 'ill' or 'well', got {kind!r}")
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    grid = base.v0.grid
    div_norm = sobolev_norm(divergence(base.v0), 0)
    if div_norm > 1e-10 * max(1.0, sobolev_norm(base.v0, 0)):
        raise ValueError(f"base velocity is not divergence-free: {div_norm:.3e}")
    if base.theta0.samples().min() <= 0.0:
        raise NonpositiveTemperatureError("base temperature must be positive")

    if kind == "well":
        residual = sobolev_norm(base.qu0, 0) + sobolev_norm(gradient(base.phi0), 0)
        if residual > 1e-12:
            raise ValueError(
                "well-prepared data requires zero gradient part and potential")
        rho = constant_scalar(grid, 1.0)
        return NSPState(rho, base.v0.copy(), base.theta0.copy(),
                        poisson_solve(rho, lam))

    check_gradient(base.qu0)
    rho = constant_scalar(grid, 1.0) - lam * laplacian(base.phi0)
    min_rho = rho.samples().min()
    if min_rho <= 0.0:
        raise DensityNotPositiveError(
            f"lambda = {lam} makes min rho = {min_rho:.3e} <= 0")
    u = base.v0 + base.qu0
    return NSPState(rho, u, base.theta0.copy(), poisson_solve(rho, lam))


# ---------------------------------------------------------------------------
# measurement and rate fit

@dataclass
class ReportRow:
    lam: float
    e_rho: float = float("nan")
    e_u: float = float("nan")
    e_theta: float = float("nan")
    e_phi: float = float("nan")
    status: str = "ok"
    sup_state_norm: float = float("nan")

    def channel(self, name: str) -> float:
        return {"E_rho": self.e_rho, "E_u": self.e_u,
                "E_theta": self.e_theta, "E_phi": self.e_phi}[name]


def measure_errors(nsp_traj: NSPTrajectory, limit_traj, pair_traj,
                   lam: float, s: float) -> ReportRow:
    """One sweep row: sup-in-time Sobolev errors over the snapshot grid."""
    e = {name: 0.0 for name in ERROR_CHANNELS}
    sup_norm = 0.0
    grid = nsp_traj.states[0].grid
    one = constant_scalar(grid, 1.0)
    for t, state in zip(nsp_traj.times, nsp_traj.states):
        lim = limit_traj.snapshot_state(t)
        osc = build_oscillation(t, lam, pair_traj.pair_at(t))
        e["E_rho"] = max(e["E_rho"], sobolev_norm(state.rho - one, s))
        e["E_u"] = max(e["E_u"], sobolev_norm(state.u - lim.v - osc.u_osc, s))
        e["E_theta"] = max(e["E_theta"], sobolev_norm(state.theta - lim.theta, s))
        e["E_phi"] = max(e["E_phi"],
                         sobolev_norm(gradient(state.phi) - osc.grad_phi_osc, s + 1.0))
        sup_norm = max(sup_norm, sobolev_norm(state.rho, s),
                       sobolev_norm(state.u, s), sobolev_norm(state.theta, s))
    return ReportRow(lam, e["E_rho"], e["E_u"], e["E_theta"], e["E_phi"],
                     "ok", sup_norm)


@dataclass(frozen=True)
class RateFit:
    channel: str
    slope: float
    halfwidth: float


def fit_rate(rows, channel: str) -> RateFit:
    """Least-squares slope of log E against log lambda with a residual width."""
    points = [(row.lam, row.channel(channel)) for row in rows
              if row.status == "ok" and row.channel(channel) > 0.0]
    if len(points) < 3:
        raise InsufficientDataError(
            f"need >= 3 successful rows for {channel}, have {len(points)}")
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    ssr = float(np.sum((y - slope * x - intercept) ** 2))
    dof = len(points) - 2
    halfwidth = float(np.sqrt(max(ssr, 0.0) / dof / sxx)) if dof > 0 else 0.0
    return RateFit(channel, slope, halfwidth)


def fit_all_rates(rows):
    fits = []
    for channel in ERROR_CHANNELS:
        try:
            fits.append(fit_rate(rows, channel))
        except InsufficientDataError:
            continue
    return fits


# ---------------------------------------------------------------------------
# sweep driver

@dataclass(eq=False)
class ConvergenceReport:
    config: RunConfig
    rows: list
    rates: list
    pair_growth: float

    @property
    def all_ok(self) -> bool:
        return all(row.status == "ok" for row in self.rows)

    def rate(self, channel: str) -> RateFit | None:
        for fit in self.rates:
            if fit.channel == channel:
                return fit
        return None

    def report_csv(self) -> str:
        lines = ["lambda,E_rho,E_u,E_theta,E_phi,status"]
        for row in self.rows:
            fields = [f"{row.lam:.12e}"]
            for name in ERROR_CHANNELS:
                value = row.channel(name)
                fields.append("nan" if not np.isfinite(value) else f"{value:.12e}")
            fields.append(row.status)
            lines.append(",".join(fields))
        return "\n".join(lines) + "\n"

    def rates_csv(self) -> str:
        lines = ["channel,slope,halfwidth"]
        for fit in self.rates:
            lines.append(f"{fit.channel},{fit.slope:.12e},{fit.halfwidth:.12e}")
        return "\n".join(lines) + "\n"

    def meta_text(self) -> str:
        lines = list(self.config.echo_lines())
        lines.append(f"pair_growth_factor = {self.pair_growth:.12e}")
        for row in self.rows:
            lines.append(
                f"sup_state_norm[{row.lam:.12e}] = "
                + ("nan" if not np.isfinite(row.sup_state_norm)
                   else f"{row.sup_state_norm:.12e}"))
        return "\n".join(lines) + "\n"


def _run_one_lambda(config: RunConfig, base: BaseFields, limit_traj, pair_traj,
                    lam: float, snapshot_times):
    try:
        initial = gen_initial_data(config.ic, lam, base)
        traj = run_nsp(initial, config.nsp_params(lam), lam, config.t_end,
                       snapshot_times=snapshot_times, norm_s=config.s_norm,
                       phase_resolution=config.phase_resolution,
                       dt_max=config.dt_max)
        row = measure_errors(traj, limit_traj, pair_traj, lam, config.s_norm)
        return row, traj
    except QnlError as exc:
        status = _STATUS_BY_ERROR.get(type(exc), f"error:{type(exc).__name__}")
        return ReportRow(lam, status=status), None


def run_sweep(config: RunConfig) -> ConvergenceReport:
    """Full lambda sweep; writes report.csv, rates.csv and meta.txt."""
    config.validate()
    grid = make_grid(config.dims, config.resolution)
    base = default_base_fields(grid, config.ic, config.ic_random_amp, config.seed)
    snapshot_times = config.resolved_snapshot_times()

    limit_params = config.limit_params()
    limit_initial = LimitState(base.v0.copy(), base.theta0.copy())
    limit_dt = config.limit_dt
    if limit_dt is None:
        limit_dt = min(default_limit_dt(limit_initial), 0.005)
    limit_traj = run_limit(limit_initial, limit_params, config.t_end,
                           dt=limit_dt, snapshot_times=snapshot_times)

    pair0 = GradientPair(base.qu0.copy(), gradient(base.phi0))
    pair_traj = solve_osc(pair0, limit_traj, limit_params, config.t_end,
                          dt=limit_dt, snapshot_times=snapshot_times,
                          norm_s=config.s_norm)

    lams = [float(x) for x in config.lambda_list]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(
                lambda lam: _run_one_lambda(config, base, limit_traj, pair_traj,
                                            lam, snapshot_times), lams))
    else:
        results = [_run_one_lambda(config, base, limit_traj, pair_traj,
                                   lam, snapshot_times) for lam in lams]

    order = sorted(range(len(lams)), key=lambda i: -lams[i])
    rows = [results[i][0] for i in order]
    trajectories = [results[i][1] for i in order]
    report = ConvergenceReport(config, rows, fit_all_rates(rows),
                               pair_traj.growth_factor)
    _write_outputs(config, report, trajectories)
    return report


def _diag_csv(traj: NSPTrajectory) -> str:
    header = ("t,mass,min_rho,min_theta,rho_hs,u_hs,theta_hs,"
              "grad_phi_hs1,poisson_residual")
    lines = [header]
    for row in traj.diagnostics:
        lines.append(",".join(f"{row[key]:.12e}" for key in header.split(",")))
    return "\n".join(lines) + "\n"


def _write_outputs(config: RunConfig, report: ConvergenceReport, trajectories):
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write(report.report_csv())
    with open(os.path.join(out, "rates.csv"), "w", encoding="utf-8") as fh:
        fh.write(report.rates_csv())
    with open(os.path.join(out, "meta.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.meta_text())
    for row, traj in zip(report.rows, trajectories):
        if traj is None:
            continue
        name = f"diag_lambda_{row.lam:.6g}.csv"
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            fh.write(_diag_csv(traj))
        if config.save_snapshots:
            for t, state in zip(traj.times, traj.states):
                stem = f"snapshot_lambda_{row.lam:.6g}_t_{t:.6g}"
                write_snapshot(os.path.join(out, stem + "_rho.qnl"), state.rho)
                write_snapshot(os.path.join(out, stem + "_u.qnl"), state.u)
