"""Command-line entry points: `qnl run`, `qnl limit`, `qnl check`."""

from __future__ import annotations

import argparse
import os
import sys

from .errors import QnlError
from .harness import ERROR_CHANNELS, load_config, run_sweep


def _cmd_run(args) -> int:
    config = load_config(args.config)
    report = run_sweep(config)
    print(f"wrote {os.path.join(config.output_dir, 'report.csv')}")
    for row in report.rows:
        if row.status == "ok":
            print(f"lambda = {row.lam:<10.6g} E_u = {row.e_u:.3e} "
                  f"E_rho = {row.e_rho:.3e} E_theta = {row.e_theta:.3e} "
                  f"E_phi = {row.e_phi:.3e}")
        else:
            print(f"lambda = {row.lam:<10.6g} FAILED ({row.status})")
    for channel in ERROR_CHANNELS:
        fit = report.rate(channel)
        if fit is not None:
            print(f"{channel}: slope = {fit.slope:.3f} +- {fit.halfwidth:.3f}")
    return 0 if report.all_ok else 1


def _cmd_limit(args) -> int:
    from .harness import default_base_fields
    from .limit_solver import LimitState, run_limit
    from .spectral import make_grid, sobolev_norm, write_snapshot

    config = load_config(args.config)
    grid = make_grid(config.dims, config.resolution)
    base = default_base_fields(grid, config.ic, config.ic_random_amp, config.seed)
    traj = run_limit(LimitState(base.v0, base.theta0), config.limit_params(),
                     config.t_end, dt=config.limit_dt,
                     snapshot_times=config.resolved_snapshot_times())
    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, "limit.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,v_hs,theta_hs,min_theta\n")
        for t in traj.snapshot_times:
            state = traj.snapshot_state(t)
            fh.write(f"{t:.12e},{sobolev_norm(state.v, config.s_norm):.12e},"
                     f"{sobolev_norm(state.theta, config.s_norm):.12e},"
                     f"{state.theta.samples().min():.12e}\n")
    if config.save_snapshots:
        for t in traj.snapshot_times:
            state = traj.snapshot_state(t)
            stem = os.path.join(config.output_dir, f"limit_t_{t:.6g}")
            write_snapshot(stem + "_v.qnl", state.v)
            write_snapshot(stem + "_theta.qnl", state.theta)
            write_snapshot(stem + "_pi.qnl", state.pi)
    print(f"wrote {path}")
    return 0


def _cmd_check(args) -> int:
    from .selfcheck import run_checks

    failures = run_checks(resolution=args.resolution, seed=args.seed,
                          verbose=True)
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qnl",
        description="Quasineutral-limit convergence experiments for the "
                    "compressible Navier-Stokes-Poisson system on the torus.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full lambda sweep with report output")
    p_run.add_argument("--config", required=True, help="key = value config file")
    p_run.set_defaults(func=_cmd_run)

    p_limit = sub.add_parser("limit", help="solve only the incompressible limit")
    p_limit.add_argument("--config", required=True)
    p_limit.set_defaults(func=_cmd_limit)

    p_check = sub.add_parser("check", help="run the invariant self-check suite")
    p_check.add_argument("--resolution", type=int, default=32)
    p_check.add_argument("--seed", type=int, default=0)
    p_check.set_defaults(func=_cmd_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QnlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
