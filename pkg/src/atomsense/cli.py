"""Command-line harness: run sweeps, emit trajectories, validate configs."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from atomsense.config import load_config, validate_config
from atomsense.errors import ConfigError
from atomsense.runner import emit_results, run_sweep, trajectory_table


def _cmd_run(args):
    cfg = load_config(args.config)
    rows = run_sweep(cfg, n_jobs=args.jobs)
    emit_results(rows, args.format, args.output)
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


def _cmd_trajectory(args):
    cfg = load_config(args.config)
    table = trajectory_table(cfg)
    with open(args.output, "w", newline="") as fh:
        fh.write(table)
    print(f"wrote trajectory table to {args.output}")
    return 0


def _cmd_validate(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"invalid: {exc}")
        return 1
    print(f"ok: {cfg.sweep_variable} sweep, {len(cfg.sweep_values)} points, "
          f"{cfg.trials} trials, mode {cfg.trajectory_mode}")
    return 0


def _cmd_selftest(args):
    """Quick invariant checks over the core numerics."""
    from scipy.constants import hbar

    from atomsense.crlb import crlb_tau_asymptotic, crlb_tau_from_fim, fim_exact
    from atomsense.defaults import Z0, default_atoms, default_geometry, default_waveform
    from atomsense.physics import derive_constants, gain_upsilon, kappa, transmission_pi
    from atomsense.ptraj import itn_limited_trajectory, k_coefficients, snr_breakdown
    from atomsense.scene import SensingScene, build_channel, fixed_trajectory, lfm_phase

    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}")
        failures += 0 if ok else 1

    atoms = default_atoms()
    k = derive_constants(atoms)

    oms = np.logspace(6.3, 8.5, 20)
    des = np.logspace(4.5, 8.2, 20)
    worst = 0.0
    for o in oms:
        step = 1e-6 * o
        fd = (transmission_pi(o + step, des, k) - transmission_pi(o - step, des, k)) / (2 * step)
        an = gain_upsilon(o, des, k)
        worst = max(worst, float(np.max(np.abs(fd - an) / np.abs(an))))
    check(f"transmission slope matches finite difference (worst {worst:.1e})", worst < 1e-5)

    k1, k2 = k_coefficients(k)
    grid = np.logspace(np.log10(k2) - 2, np.log10(k2) + 2, 80000)
    arg = grid[int(np.argmax(kappa(grid, 0.0, k)))]
    check(f"resonant sensitivity optimum at k2 (rel {abs(arg-k2)/k2:.1e})",
          abs(arg - k2) / k2 < 0.01)

    w = default_waveform()
    geom = default_geometry()
    ch = build_channel(geom, w)
    rng = np.random.default_rng(7)
    ts = rng.uniform(0.0, w.symbol_duration, 100)
    resid = (lfm_phase(ts - ch.tau, w) - lfm_phase(ts - ch.tau_ref, w)
             + ch.omega_beat * ts + ch.phi)
    resid = np.abs(np.mod(resid + np.pi, 2 * np.pi) - np.pi)
    check(f"beat-phase identity (worst {resid.max():.1e} rad)", resid.max() < 1e-8)

    env = np.hanning(4096) + 0.2
    dt = w.symbol_duration / env.size
    omega = 2 * np.pi * 100 / w.symbol_duration
    info = fim_exact(1e-7, omega, 0.3, env, dt)
    asym = crlb_tau_asymptotic(env, 1e-7, w.sweep_slope, dt)
    exact = crlb_tau_from_fim(info, w.sweep_slope)
    check(f"asymptotic delay bound vs exact information ({abs(asym-exact)/exact:.1e})",
          abs(asym - exact) / exact < 0.02)

    scene = SensingScene(atoms=atoms, waveform=w, geometry=geom,
                         trajectory=fixed_trajectory(1.5, 1024), z0=Z0, grid_s=1 << 14)
    traj = itn_limited_trajectory(scene, 1024)
    bd = snr_breakdown(traj, scene)
    ok = (np.all(traj.samples >= 0.0)
          and traj.samples.mean() <= traj.p_avg_budget * (1 + 1e-9)
          and np.all(bd.snr_total <= np.minimum(bd.snr_etn, bd.snr_itn) * (1 + 1e-12)))
    check("shot-noise-limited trajectory feasible and harmonically dominated", ok)

    print("selftest:", "all passed" if failures == 0 else f"{failures} failure(s)")
    return 0 if failures == 0 else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="atomsense",
        description="Self-heterodyne Rydberg receiver ranging experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a Monte Carlo sweep")
    p_run.add_argument("config")
    p_run.add_argument("-o", "--output", required=True)
    p_run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p_run.add_argument("-j", "--jobs", type=int, default=1)
    p_run.set_defaults(func=_cmd_run)

    p_traj = sub.add_parser("trajectory", help="emit the power-trajectory table")
    p_traj.add_argument("config")
    p_traj.add_argument("-o", "--output", required=True)
    p_traj.set_defaults(func=_cmd_trajectory)

    p_val = sub.add_parser("validate", help="check a configuration file")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    p_self = sub.add_parser("selftest", help="run the quick invariant suite")
    p_self.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
