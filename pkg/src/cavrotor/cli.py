"""Command-line entry point.

Every output file starts with a single-line JSON metadata header (version,
config hash, seeds, derived parameters) followed by CSV. Exit codes:
0 success, 2 configuration error, 3 numerical failure, 4 partial results
(undecided-flagged ensemble points).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, cooling, optics
from .config import ConfigError, RunConfig, parse_config
from .dynamics import NumericalError, SystemState, capture_criteria, integrate
from .ensemble import LaunchDistribution, capture_curve, sample_initial, trajectory_rng
from .rotor import m_from_euler

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_output(path, command, run: RunConfig, columns, rows, extra_meta=None):
    meta = {
        "format": "cavrotor/v1",
        "version": __version__,
        "command": command,
        "metadata": run.metadata(),
    }
    if extra_meta:
        meta["extra"] = extra_meta
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(meta, sort_keys=True) + "\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    except OSError as exc:
        raise RuntimeError(f"cannot write output file {path!r}: {exc}") from exc


def _threads(args, run: RunConfig) -> int:
    if args.threads:
        return args.threads
    env = os.environ.get("CAVROTOR_THREADS")
    if env:
        return int(env)
    if run.threads:
        return run.threads
    return os.cpu_count() or 1


def _trajectory_initial(run: RunConfig) -> SystemState:
    sp = run.sim
    tr = run.trajectory
    rng = trajectory_rng(run.seed, 0, tr["orientation_seed"])
    dist = LaunchDistribution(v_x=max(abs(tr["vx"]), 1e-9),
                              v_z_spread=0.0,
                              rotation_frequency=run.ensemble.rotation_frequency)
    state = sample_initial(dist, sp, rng)
    if tr["z_phase"] >= 0.0:
        state.r[2] = tr["z_phase"] * sp.cavity.wavelength
    state.p = sp.mass * np.array([tr["vx"], 0.0, tr["vz"]])
    return state


def cmd_validate(args, run: RunConfig) -> int:
    report = run.metadata()
    b0, gamma_sc0 = cooling.steady_state_b0(run.sim)
    report["steady_state"] = {
        "b0_re": b0.real, "b0_im": b0.imag, "b0_abs_sq": abs(b0) ** 2,
        "gamma_sc0_1_s": gamma_sc0,
    }
    print(json.dumps(report, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_potential_map(args, run: RunConfig) -> int:
    sp = run.sim
    b0, _ = cooling.steady_state_b0(sp)
    b_sq = abs(b0) ** 2
    lam = sp.cavity.wavelength
    rows = []
    for z in np.linspace(-0.5 * lam, 0.5 * lam, args.z_points):
        for beta in np.linspace(0.0, math.pi, args.angle_points):
            m = m_from_euler(0.0, beta)
            v = optics.dimensionless_potential(np.array([0.0, 0.0, z]), m, sp)
            rows.append((float(z), float(beta), float(v),
                         float(optics.potential(np.array([0.0, 0.0, z]), m,
                                                b_sq, sp))))
    _write_output(args.out, "potential-map", run,
                  ["z_m", "beta_rad", "v", "V_J"], rows,
                  extra_meta={"b0_abs_sq": b_sq})
    return EXIT_OK


def cmd_intensity_map(args, run: RunConfig) -> int:
    sp = run.sim
    b0, _ = cooling.steady_state_b0(sp)
    b_sq = abs(b0) ** 2
    r0, m0 = sp.trap_minimum
    rows = []
    for theta in np.linspace(0.0, math.pi, args.angle_points):
        for phi in np.linspace(0.0, 2.0 * math.pi, 2 * args.angle_points,
                               endpoint=False):
            n = np.array([math.sin(theta) * math.cos(phi),
                          math.sin(theta) * math.sin(phi),
                          math.cos(theta)])
            total, (i1, i2) = optics.detector_intensity(
                n, args.radius, r0, m0, b_sq, sp)
            rows.append((float(theta), float(phi), float(total),
                         float(i1), float(i2)))
    _write_output(args.out, "intensity-map", run,
                  ["theta_rad", "phi_rad", "intensity_W_m2",
                   "intensity_pol1_W_m2", "intensity_pol2_W_m2"], rows,
                  extra_meta={"detector_radius_m": args.radius,
                              "b0_abs_sq": b_sq})
    return EXIT_OK


def cmd_trajectory(args, run: RunConfig) -> int:
    sp = run.sim
    state = _trajectory_initial(run)
    b0, _ = cooling.steady_state_b0(sp)
    vx = max(abs(run.trajectory["vx"]), 1e-9)
    crit = capture_criteria(sp, vx, abs(b0) ** 2,
                            confirm_crossings=run.ensemble.confirm_crossings,
                            max_crossings=run.ensemble.max_crossings)
    traj = integrate(state, state.t + crit.max_time, sp, run.integrator,
                     criteria=crit)
    rows = []
    for i in range(len(traj.t)):
        rows.append((float(traj.t[i]),
                     *[float(x) for x in traj.r[i]],
                     *[float(x) for x in traj.p[i]],
                     *[float(x) for x in traj.m[i]],
                     *[float(x) for x in traj.L[i]],
                     float(traj.b[i].real), float(traj.b[i].imag),
                     float(traj.energy[i]), float(traj.gamma_sc[i])))
    _write_output(args.out, "trajectory", run,
                  ["t_s", "x_m", "y_m", "z_m",
                   "px_kg_m_s", "py_kg_m_s", "pz_kg_m_s",
                   "mx", "my", "mz", "Lx_kg_m2_s", "Ly_kg_m2_s", "Lz_kg_m2_s",
                   "re_b", "im_b", "E_J", "gamma_sc_1_s"], rows,
                  extra_meta={"status": traj.status,
                              "initial": {"vx_m_s": run.trajectory["vx"],
                                          "vz_m_s": run.trajectory["vz"]}})
    return EXIT_OK


def cmd_ensemble(args, run: RunConfig) -> int:
    sp = run.sim
    threads = _threads(args, run)
    results = capture_curve(sp, run.vx_grid, run.seed, run.ensemble,
                            run.integrator, threads=threads)
    rows = [(r.v_x, r.p_capture, r.ci_low, r.ci_high, r.n_captured,
             r.n_transmitted, r.n_undecided, r.n_total) for r in results]
    _write_output(args.out, "ensemble", run,
                  ["v_x_m_s", "p_capture", "ci_low", "ci_high",
                   "n_captured", "n_transmitted", "n_undecided", "n_total"],
                  rows,
                  extra_meta={"threads": threads,
                              "kind": sp.kind,
                              "seed_scheme":
                                  "philox key [master_seed, "
                                  "point_index << 32 | trajectory_index]"})
    if any(r.undecided_flagged for r in results):
        print("warning: undecided fraction above 5% at one or more grid "
              "points; results written, exit code 4", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cooling_sweep_rows(sp, values, vary):
    from .params import CavityConfig, SimParams
    rows = []
    for val in values:
        cav = CavityConfig(
            wavelength=sp.cavity.wavelength, linewidth=sp.cavity.linewidth,
            detuning=val * sp.kappa if vary == "detuning" else sp.detuning,
            power=val * 1e-3 if vary == "power" else sp.cavity.power,
            waist=sp.cavity.waist,
            mode_volume=sp.derived.mode_volume,
            rate_convention=sp.cavity.rate_convention)
        rep = cooling.recoil_temperatures(SimParams(sp.particle, cav))
        d = rep.as_dict()
        rows.append((float(val), d["T_z_K"], d["T_alpha_K"], d["T_beta_K"],
                     d["n_z"] or 0.0, d["n_alpha"] or 0.0, d["n_beta"] or 0.0,
                     d["omega_z_rad_s"], d["gamma_sc0_1_s"], d["b0_abs_sq"]))
    return rows


def cmd_cooling_limits(args, run: RunConfig) -> int:
    sp = run.sim
    sweep_cols = ["T_z_K", "T_alpha_K", "T_beta_K", "n_z", "n_alpha",
                  "n_beta", "omega_z_rad_s", "gamma_sc0_1_s", "b0_abs_sq"]
    if args.detuning_sweep:
        lo, hi, n = args.detuning_sweep
        rows = _cooling_sweep_rows(sp, np.linspace(lo, hi, int(n)), "detuning")
        _write_output(args.out, "cooling-limits", run,
                      ["detuning_over_kappa"] + sweep_cols, rows)
        return EXIT_OK
    if args.power_sweep:
        lo, hi, n = args.power_sweep
        rows = _cooling_sweep_rows(sp, np.linspace(lo, hi, int(n)), "power")
        _write_output(args.out, "cooling-limits", run,
                      ["power_mW"] + sweep_cols, rows)
        return EXIT_OK
    rep = cooling.recoil_temperatures(sp)
    payload = {"metadata": run.metadata(), "report": rep.as_dict()}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavrotor",
        description="Cavity trapping and ro-translational cooling simulator "
                    "for dielectric rods, disks and spheres.")
    parser.add_argument("--version", action="store_true",
                        help="print version and exit")
    parser.add_argument("--json", action="store_true",
                        help="with --version: machine-readable output")
    sub = parser.add_subparsers(dest="command")

    def common(p, needs_out=True):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads (0 = config/env/auto)")
        if needs_out:
            p.add_argument("--out", required=True, help="output file path")

    common(sub.add_parser("validate", help="check config, print derived "
                          "quantities"), needs_out=False)
    p = sub.add_parser("potential-map", help="optical potential over (z, beta)")
    common(p)
    p.add_argument("--z-points", type=int, default=81)
    p.add_argument("--angle-points", type=int, default=61)
    p = sub.add_parser("intensity-map", help="scattered intensity over "
                       "detector directions")
    common(p)
    p.add_argument("--angle-points", type=int, default=46)
    p.add_argument("--radius", type=float, default=1.0,
                   help="detector distance in meters")
    common(sub.add_parser("trajectory", help="single trajectory CSV"))
    common(sub.add_parser("ensemble", help="capture-probability curve"))
    p = sub.add_parser("cooling-limits", help="recoil-limit report")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (JSON, or CSV "
                   "for sweeps)")
    p.add_argument("--detuning-sweep", nargs=3, type=float, default=None,
                   metavar=("LO", "HI", "N"),
                   help="sweep detuning from LO to HI (in units of kappa) "
                        "over N points; writes CSV")
    p.add_argument("--power-sweep", nargs=3, type=float, default=None,
                   metavar=("LO", "HI", "N"),
                   help="sweep pump power from LO to HI (in mW) over N "
                        "points; writes CSV")
    return parser


_COMMANDS = {
    "validate": cmd_validate,
    "potential-map": cmd_potential_map,
    "intensity-map": cmd_intensity_map,
    "trajectory": cmd_trajectory,
    "ensemble": cmd_ensemble,
    "cooling-limits": cmd_cooling_limits,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        if args.json:
            print(json.dumps({"name": "cavrotor", "version": __version__},
                             sort_keys=True))
        else:
            print(f"cavrotor {__version__}")
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_CONFIG
    try:
        run = parse_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        run.seed = args.seed
    try:
        return _COMMANDS[args.command](args, run)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
