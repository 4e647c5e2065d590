"""Command-line entry point: ``revgs <subcommand> [--config FILE] [--key value ...]``."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .equilibria import compute_equilibria, equilibrium_energy_E2
from .harness import ConfigError, ExperimentConfig
from .lyapunov import PhiProfile, breakdown, energy_identity_residual
from .snapshots import load_trajectory
from .solver import run
from .stability import assemble_linearization, boundary_decay_envelope, spectrum

SUBCOMMANDS = {
    "simulate": "simulate",
    "equilibria": "equilibria",
    "spectrum": "spectrum",
    "center": "center",
    "energy": "energy_audit",
    "eps-limit": "eps_limit",
    "longterm": "longterm",
}


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17e}"
    return str(value)


def write_csv(path: Path, header, rows, echo: bool = False) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    if echo:
        sys.stdout.write(path.read_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="revgs", description="Reversible Gray-Scott laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("-v", "--verbose", action="store_true")
        for key in harness.FIELD_TYPES:
            if key == "scenario":
                continue
            flags = {f"--{key}", f"--{key.replace('_', '-')}"}
            sp.add_argument(*sorted(flags), dest=key, default=None, metavar="VALUE")
    return parser


def _cmd_equilibria(cfg: ExperimentConfig, out: Path) -> str:
    p = cfg.params
    pair = compute_equilibria(p, cfg.rho, cfg.volume)
    e2 = equilibrium_energy_E2(pair, p)
    rows = [["E_circ", *pair.e_circ, e2[0]], ["E_b", *pair.e_b, e2[1]]]
    write_csv(out / "equilibria.csv", ["name", "u1", "u2", "u3", "u4", "E2"], rows, echo=True)
    return f"K0={pair.K0:.17e}"


def _cmd_spectrum(cfg: ExperimentConfig, out: Path) -> str:
    grid = None if cfg.cells == 1 else cfg.grid
    whichs = ("circ", "b") if cfg.which == "both" else (cfg.which,)
    summary = []
    for which in whichs:
        rep = spectrum(assemble_linearization(cfg.params, cfg.rho, which, grid, cfg.volume))
        write_csv(out / f"spectrum_{which}.csv", ["index", "real", "imag"],
                  [[i, lam.real, lam.imag] for i, lam in enumerate(rep.eigenvalues)])
        kv = rep.kernel_vector if rep.kernel_vector is not None else [math.nan] * 4
        summary.append([which, rep.gap, rep.kernel_dim, rep.max_real, rep.max_abs_imag, *kv])
    write_csv(out / "spectrum_summary.csv",
              ["which", "gap", "kernel_dim", "max_real", "max_abs_imag", "k_u1", "k_u2", "k_u3", "k_u4"],
              summary, echo=True)
    return f"{len(whichs)} spectra written"


def _cmd_center(cfg: ExperimentConfig, out: Path) -> str:
    rows = []
    for s0 in cfg.s0_list:
        env = boundary_decay_envelope(cfg.params, cfg.rho, s0, cfg.t_end, cfg.volume)
        rows += [[s0, t, s, lo, up] for t, s, lo, up in zip(env.t, env.s, env.lower, env.upper)]
    write_csv(out / "center.csv", ["s0", "t", "s", "lower", "upper"], rows)
    return f"{len(cfg.s0_list)} center trajectories written"


def _cmd_energy(cfg: ExperimentConfig, out: Path) -> str:
    if not cfg.snapshots:
        raise ConfigError("energy needs --snapshots DIR")
    traj = load_trajectory(cfg.snapshots)
    phi = PhiProfile.parse(cfg.profile)
    res = energy_identity_residual(phi, cfg.params, traj)
    rows = []
    for n, s in enumerate(traj):
        b = breakdown(phi, cfg.params, s)
        rows.append([b.t, b.E, b.D, b.R, res[n] if n < len(res) else math.nan])
    write_csv(out / f"energy_{phi.name.replace(':', '_')}.csv", ["t", "E", "D", "R", "residual"], rows)
    return f"{len(traj)} snapshots audited with {phi.name}"


def _cmd_simulate(cfg: ExperimentConfig, out: Path) -> str:
    state = harness.preset_state(cfg.preset, cfg)
    snap_dir = out / "snapshots" if cfg.write_snapshots else None
    log = run("rgs", cfg.params, state, cfg.solver_config(), snapshot_dir=snap_dir)
    log.write_csv(out / "trajectory.csv")
    last = log.rows[-1]
    summary = (f"t_final={last['t']:.6g} steady={log.steady} mass={last['mass']:.17e} "
               f"dist_circ={last['dist_circ']:.3e} dist_b={last['dist_b']:.3e}")
    (out / "summary.txt").write_text(summary + "\n")
    return summary


def _cmd_longterm(cfg: ExperimentConfig, out: Path) -> str:
    results = harness.run_longterm(cfg)
    write_csv(out / "longterm.csv", *harness.longterm_rows(results))
    unresolved = sum(r.limit == "UNRESOLVED" for r in results)
    agree = sum(r.agrees for r in results)
    summary = f"{len(results)} runs, {agree} agree with the u2/u3 criterion, {unresolved} unresolved"
    (out / "summary.txt").write_text(summary + "\n")
    return summary


def _cmd_eps_limit(cfg: ExperimentConfig, out: Path) -> str:
    report = harness.run_eps_limit(cfg)
    write_csv(out / "eps_limit.csv", *harness.eps_rows(report))
    slopes = " ".join(f"{k}={v:.3f}" for k, v in report.slopes.items())
    summary = f"p={report.p_norm:g} fitted slopes: {slopes}"
    (out / "summary.txt").write_text(summary + "\n")
    return summary


COMMANDS = {
    "simulate": _cmd_simulate,
    "equilibria": _cmd_equilibria,
    "spectrum": _cmd_spectrum,
    "center": _cmd_center,
    "energy": _cmd_energy,
    "eps-limit": _cmd_eps_limit,
    "longterm": _cmd_longterm,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items()
                 if k in harness.FIELD_TYPES and v is not None}
    overrides["scenario"] = SUBCOMMANDS[args.command]
    try:
        cfg = harness.build_config(args.config, overrides)
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        message = COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"revgs: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"revgs: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    print(f"revgs {args.command}: {message}", file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(cli_main())
