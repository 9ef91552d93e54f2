"""Command line entry point: ``qddlab {equilibrium,invert,evolve,check}``.

Exit codes: 0 clean, 1 solver failure or bad input, 2 invariant violation.
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .checks import run_checks
from .closure import chemical_potential, representation_residual
from .equilibrium import solve_equilibrium
from .errors import ConvergenceError, InvariantViolation
from .evolution import SimConfig, free_energy_of, run
from .io import (ConfigError, RunSummary, load_config, read_field_csv, write_csv,
                 write_outputs, write_snapshot, write_summary)

log = logging.getLogger("qddlab")


def _config(args) -> SimConfig:
    return load_config(args.config) if args.config else SimConfig()


def _out_dir(args, cfg) -> Path:
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _eq_summary(command, cfg, eq):
    return RunSummary(command=command, config=cfg.as_dict(), fermi_level=eq.fermi_level,
                      free_energy_inf=free_energy_of(eq.n_inf, eq.A_inf, eq.V_inf),
                      min_density_inf=eq.min_density)


def cmd_equilibrium(args):
    cfg = _config(args)
    t0 = time.perf_counter()
    eq = solve_equilibrium(cfg.external_potential(), cfg.mass, cfg.poisson_on,
                           mix=cfg.eq_mix, tol=cfg.eq_tol, max_iter=cfg.eq_max_iter)
    out = _out_dir(args, cfg)
    write_snapshot(out / "snapshot_0.csv", cfg.grid.nodes, eq.n_inf, eq.A_inf, eq.V_inf)
    summary = _eq_summary("equilibrium", cfg, eq)
    summary.wall_clock_seconds = time.perf_counter() - t0
    write_summary(out / "summary.json", summary)
    log.info("fermi level %.12g, min density %.6g", eq.fermi_level, eq.min_density)
    return 0


def cmd_invert(args):
    cfg = _config(args)
    n = read_field_csv(args.density, "n")
    if args.config and n.size != cfg.n_points:
        raise ValueError("density has %d points, config says %d" % (n.size, cfg.n_points))
    cfg.n_points = n.size
    cfg.validate()
    V0 = cfg.external_potential()
    res = chemical_potential(n, V0, tol=cfg.inverse_tol, max_iter=cfg.inverse_max_iter)
    _, norm = representation_residual(res.A, res.state, n, V0)
    out = _out_dir(args, cfg)
    write_csv(out / "potential.csv", ("x", "n", "A"), zip(cfg.grid.nodes, n, res.A))
    log.info("inverted in %d Newton steps, residual %.3e, representation defect %.3e",
             res.iterations, res.residual, norm)
    return 0


def cmd_evolve(args):
    cfg = _config(args)
    if args.svg:
        cfg.svg = True
    out = _out_dir(args, cfg)
    t0 = time.perf_counter()
    status, code = "clean", 0
    try:
        series = run(cfg)
    except InvariantViolation as exc:
        series = exc.partial
        if series is None:
            raise
        series.violations = exc.report
        status, code = "violation", 2
    eq = series.equilibrium
    summary = _eq_summary("evolve", cfg, eq)
    mass = series.column("mass")
    summary.mu, summary.r_squared = series.mu, series.r_squared
    summary.fit_window = list(series.fit_window)
    summary.sigma_initial = series.sigma_initial
    summary.mass_drift = float(np.max(np.abs(mass - mass[0])))
    summary.steps = len(series.records) - 1
    summary.violations = series.violations
    summary.status = status
    summary.wall_clock_seconds = time.perf_counter() - t0
    write_outputs(out, series, summary, cfg, svg=cfg.svg)
    log.info("%d steps, mu = %.6g, R^2 = %.6f, status %s", summary.steps, series.mu,
             series.r_squared, status)
    return code


def cmd_check(args):
    cfg = _config(args)
    verdict = run_checks(seed=args.seed)
    out = _out_dir(args, cfg)
    text = json.dumps(verdict, indent=2)
    (out / "check.json").write_text(text + "\n")
    if not args.quiet:
        print(text)
    return 0 if verdict["passed"] else 2


def build_parser():
    p = argparse.ArgumentParser(prog="qddlab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--out", help="output directory (default from config)")
    common.add_argument("--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("equilibrium", parents=[common], help="solve the global equilibrium")
    inv = sub.add_parser("invert", parents=[common], help="chemical potential of a density CSV")
    inv.add_argument("--density", required=True, help="CSV with a column 'n'")
    ev = sub.add_parser("evolve", parents=[common], help="time evolution with monitors")
    ev.add_argument("--svg", action="store_true", help="also write decay.svg")
    chk = sub.add_parser("check", parents=[common], help="invariant suite, JSON verdict")
    chk.add_argument("--seed", type=int, default=0)
    return p


COMMANDS = {"equilibrium": cmd_equilibrium, "invert": cmd_invert,
            "evolve": cmd_evolve, "check": cmd_check}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ConvergenceError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
