"""Perturbed-equilibrium relaxation with decay-rate fit.

    python scripts/decay_run.py --poisson --out runs/decay
"""
import argparse
from dataclasses import dataclass

import numpy as np

from qddlab.evolution import SimConfig, run
from qddlab.io import RunSummary, write_outputs


@dataclass
class DecayExperiment:
    n_points: int = 64
    dt: float = 1e-3
    t_final: float = 2.0
    amplitude: float = 0.05
    poisson_on: bool = False
    out: str = "runs/decay"

    def config(self) -> SimConfig:
        return SimConfig(n_points=self.n_points, dt=self.dt, t_final=self.t_final,
                         amplitude=self.amplitude, poisson_on=self.poisson_on,
                         init="equilibrium_perturbation", output_dir=self.out)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--poisson", action="store_true")
    p.add_argument("--t-final", type=float, default=2.0)
    p.add_argument("--out", default="runs/decay")
    args = p.parse_args()
    exp = DecayExperiment(poisson_on=args.poisson, t_final=args.t_final, out=args.out)
    cfg = exp.config()
    series = run(cfg)
    eq = series.equilibrium
    summary = RunSummary(command="decay_run", config=cfg.as_dict(), fermi_level=eq.fermi_level,
                         free_energy_inf=series.free_energy_inf, min_density_inf=eq.min_density,
                         mu=series.mu, r_squared=series.r_squared,
                         fit_window=list(series.fit_window), sigma_initial=series.sigma_initial,
                         steps=len(series.records) - 1)
    mass = series.column("mass")
    summary.mass_drift = float(np.max(np.abs(mass - mass[0])))
    write_outputs(exp.out, series, summary, cfg, svg=True)

    t, gap = series.column("t"), series.column("free_energy_gap")
    print("%8s %14s %14s" % ("t", "F - F_inf", "Sigma"))
    for k in list(range(0, 40, 4)) + [len(t) // 2, len(t) - 1]:
        print("%8.3f %14.6e %14.6e" % (t[k], gap[k], series.records[k].sigma))
    lo, hi = series.fit_window
    print("fit window t in [%.3f, %.3f]: mu = %.6g, R^2 = %.8f" % (t[lo], t[hi - 1], series.mu,
                                                                  series.r_squared))
    print("mass drift %.2e, min density %.6f" % (summary.mass_drift,
                                                 series.column("min_density").min()))


if __name__ == "__main__":
    main()
