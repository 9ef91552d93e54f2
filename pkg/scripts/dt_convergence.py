"""Fitted decay rate against time step, compared with the linearised rate.

Around the flat equilibrium (poisson off, V0 = 0) a mode-1 perturbation
shrinks by ``1 / (1 + dt * gamma_1 / |J_1|)`` per step, so the fitted rate of
``F - F_inf`` should be ``2 log(1 + dt gamma_1/|J_1|) / dt``, tending to
``2 gamma_1 / |J_1|`` as dt -> 0.
"""
import argparse
from dataclasses import dataclass, field

import numpy as np

from qddlab.evolution import SimConfig, run
from qddlab.grid import Grid
from qddlab.spectral import density_response


@dataclass
class StepSweep:
    n_points: int = 32
    steps: list = field(default_factory=lambda: [4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4])
    t_final: float = 0.05


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-points", type=int, default=32)
    args = p.parse_args()
    sweep = StepSweep(n_points=args.n_points)
    N = sweep.n_points
    gamma1 = 2 * (1 - np.cos(2 * np.pi / N)) * N**2
    print("%10s %14s %14s %12s" % ("dt", "fitted mu", "linearised", "rel. diff"))
    for dt in sweep.steps:
        series = run(SimConfig(n_points=N, dt=dt, t_final=sweep.t_final))
        c = np.cos(2 * np.pi * Grid(N).nodes)
        J1 = c @ density_response(series.equilibrium.state) @ c / (c @ c)
        mu_lin = 2 * np.log1p(dt * gamma1 / abs(J1)) / dt
        if np.isnan(series.mu):
            print("%10.2e %14s %14.6f   fewer than 10 samples above roundoff" % (dt, "-", mu_lin))
            continue
        print("%10.2e %14.6f %14.6f %12.2e" % (dt, series.mu, mu_lin, series.mu / mu_lin - 1))
    print("continuum-in-time limit 2*gamma_1/|J_1| = %.6f" % (2 * gamma1 / abs(J1)))


if __name__ == "__main__":
    main()
