"""Klein, Lieb-Thirring and log-Sobolev ratios over random ensembles.

The constants in these inequalities are not computable, so this reports the
extremes of each ratio. The log-Sobolev ratio is also followed along a
relaxing trajectory and compared with the fitted decay rate.
"""
import argparse
from dataclasses import dataclass

import numpy as np

from qddlab.checks import random_smooth_potential, unit_mass_state
from qddlab.diagnostics import inequality_panel
from qddlab.equilibrium import solve_equilibrium
from qddlab.evolution import SimConfig, run
from qddlab.closure import chemical_potential
from qddlab.poisson import solve_poisson
from qddlab.spectral import density


@dataclass
class Ensemble:
    n_points: int = 32
    size: int = 50
    seed: int = 0
    poisson_on: bool = False


def ensemble_extremes(cfg: Ensemble):
    rng = np.random.default_rng(cfg.seed)
    N = cfg.n_points
    V0 = np.zeros(N)
    eq = solve_equilibrium(V0, 1.0, poisson_on=cfg.poisson_on)
    table = {"klein_ratio": [], "lt_sup_ratio": [], "lt_grad_ratio": [], "logsob_ratio": [],
             "relative_entropy": []}
    for i in range(cfg.size):
        amp = (0.05, 0.3, 1.0)[i % 3]
        A, s = unit_mass_state(random_smooth_potential(rng, N, amplitude=amp), V0)
        n = density(s)
        V = solve_poisson(n) if cfg.poisson_on else np.zeros(N)
        panel = inequality_panel(s, eq, n, A, V)
        for key in table:
            value = getattr(panel, key)
            if value is not None:
                table[key].append(value)
    return table


def trajectory_logsob(poisson_on, t_final=0.02):
    cfg = SimConfig(n_points=32, t_final=t_final, poisson_on=poisson_on, snapshot_every=1)
    series = run(cfg)
    eq = series.equilibrium
    ratios = []
    for k, (n, A, V) in sorted(series.snapshots.items()):
        s = chemical_potential(n, A_init=A).state
        r = inequality_panel(s, eq, n, A, V).logsob_ratio
        if r is not None and series.records[k].free_energy_gap > 1e-12:
            ratios.append(r)
    return series, np.array(ratios)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--poisson", action="store_true")
    args = p.parse_args()
    table = ensemble_extremes(Ensemble(size=args.size, seed=args.seed, poisson_on=args.poisson))
    print("%-18s %6s %12s %12s" % ("ratio", "count", "min", "max"))
    for key, values in table.items():
        if values:
            print("%-18s %6d %12.5g %12.5g" % (key, len(values), min(values), max(values)))
    series, ratios = trajectory_logsob(args.poisson)
    sup = ratios.max()
    print("trajectory: sup logsob ratio %.5g, 1/sup = %.5g, fitted mu = %.5g, mu*sup = %.4f"
          % (sup, 1 / sup, series.mu, series.mu * sup))


if __name__ == "__main__":
    main()
