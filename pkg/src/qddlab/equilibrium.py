"""Global equilibrium: the self-consistent Schroedinger-Poisson state.

Minimises the free energy under a total-mass constraint. Because occupations
are pure exponentials, the Fermi level factors out of the mass constraint:
for the spectrum ``mu_p`` of ``H + V``,

    eps_F = log(mass / sum_p exp(-mu_p))

closes it exactly at every iteration. Only the potential ``V`` needs a
(damped) fixed-point loop.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .grid import _as_field
from .poisson import solve_poisson
from .spectral import GibbsState, assemble_hamiltonian, density, gibbs_state

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Equilibrium:
    n_inf: np.ndarray
    A_inf: np.ndarray
    V_inf: np.ndarray
    fermi_level: float
    state: GibbsState
    min_density: float
    mass: float
    poisson_on: bool
    iterations: int = 0


def _closure_at(V0, V, mass):
    s = gibbs_state(assemble_hamiltonian(V, V0), V)
    mu = s.eigenvalues
    # log-sum-exp, shifted by the ground level
    eps_f = float(np.log(mass) + mu[0] - np.log(np.sum(np.exp(-(mu - mu[0])))))
    A = V - eps_f
    state = gibbs_state(assemble_hamiltonian(A, V0), A)
    return state, eps_f


def solve_equilibrium(V0, mass=1.0, poisson_on=True, mix=0.5, tol=1e-10, max_iter=500,
                      max_halvings=4) -> Equilibrium:
    """Damped Gummel loop ``V <- (1 - mix) V + mix * solve_poisson(n[V])``.

    ``mix`` is halved (at most ``max_halvings`` times) whenever the update
    norm grows. Raises :class:`ConvergenceError` after ``max_iter`` sweeps.
    """
    V0 = _as_field(V0)
    if not mass > 0:
        raise ValueError("mass must be positive")
    if not 0 < mix <= 1:
        raise ValueError("mix must lie in (0, 1]")
    V = np.zeros(V0.size)
    it = 0
    if poisson_on:
        prev = np.inf
        halvings = 0
        while True:
            state, _ = _closure_at(V0, V, mass)
            V_new = (1.0 - mix) * V + mix * solve_poisson(density(state))
            res = float(np.max(np.abs(V_new - V)))
            V = V_new
            it += 1
            if res <= tol:
                break
            if res > prev and halvings < max_halvings:
                mix *= 0.5
                halvings += 1
                log.debug("equilibrium: residual grew, mix -> %g", mix)
            prev = res
            if it >= max_iter:
                raise ConvergenceError(
                    "equilibrium loop did not converge in %d iterations; "
                    "try a smaller mixing parameter" % max_iter, res)
    state, eps_f = _closure_at(V0, V, mass)
    n = density(state)
    return Equilibrium(n_inf=n, A_inf=state.potential.copy(), V_inf=V, fermi_level=eps_f,
                       state=state, min_density=float(n.min()), mass=float(mass),
                       poisson_on=bool(poisson_on), iterations=it)
