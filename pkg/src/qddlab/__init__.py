"""Numerical laboratory for the 1D periodic quantum drift-diffusion model."""
from .closure import chemical_potential, representation_residual
from .equilibrium import Equilibrium, solve_equilibrium
from .errors import ConvergenceError, InvariantViolation
from .evolution import SimConfig, TimeSeries, run, step
from .grid import Grid, divergence_flux, gradient, integrate
from .poisson import poisson_energy, solve_poisson
from .spectral import (GibbsState, assemble_hamiltonian, density, density_response,
                       gibbs_state, spectral_densities, spectral_traces, state_for)

__version__ = "0.1.0"
