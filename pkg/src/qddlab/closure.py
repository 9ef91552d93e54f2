"""Inverse of the closure map: the chemical potential ``A[n]``.

Given a positive density ``n``, ``A[n]`` is the unique minimiser of the
strictly convex dual functional

    G(A) = Tr exp(-(H + A)) + (n, A),

whose gradient is ``n - n[A]`` and whose Hessian is ``-J`` (``J`` the density
response). Damped Newton with Armijo backtracking on ``G``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .grid import _as_field, check_same_grid, inner, periodic_laplacian
from .spectral import (GibbsState, density, density_response, free_partition_function,
                       spectral_densities, state_for)

log = logging.getLogger(__name__)

# min/max ratio below which a target density counts as degenerate
MIN_CONTRAST = 1e-8


@dataclass(frozen=True, eq=False)
class ClosureResult:
    A: np.ndarray
    state: GibbsState
    iterations: int
    residual: float
    objective_history: list = field(default_factory=list)


def _check_density(n):
    if np.any(~np.isfinite(n)) or np.any(n <= 0):
        raise ValueError("target density must be positive")
    if n.min() < MIN_CONTRAST * n.max():
        raise ValueError("target density too close to zero (min/max < %g)" % MIN_CONTRAST)


def default_initial_potential(n_target) -> np.ndarray:
    """Constant ``log(Theta_h / mean(n))``, exact for constant targets at V0 = 0."""
    n_target = _as_field(n_target)
    return np.full(n_target.size, np.log(free_partition_function(n_target.size) / n_target.mean()))


def chemical_potential(n_target, V0=None, A_init=None, tol=1e-10, max_iter=100) -> ClosureResult:
    """Solve ``n[exp(-(H + A))] = n_target`` for ``A``.

    Converged when ``max|n[A] - n_target| <= tol * max(n_target)``.
    """
    n_target = _as_field(n_target)
    _check_density(n_target)
    V0 = np.zeros(n_target.size) if V0 is None else _as_field(V0)
    A = default_initial_potential(n_target) if A_init is None else _as_field(A_init).copy()
    check_same_grid(n_target, V0, A)
    scale = float(n_target.max())

    def objective(s):
        return s.mass + inner(n_target, s.potential)

    s = state_for(A, V0)
    G = objective(s)
    history = [G]
    for it in range(max_iter + 1):
        g = n_target - density(s)
        res = float(np.max(np.abs(g)))
        if res <= tol * scale:
            return ClosureResult(A, s, it, res, history)
        if it == max_iter:
            break
        J = density_response(s)
        step = np.linalg.solve(J, g)
        slope = inner(g, step)
        t = 1.0
        while True:
            trial = state_for(A + t * step, V0)
            G_trial = objective(trial)
            # absolute slack covers roundoff in G once g is tiny
            if G_trial <= G + 1e-4 * t * slope + 4e-16 * (1.0 + abs(G)):
                break
            t *= 0.5
            if t < 1e-10:
                raise ConvergenceError("line search failed in chemical_potential", res)
        A = A + t * step
        s, G = trial, G_trial
        history.append(G)
        log.debug("chemical_potential it=%d res=%.3e t=%g", it, res, t)
    raise ConvergenceError("chemical_potential: %d Newton iterations exceeded" % max_iter, res)


def representation_residual(A, state: GibbsState, n, V0):
    """Pointwise defect of ``A = -V0 + (n''/2 + n[grad rho grad] - n[rho log rho]) / n``.

    The kinetic density is the nonpositive ``-sum_p w_p |grad phi_p|^2``.
    Returns ``(residual, l2_norm)``; the norm is ``sqrt(h * sum(r^2))``.
    """
    A, n, V0 = _as_field(A), _as_field(n), _as_field(V0)
    check_same_grid(A, n, V0)
    if np.any(n <= 0):
        raise ValueError("representation_residual needs a positive density")
    kin, ent = spectral_densities(state)
    r = A + V0 - (0.5 * periodic_laplacian(n) + kin - ent) / n
    return r, float(np.sqrt(inner(r, r)))
