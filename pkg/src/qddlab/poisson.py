"""Poisson equation ``-V'' = n`` with the potential pinned to zero at x = 0.

The torus node ``x_0 = 0`` doubles as ``x = 1``, so ``V_0 = V_N = 0`` and the
interior values solve an ordinary Dirichlet tridiagonal system. The density at
node 0 therefore does not enter ``V``. ``V`` is not periodic in general: the
wrapped forward difference at the last node uses ``V_N = V_0 = 0``.
"""
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded

from .grid import _as_field, gradient


def _dirichlet_bands(m: int) -> np.ndarray:
    ab = np.empty((3, m))
    ab[0] = -1.0
    ab[1] = 2.0
    ab[2] = -1.0
    return ab


def solve_poisson(n) -> np.ndarray:
    """``V`` with ``V[0] = 0`` and ``-(V[i+1] - 2V[i] + V[i-1]) / h^2 = n[i]``."""
    n = _as_field(n)
    N = n.size
    V = np.zeros(N)
    V[1:] = solve_banded((1, 1), _dirichlet_bands(N - 1), n[1:] / N**2)
    return V


def poisson_residual(V, n) -> np.ndarray:
    """Residual of the interior equations (entry 0 holds ``V[0]``)."""
    V, n = _as_field(V), _as_field(n)
    N = V.size
    Vp = np.append(V, 0.0)
    r = np.empty(N)
    r[0] = V[0]
    r[1:] = -(Vp[2:] - 2.0 * Vp[1:-1] + Vp[:-2]) * N**2 - n[1:]
    return r


@lru_cache(maxsize=16)
def _poisson_matrix(n_points: int) -> np.ndarray:
    N = n_points
    P = np.zeros((N, N))
    T = 2.0 * np.eye(N - 1) - np.eye(N - 1, k=1) - np.eye(N - 1, k=-1)
    P[1:, 1:] = np.linalg.inv(T) / N**2
    P.setflags(write=False)
    return P


def poisson_matrix(n_points: int) -> np.ndarray:
    """Dense matrix ``P`` with ``P @ n == solve_poisson(n)`` (read-only)."""
    return _poisson_matrix(int(n_points))


def poisson_energy(V) -> float:
    """``0.5 * ||grad V||^2`` with the wrapped difference using ``V_N = 0``."""
    V = _as_field(V)
    g = gradient(V)
    return 0.5 * float(np.dot(g, g)) / V.size
