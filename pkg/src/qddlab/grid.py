"""Uniform periodic grid on the unit torus and its discrete calculus.

Grid functions are plain 1D numpy arrays of length ``N``; node ``N`` is
identified with node 0. The forward difference is the one discrete gradient
used everywhere, so that

    h * sum(u * divergence_flux(n, v)) == -h * sum(n_half * grad(u) * grad(v))

holds exactly (summation by parts).
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform mesh ``x_i = i h`` of [0, 1) with ``h = 1/N``."""

    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8 or self.n_points % 2:
            raise ValueError("n_points must be even, ≥ 8 (got %r)" % (self.n_points,))

    @property
    def h(self) -> float:
        return 1.0 / self.n_points

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_points) * self.h

    @classmethod
    def like(cls, f) -> "Grid":
        return cls(len(f))


def _as_field(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 1:
        raise ValueError("grid functions are 1D arrays")
    return f


def check_same_grid(*fields):
    sizes = {len(f) for f in fields}
    if len(sizes) != 1:
        raise ValueError("grid mismatch: field lengths %s" % sorted(sizes))


def integrate(f) -> float:
    """Rectangle rule ``h * sum(f)``."""
    f = _as_field(f)
    return float(np.sum(f)) / f.size


def inner(u, v) -> float:
    """Discrete L2 product ``h * sum(u * v)``."""
    u, v = _as_field(u), _as_field(v)
    check_same_grid(u, v)
    return float(np.dot(u, v)) / u.size


def gradient(f) -> np.ndarray:
    """Periodic forward difference ``(f[i+1] - f[i]) / h``."""
    f = _as_field(f)
    return (np.roll(f, -1) - f) * f.size


def half_point(n) -> np.ndarray:
    """Arithmetic mean ``(n[i] + n[i+1]) / 2`` at the midpoint ``x_{i+1/2}``."""
    n = _as_field(n)
    return 0.5 * (n + np.roll(n, -1))


def divergence_flux(n, u) -> np.ndarray:
    """Discrete ``div(n grad u)`` with half-point densities.

    Self-adjoint and negative semidefinite; its entries sum to zero exactly
    up to roundoff (fluxes telescope).
    """
    n, u = _as_field(n), _as_field(u)
    check_same_grid(n, u)
    if np.any(n <= 0):
        raise ValueError("divergence_flux needs a positive density")
    flux = half_point(n) * gradient(u)
    return (flux - np.roll(flux, 1)) * n.size


def periodic_laplacian(u) -> np.ndarray:
    """3-point periodic Laplacian ``(u[i+1] - 2u[i] + u[i-1]) / h^2``."""
    u = _as_field(u)
    return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) * u.size**2


def kinetic_matrix(n_points: int) -> np.ndarray:
    """Dense matrix of ``-periodic_laplacian`` (positive semidefinite)."""
    N = n_points
    L = 2.0 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)
    L[0, -1] = L[-1, 0] = -1.0
    return L * float(N) ** 2


def flux_matrix(n) -> np.ndarray:
    """Dense matrix ``D_n`` with ``D_n @ u == divergence_flux(n, u)``."""
    n = _as_field(n)
    if np.any(n <= 0):
        raise ValueError("flux_matrix needs a positive density")
    N = n.size
    nh = half_point(n)
    D = np.zeros((N, N))
    idx = np.arange(N)
    right, left = (idx + 1) % N, (idx - 1) % N
    D[idx, right] += nh
    D[idx, idx] -= nh + nh[left]
    D[idx, left] += nh[left]
    return D * float(N) ** 2
