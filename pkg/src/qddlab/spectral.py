"""Gibbs states ``exp(-(H + A))`` of the discrete periodic Hamiltonian.

The Hamiltonian is ``H = L_per + diag(V0)`` with ``L_per`` the 3-point
periodic ``-d^2/dx^2``. Every quantity is computed from the full dense
eigendecomposition of ``H + diag(A)``; there is no truncation, so traces are
plain matrix traces.

Eigenvectors are normalised in the grid inner product ``h * sum(u * v)``,
i.e. ``phi = U / sqrt(h)`` where ``U`` is Euclidean-orthonormal. With that
convention ``n_i = sum_p w_p phi_p(x_i)^2`` integrates to ``sum_p w_p``.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg
from scipy.special import xlogy

from .grid import _as_field, check_same_grid, gradient, integrate, inner, kinetic_matrix

# |a - b| below this switches the divided difference to its Taylor series
DEGENERACY_THRESHOLD = 1e-6


def boltzmann_entropy(x):
    """``beta(x) = x log x - x`` with ``beta(0) = 0``."""
    x = np.asarray(x, dtype=float)
    return xlogy(x, x) - x


@dataclass(frozen=True, eq=False)
class SymmetricOperator:
    """``L_per + diag(diagonal)`` as a dense matrix, keeping the diagonal.

    The potential is kept apart because the Laplacian part has norm ~4N^2:
    recomputing eigenvalues from the stencil and the diagonal separately is
    ~100x more accurate than anything read off the assembled matrix.
    """

    matrix: np.ndarray
    diagonal: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def shape(self):
        return self.matrix.shape

    def shifted(self, c: float) -> "SymmetricOperator":
        return _operator(self.diagonal + c)


def _operator(diagonal) -> SymmetricOperator:
    H = kinetic_matrix(diagonal.size)
    H[np.diag_indices_from(H)] += diagonal
    H.setflags(write=False)
    diagonal = diagonal.copy()
    diagonal.setflags(write=False)
    return SymmetricOperator(H, diagonal)


def assemble_hamiltonian(A, V0) -> SymmetricOperator:
    """``L_per + diag(V0 + A)``; symmetric by construction."""
    A, V0 = _as_field(A), _as_field(V0)
    check_same_grid(A, V0)
    return _operator(V0 + A)


@dataclass(frozen=True, eq=False)
class GibbsState:
    """Spectral decomposition of ``H + A`` with Boltzmann occupations.

    ``eigenvectors[:, p]`` is ``phi_p`` sampled on the grid.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    potential: np.ndarray

    @property
    def n_points(self) -> int:
        return self.eigenvalues.size

    @property
    def h(self) -> float:
        return 1.0 / self.n_points

    @property
    def occupations(self) -> np.ndarray:
        return np.exp(-self.eigenvalues)

    @property
    def mass(self) -> float:
        return float(np.sum(self.occupations))

    def matrix(self, f=None) -> np.ndarray:
        """Dense matrix of ``f(H + A)``; ``f`` acts on the eigenvalues.

        Default ``f`` is ``exp(-x)``, i.e. the density operator itself.
        """
        vals = self.occupations if f is None else f(self.eigenvalues)
        U = self.eigenvectors * np.sqrt(self.h)
        return (U * vals) @ U.T

    def log_matrix(self) -> np.ndarray:
        """``log(rho) = -(H + A)`` reconstructed from the spectrum."""
        return self.matrix(lambda lam: -lam)


def gibbs_state(H, potential=None) -> GibbsState:
    """Full eigendecomposition of ``H`` (which already contains ``A``).

    ``potential`` is the field ``A`` that was added to the Hamiltonian; it is
    only stored, for callers that need it later (relative entropies, free
    energy in dual form). For a :class:`SymmetricOperator` the eigenvalues are
    recomputed as Rayleigh quotients ``||grad phi||^2 + (d phi, phi)``.
    """
    op = H if isinstance(H, SymmetricOperator) else None
    H = np.asarray(H, dtype=float)
    N = H.shape[0]
    if H.shape != (N, N):
        raise ValueError("Hamiltonian must be square")
    if not np.allclose(H, H.T, rtol=0, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise ValueError("Hamiltonian is not symmetric")
    try:
        lam, U = linalg.eigh(H, check_finite=True)
    except linalg.LinAlgError as exc:
        raise RuntimeError("symmetric eigensolver failed: %s" % exc) from exc
    phi = U * np.sqrt(N)
    if op is not None:
        lam = np.sum(gradient_columns(phi) ** 2, axis=0) / N + (op.diagonal @ phi**2) / N
        order = np.argsort(lam, kind="stable")
        lam, phi = lam[order], phi[:, order]
    A = np.zeros(N) if potential is None else _as_field(potential).copy()
    for arr in (lam, phi, A):
        arr.setflags(write=False)
    return GibbsState(lam, phi, A)


def state_for(A, V0) -> GibbsState:
    """Shorthand for ``gibbs_state(assemble_hamiltonian(A, V0), A)``."""
    return gibbs_state(assemble_hamiltonian(A, V0), A)


def density(s: GibbsState) -> np.ndarray:
    """Local density ``n = sum_p w_p |phi_p|^2``."""
    return (s.eigenvectors**2) @ s.occupations


class SpectralTraces(NamedTuple):
    mass: float
    kinetic: float
    entropy: float
    potential: float


def mode_kinetic_energies(s: GibbsState) -> np.ndarray:
    """``<phi_p, L_per phi_p> = ||grad phi_p||^2`` for every mode."""
    g = gradient_columns(s.eigenvectors)
    return np.sum(g**2, axis=0) * s.h


def gradient_columns(phi) -> np.ndarray:
    """Forward difference of each column of ``phi``."""
    return (np.roll(phi, -1, axis=0) - phi) * phi.shape[0]


def spectral_traces(s: GibbsState, V0) -> SpectralTraces:
    """Tr rho, Tr sqrt(H0) rho sqrt(H0), Tr beta(rho) and Tr V0 rho."""
    w = s.occupations
    V0 = _as_field(V0)
    check_same_grid(V0, w)
    return SpectralTraces(
        mass=float(np.sum(w)),
        kinetic=float(np.dot(w, mode_kinetic_energies(s))),
        entropy=float(np.sum(boltzmann_entropy(w))),
        potential=inner(V0, density(s)),
    )


class SpectralDensities(NamedTuple):
    kinetic_density: np.ndarray
    entropy_density: np.ndarray


def spectral_densities(s: GibbsState) -> SpectralDensities:
    """Local densities of ``grad rho grad`` and ``rho log rho``.

    The kinetic density carries a minus sign, ``-sum_p w_p |grad phi_p|^2``,
    so it is nonpositive. This is the sign that enters the representation
    formula for ``A[n]``.
    """
    w = s.occupations
    g = gradient_columns(s.eigenvectors)
    kin = -(g**2) @ w
    ent = (s.eigenvectors**2) @ xlogy(w, w)
    return SpectralDensities(kin, ent)


def divided_difference(a, b):
    """``G(a, b) = (exp(-a) - exp(-b)) / (b - a)``, ``G(a, a) = exp(-a)``.

    Evaluated as ``exp(-min) * (1 - exp(-d)) / d`` with ``d = |b - a|`` so
    nothing overflows; a Taylor branch covers nearly degenerate pairs.
    """
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    lo = np.minimum(a, b)
    d = np.abs(b - a)
    small = d < DEGENERACY_THRESHOLD
    safe = np.where(small, 1.0, d)
    ratio = np.where(small, 1.0 - d / 2.0 + d * d / 6.0, -np.expm1(-safe) / safe)
    return np.exp(-lo) * ratio


def density_response(s: GibbsState) -> np.ndarray:
    """Jacobian ``J = dn/dA`` of the closure map at ``s``.

    ``J_ij = -h sum_{p,q} G(l_p, l_q) phi_p(i) phi_q(i) phi_p(j) phi_q(j)``.
    Symmetric negative definite. Costs O(N^4) flops, done in blocks of modes
    to keep the products matrix-matrix.
    """
    lam = s.eigenvalues
    phi = s.eigenvectors
    N = lam.size
    G = divided_difference(lam[:, None], lam[None, :])
    J = np.zeros((N, N))
    block = max(1, min(N, 2**22 // (N * N)))
    for start in range(0, N, block):
        p = slice(start, min(N, start + block))
        # X[i, (p, q)] = phi_p(i) phi_q(i)
        X = (phi[:, p, None] * phi[:, None, :]).reshape(N, -1)
        J -= (X * G[p].reshape(-1)) @ X.T
    J *= s.h
    return 0.5 * (J + J.T)


def free_partition_function(n_points: int) -> float:
    """``Theta_h = Tr exp(-L_per)`` from the circulant spectrum."""
    k = np.arange(n_points)
    gamma = 2.0 * (1.0 - np.cos(2.0 * np.pi * k / n_points)) * n_points**2
    return float(np.sum(np.exp(-gamma)))
