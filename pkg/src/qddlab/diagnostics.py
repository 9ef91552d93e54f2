"""Scalar functionals and inequality checks on Gibbs states.

Operator traces are taken on dense matrices of the discrete functional
calculus, where cyclicity of the trace is exact.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats

from .grid import _as_field, check_same_grid, gradient, half_point, inner, integrate
from .poisson import poisson_energy, solve_poisson
from .spectral import (GibbsState, assemble_hamiltonian, density, mode_kinetic_energies,
                       spectral_traces)

# denominators at or below this make a ratio undefined
RATIO_FLOOR = 1e-14


class FreeEnergy(NamedTuple):
    F_spectral: float
    F_dual: float
    gap: float


def free_energy(state: GibbsState, V0, V) -> FreeEnergy:
    """Free energy from the spectrum and from ``-(A + 1, n) + 0.5||grad V||^2``.

    The two agree identically because ``sum beta(w) = -sum lam w - sum w`` and
    ``sum lam w`` splits into kinetic, ``(V0, n)`` and ``(A, n)``.
    """
    tr = spectral_traces(state, V0)
    E_V = poisson_energy(V)
    F_spec = tr.entropy + tr.kinetic + tr.potential + E_V
    F_dual = -inner(state.potential + 1.0, density(state)) + E_V
    return FreeEnergy(F_spec, F_dual, abs(F_spec - F_dual))


class RelativeEntropy(NamedTuple):
    S_linear: float
    S_matrix: float


def relative_entropy(state1: GibbsState, state2: GibbsState) -> RelativeEntropy:
    """``S(rho1, rho2) = Tr rho1 (log rho1 - log rho2)``, two ways.

    Both states must come from the same ``H`` (same ``V0``); they differ by
    their potentials ``A1``, ``A2``, so ``S = (n1, A2 - A1)``.
    """
    check_same_grid(state1.potential, state2.potential)
    n1 = density(state1)
    S_lin = inner(n1, state2.potential - state1.potential)
    rho1 = state1.matrix()
    w1 = state1.occupations
    tr11 = -float(np.dot(w1, state1.eigenvalues))
    tr12 = float(np.sum(rho1 * state2.log_matrix()))
    return RelativeEntropy(S_lin, tr11 - tr12)


def _check_mass(n, eq):
    m, m_inf = integrate(n), integrate(eq.n_inf)
    if abs(m - m_inf) > 1e-8 * max(1.0, abs(m_inf)):
        raise ValueError("mass mismatch with the equilibrium: %.12g vs %.12g" % (m, m_inf))


def _poisson_of(n, eq):
    return solve_poisson(n) if eq.poisson_on else np.zeros(n.size)


def sigma_functional(n, A, eq, V=None) -> float:
    """``-int (n (A - A_inf) + n - n_inf) + 0.5 ||grad(V - V_inf)||^2``.

    ``V`` defaults to the Poisson potential of ``n`` (zero when the
    equilibrium was computed without Poisson coupling).
    """
    n, A = _as_field(n), _as_field(A)
    check_same_grid(n, A, eq.n_inf)
    _check_mass(n, eq)
    V = _poisson_of(n, eq) if V is None else _as_field(V)
    return -integrate(n * (A - eq.A_inf) + n - eq.n_inf) + poisson_energy(V - eq.V_inf)


def sigma_from_relative_entropy(state: GibbsState, eq, V=None) -> float:
    """``S(rho, rho_inf) + 0.5 ||grad(V - V_inf)||^2`` with the matrix-route S."""
    n = density(state)
    _check_mass(n, eq)
    V = _poisson_of(n, eq) if V is None else _as_field(V)
    return relative_entropy(state, eq.state).S_matrix + poisson_energy(V - eq.V_inf)


def dissipation(n, A, V) -> float:
    """``h sum n_{i+1/2} (grad(A - V))_i^2``, same weights as the flux operator."""
    n, A, V = _as_field(n), _as_field(A), _as_field(V)
    check_same_grid(n, A, V)
    if np.any(n <= 0):
        raise ValueError("dissipation needs a positive density")
    g = gradient(A - V)
    return integrate(half_point(n) * g * g)


@dataclass(frozen=True)
class InequalityPanel:
    klein_numerator: float
    klein_ratio: Optional[float]
    lt_sup_ratio: Optional[float]
    lt_grad_ratio: Optional[float]
    logsob_ratio: Optional[float]
    relative_entropy: float
    free_energy_gap: float
    dissipation: float


def _ratio(num, den):
    return num / den if den > RATIO_FLOOR else None


def inequality_panel(state: GibbsState, eq, n, A, V) -> InequalityPanel:
    """Klein, Lieb-Thirring and log-Sobolev ratios for one state.

    The constants in these inequalities are not constructive, so the panel
    only reports ratios; a ratio whose denominator vanishes is ``None``.
    """
    n, A, V = _as_field(n), _as_field(A), _as_field(V)
    delta = state.matrix() - eq.state.matrix()
    weight = eq.state.matrix(lambda lam: 1.0 + np.abs(lam))
    klein_num = float(np.sum(weight * (delta @ delta)))
    S = relative_entropy(state, eq.state).S_linear

    w = state.occupations
    e_norm = float(np.sum(w)) + float(np.dot(w, mode_kinetic_energies(state)))
    j1 = float(np.sum(w))
    j2 = float(np.sqrt(np.sum(w * w)))
    lt_sup = _ratio(float(np.max(np.abs(n))), j2**0.25 * e_norm**0.75)
    grad_n = math.sqrt(inner(gradient(n), gradient(n)))
    lt_grad = _ratio(grad_n, j1**0.25 * e_norm**0.75)

    F = -integrate((A + 1.0) * n) + poisson_energy(V)
    V_inf = _poisson_of(eq.n_inf, eq)
    F_inf = -integrate((eq.A_inf + 1.0) * eq.n_inf) + poisson_energy(V_inf)
    diss = dissipation(n, A, V)
    return InequalityPanel(
        klein_numerator=klein_num,
        klein_ratio=_ratio(S, klein_num),
        lt_sup_ratio=lt_sup,
        lt_grad_ratio=lt_grad,
        logsob_ratio=_ratio(F - F_inf, diss),
        relative_entropy=S,
        free_energy_gap=F - F_inf,
        dissipation=diss,
    )


class ExponentialFit(NamedTuple):
    mu: float
    r_squared: float


def fit_exponential(times, values) -> ExponentialFit:
    """Least-squares line through ``(t, log value)``.

    ``mu`` is minus the slope, so it is positive for decay. For constant data
    ``mu = 0`` and ``r_squared`` is reported as 0.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and values must be 1D of equal length")
    if t.size < 10:
        raise ValueError("need at least 10 samples, got %d" % t.size)
    if np.any(~(y > 0)):
        raise ValueError("values must be positive")
    logy = np.log(y)
    if np.all(logy == logy[0]):
        return ExponentialFit(0.0, 0.0)
    fit = stats.linregress(t, logy)
    return ExponentialFit(float(-fit.slope), float(fit.rvalue**2))


class CommutatorCheck(NamedTuple):
    lhs: float
    rhs: float
    gap: float
    raw_trace: float


def double_commutator(H, rho) -> np.ndarray:
    """``L rho = -[H, [H, rho]]``."""
    C = H @ rho - rho @ H
    return -(H @ C - C @ H)


def commutator_check(state: GibbsState, eq, V0) -> CommutatorCheck:
    """Compare ``int n |grad(A - A_inf)|^2`` with a trace of ``L rho``.

    ``raw_trace = Tr((A_inf - A) L rho)`` with ``L = -[H, [H, .]]`` and
    ``H = L_per + V0``. Using ``[H, rho] = -[A, rho]`` and cyclicity,
    ``raw_trace = -Tr([A, H][A, rho])``, which tends to ``-2 int n |A'|^2``
    on refinement; ``rhs = -raw_trace / 2`` is the quantity that matches the
    dissipation, and ``gap = |lhs - rhs|``.
    """
    if eq.poisson_on:
        raise ValueError("commutator_check is stated without the Poisson potential")
    A = state.potential
    n = density(state)
    lhs = dissipation(n, A, np.zeros(n.size))
    raw = commutator_trace(state, eq.A_inf, V0)
    rhs = -0.5 * raw
    return CommutatorCheck(lhs, rhs, abs(lhs - rhs), raw)


def commutator_trace(state: GibbsState, A_inf, V0, rho=None) -> float:
    """``Tr((A_inf - A) L rho)``; ``rho`` defaults to the state's own matrix."""
    H = np.asarray(assemble_hamiltonian(np.zeros(state.n_points), V0))
    rho = state.matrix() if rho is None else rho
    Lrho = double_commutator(H, rho)
    return float(np.dot(_as_field(A_inf) - state.potential, np.diag(Lrho)))
