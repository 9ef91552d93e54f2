import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from qddlab.closure import chemical_potential
from qddlab.diagnostics import (commutator_check, commutator_trace, dissipation, fit_exponential,
                                free_energy, inequality_panel, relative_entropy, sigma_from_relative_entropy,
                                sigma_functional)
from qddlab.equilibrium import solve_equilibrium
from qddlab.grid import Grid, flux_matrix, integrate, kinetic_matrix
from qddlab.poisson import poisson_energy, solve_poisson
from qddlab.spectral import assemble_hamiltonian, density, state_for


def smooth(N, seed, amplitude=0.5):
    rng = np.random.default_rng(seed)
    x = Grid(N).nodes
    A = np.zeros(N)
    for k in (1, 2, 3):
        a, b = rng.normal(size=2) * amplitude / k
        A += a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
    return A


def unit_mass(A, V0):
    s = state_for(A, V0)
    return state_for(A + np.log(s.mass), V0)


def test_flat_equilibrium_free_energy():
    N = 32
    eq = solve_equilibrium(np.zeros(N), 1.0, poisson_on=False)
    theta = np.trace(expm(-kinetic_matrix(N)))
    fe = free_energy(eq.state, np.zeros(N), np.zeros(N))
    assert fe.F_dual == pytest.approx(-(np.log(theta) + 1), abs=1e-12)
    assert fe.F_spectral == pytest.approx(fe.F_dual, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_free_energy_forms_agree(seed):
    N = 32
    rng = np.random.default_rng(seed)
    V0 = smooth(N, seed + 100)
    for shift in (0.0, 1.3):
        s = state_for(rng.uniform(-2, 2, size=N) + shift, V0)
        V = solve_poisson(density(s))
        fe = free_energy(s, V0, V)
        assert fe.gap <= 1e-10 * (1 + abs(fe.F_spectral))


def test_relative_entropy_of_state_with_itself():
    s = state_for(smooth(24, 1), np.zeros(24))
    S = relative_entropy(s, s)
    assert abs(S.S_linear) <= 1e-12 and abs(S.S_matrix) <= 1e-12


def test_relative_entropy_routes_agree_and_match_expm():
    N = 24
    V0 = smooth(N, 7)
    for seed in range(5):
        s1, s2 = unit_mass(smooth(N, seed), V0), unit_mass(smooth(N, seed + 50), V0)
        S = relative_entropy(s1, s2)
        assert S.S_linear == pytest.approx(S.S_matrix, abs=1e-9)
        assert S.S_linear > 0
        # direct oracle with scipy's matrix exponential and logarithm
        H1 = np.asarray(assemble_hamiltonian(s1.potential, V0))
        H2 = np.asarray(assemble_hamiltonian(s2.potential, V0))
        oracle = np.trace(expm(-H1) @ (H2 - H1))
        assert S.S_matrix == pytest.approx(oracle, rel=1e-6, abs=1e-12)


def test_relative_entropy_nonnegative_ensemble():
    # nonnegativity needs equal traces
    N = 16
    rng = np.random.default_rng(11)
    for _ in range(100):
        s1 = unit_mass(rng.uniform(-2, 2, size=N), np.zeros(N))
        s2 = unit_mass(rng.uniform(-2, 2, size=N), np.zeros(N))
        assert relative_entropy(s1, s2).S_matrix >= -1e-12


def near_equilibrium(poisson_on, seed=0, N=32):
    V0 = 0.3 * np.cos(2 * np.pi * Grid(N).nodes)
    eq = solve_equilibrium(V0, 1.0, poisson_on)
    x = Grid(N).nodes
    n = eq.n_inf * (1 + 0.05 * np.cos(2 * np.pi * (x + 0.1 * seed)))
    n /= integrate(n)
    res = chemical_potential(n, V0=V0, A_init=eq.A_inf)
    V = solve_poisson(n) if poisson_on else np.zeros(N)
    return eq, V0, n, res.A, res.state, V


def test_sigma_at_equilibrium_vanishes():
    eq, V0, *_ = near_equilibrium(True)
    assert abs(sigma_functional(eq.n_inf, eq.A_inf, eq)) <= 1e-12


@pytest.mark.parametrize("poisson_on", [False, True])
def test_sigma_two_routes_and_free_energy_gap(poisson_on):
    eq, V0, n, A, s, V = near_equilibrium(poisson_on)
    sig = sigma_functional(n, A, eq, V=V)
    assert sig > 0
    assert sig == pytest.approx(sigma_from_relative_entropy(s, eq, V=V), abs=1e-9)
    F = free_energy(s, V0, V).F_dual
    F_inf = free_energy(eq.state, V0, eq.V_inf).F_dual
    assert F - F_inf == pytest.approx(sig, abs=1e-9)


def test_sigma_rejects_mass_mismatch():
    eq, V0, n, A, s, V = near_equilibrium(False)
    with pytest.raises(ValueError, match="mass"):
        sigma_functional(1.01 * n, A, eq)


def test_dissipation_examples():
    N = 24
    rng = np.random.default_rng(4)
    n = rng.uniform(0.5, 2, size=N)
    V = rng.normal(size=N)
    assert dissipation(n, V + 3.0, V) == 0.0
    eq, V0, *_ = near_equilibrium(True)
    assert dissipation(eq.n_inf, eq.A_inf, eq.V_inf) <= 1e-12
    A = rng.normal(size=N)
    u = A - V
    assert dissipation(n, A, V) == pytest.approx(-np.dot(u, flux_matrix(n) @ u) / N, rel=1e-12)


def test_panel_at_equilibrium_reports_absent_ratios():
    eq, V0, *_ = near_equilibrium(False)
    p = inequality_panel(eq.state, eq, eq.n_inf, eq.A_inf, np.zeros(32))
    assert p.klein_numerator <= 1e-14
    assert p.klein_ratio is None and p.logsob_ratio is None
    assert p.lt_sup_ratio is not None and np.isfinite(p.lt_sup_ratio)


def test_panel_klein_positive_on_ensemble():
    N = 16
    V0 = np.zeros(N)
    eq = solve_equilibrium(V0, 1.0, poisson_on=False)
    ratios = []
    for seed in range(15):
        s = unit_mass(smooth(N, seed, 0.8), V0)
        n = density(s)
        p = inequality_panel(s, eq, n, s.potential, np.zeros(N))
        assert p.klein_numerator > 0
        ratios.append(p.klein_ratio)
        assert p.relative_entropy >= 0
        assert np.isfinite(p.lt_sup_ratio) and np.isfinite(p.lt_grad_ratio)
    assert min(ratios) > 0


def test_fit_exact_exponential():
    t = np.arange(11) * 0.1
    fit = fit_exponential(t, 3 * np.exp(-2 * t))
    assert fit.mu == pytest.approx(2.0, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-10)


def test_fit_constant():
    fit = fit_exponential(np.arange(12.0), np.full(12, 0.7))
    assert fit.mu == 0.0 and fit.r_squared == 0.0


def test_fit_perturbed_exponential():
    t = np.arange(11) * 0.1
    fit = fit_exponential(t, 3 * np.exp(-2 * t) * (1 + 0.01 * np.sin(20 * t)))
    assert fit.mu == pytest.approx(2.0, abs=0.05)


def test_fit_growth_gives_negative_rate():
    t = np.arange(10.0)
    assert fit_exponential(t, np.exp(0.5 * t)).mu == pytest.approx(-0.5)


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_exponential(np.arange(9.0), np.ones(9))
    with pytest.raises(ValueError):
        fit_exponential(np.arange(10.0), np.r_[np.ones(9), 0.0])


@settings(max_examples=30, deadline=None)
@given(mu=st.floats(-5, 5), c=st.floats(0.01, 100), n=st.integers(10, 50))
def test_fit_recovers_any_rate(mu, c, n):
    t = np.linspace(0, 1, n)
    assert fit_exponential(t, c * np.exp(-mu * t)).mu == pytest.approx(mu, abs=1e-9)


def test_commutator_at_equilibrium():
    N = 32
    eq = solve_equilibrium(np.zeros(N), 1.0, poisson_on=False)
    c = commutator_check(eq.state, eq, np.zeros(N))
    assert abs(c.lhs) <= 1e-14 and abs(c.rhs) <= 1e-14


def test_commutator_annihilates_functions_of_h():
    N = 32
    V0 = smooth(N, 3)
    s = state_for(smooth(N, 4), V0)
    H = np.asarray(assemble_hamiltonian(np.zeros(N), V0))
    lam, U = np.linalg.eigh(H)
    f_of_H = (U * np.exp(-2 * lam / lam.max())) @ U.T
    raw = commutator_trace(s, np.zeros(N), V0, rho=f_of_H)
    assert abs(raw) <= 1e-12 * np.abs(H).max() ** 2


def test_commutator_rejects_poisson():
    N = 16
    eq = solve_equilibrium(np.zeros(N), 1.0, poisson_on=True)
    with pytest.raises(ValueError):
        commutator_check(eq.state, eq, np.zeros(N))


def test_commutator_gap_shrinks_under_refinement():
    gaps = []
    for N in (32, 64, 128):
        x = Grid(N).nodes
        A = 0.3 * np.cos(2 * np.pi * x) + 0.1 * np.sin(4 * np.pi * x)
        eq = solve_equilibrium(np.zeros(N), 1.0, poisson_on=False)
        s = unit_mass(A, np.zeros(N))
        c = commutator_check(s, eq, np.zeros(N))
        gaps.append(c.gap)
        assert c.rhs > 0
    assert gaps[0] > gaps[1] > gaps[2]
