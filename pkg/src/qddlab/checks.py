"""Invariant suite on random smooth ensembles, for ``qddlab check``."""
import numpy as np

from . import diagnostics as dg
from .closure import chemical_potential
from .equilibrium import solve_equilibrium
from .grid import Grid
from .poisson import solve_poisson
from .spectral import density, density_response, state_for


def random_smooth_potential(rng, n_points, modes=3, amplitude=0.5):
    """Random trigonometric polynomial with ``1/k`` decaying coefficients."""
    x = Grid(n_points).nodes
    A = np.zeros(n_points)
    for k in range(1, modes + 1):
        A += amplitude / k * rng.normal() * np.cos(2 * np.pi * k * x + rng.uniform(0, 2 * np.pi))
    return A


def unit_mass_state(A, V0):
    """Shift ``A`` by a constant so the state has trace 1."""
    s = state_for(A, V0)
    A = A + np.log(s.mass)
    return A, state_for(A, V0)


def _item(name, value, tol, passed=None):
    ok = bool(value <= tol) if passed is None else bool(passed)
    return {"check": name, "value": float(value), "tolerance": float(tol), "passed": ok}


def run_checks(seed=0, n_points=32, samples=20):
    """Return ``{"passed": bool, "checks": [...]}``."""
    rng = np.random.default_rng(seed)
    V0 = np.zeros(n_points)
    out = []

    err = 0.0
    for _ in range(samples):
        A = random_smooth_potential(rng, n_points)
        A_back = chemical_potential(density(state_for(A, V0)), V0, tol=1e-10).A
        err = max(err, float(np.max(np.abs(A_back - A))))
    out.append(_item("closure_round_trip", err, 1e-8))

    A = random_smooth_potential(rng, 24)
    s = state_for(A, np.zeros(24))
    J = density_response(s)
    rel = 0.0
    for _ in range(10):
        d = rng.normal(size=24)
        eps = 1e-5
        fd = (density(state_for(A + eps * d, np.zeros(24)))
              - density(state_for(A - eps * d, np.zeros(24)))) / (2 * eps)
        rel = max(rel, float(np.max(np.abs(fd - J @ d)) / np.max(np.abs(J @ d))))
    out.append(_item("density_response_fd", rel, 1e-5))

    eq_off = solve_equilibrium(V0, 1.0, poisson_on=False)
    eq_on = solve_equilibrium(V0, 1.0, poisson_on=True)
    fe_gap = ent_gap = sig_gap = fe_sig = 0.0
    s_min = np.inf
    klein_min = np.inf
    for i in range(samples):
        A, s = unit_mass_state(random_smooth_potential(rng, n_points), V0)
        n = density(s)
        eq = eq_on if i % 2 else eq_off
        V = solve_poisson(n) if eq.poisson_on else np.zeros(n_points)
        fe = dg.free_energy(s, V0, V)
        fe_gap = max(fe_gap, fe.gap / (1 + abs(fe.F_spectral)))
        S = dg.relative_entropy(s, eq.state)
        ent_gap = max(ent_gap, abs(S.S_linear - S.S_matrix))
        s_min = min(s_min, S.S_linear, S.S_matrix)
        sig = dg.sigma_functional(n, A, eq, V=V)
        sig_gap = max(sig_gap, abs(sig - dg.sigma_from_relative_entropy(s, eq, V=V)))
        F_inf = dg.free_energy(eq.state, V0, eq.V_inf).F_dual
        fe_sig = max(fe_sig, abs(fe.F_dual - F_inf - sig))
        panel = dg.inequality_panel(s, eq, n, A, V)
        if panel.klein_ratio is not None:
            klein_min = min(klein_min, panel.klein_ratio)
    self_S = dg.relative_entropy(eq_off.state, eq_off.state)
    out.append(_item("free_energy_identity", fe_gap, 1e-10))
    out.append(_item("relative_entropy_self", max(map(abs, self_S)), 1e-12))
    out.append(_item("relative_entropy_routes", ent_gap, 1e-9))
    out.append(_item("relative_entropy_nonnegative", -s_min, 0.0, passed=s_min >= 0))
    out.append(_item("sigma_vs_relative_entropy", sig_gap, 1e-9))
    out.append(_item("free_energy_gap_equals_sigma", fe_sig, 1e-9))
    out.append(_item("klein_ratio_min", klein_min, 0.0, passed=np.isfinite(klein_min) and klein_min > 0))

    x = Grid(64).nodes
    V = solve_poisson(np.ones(64))
    out.append(_item("poisson_quadratic", float(np.max(np.abs(V - x * (1 - x) / 2))), 1e-13))
    return {"passed": all(c["passed"] for c in out), "seed": seed, "checks": out}
