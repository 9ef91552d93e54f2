"""Implicit time stepping of the quantum drift-diffusion system.

One step solves, for the chemical potential ``A = A_{k+1}``,

    R(A) = n[A] - n_k + dt * D_{n_k}(A - V[n[A]]) = 0,

with ``n[A]`` the Gibbs-state density, ``V[.]`` the pinned Poisson solve (or
zero) and ``D_n`` the flux operator with half-point densities. The Jacobian
``J + dt * D_{n_k} (I - P J)`` is exact, so Newton converges quadratically.

Because ``n -> F[n]`` is convex with gradient ``-(A - V)``, every exact step
satisfies ``F[n_{k+1}] + dt * dissipation <= F[n_k]``; the driver checks this
(and mass conservation and the decay of ``Sigma``) at every step.
"""
import logging
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from . import diagnostics
from .closure import chemical_potential
from .equilibrium import Equilibrium, solve_equilibrium
from .errors import ConvergenceError, InvariantViolation
from .grid import Grid, _as_field, divergence_flux, flux_matrix, integrate
from .poisson import poisson_energy, poisson_matrix, solve_poisson
from .spectral import GibbsState, density, density_response, state_for

log = logging.getLogger(__name__)

INIT_KINDS = ("equilibrium", "equilibrium_perturbation", "random_perturbation", "file")
V0_KINDS = ("zero", "cosine", "file")


@dataclass
class SimConfig:
    """Everything a run needs; defaults are the documented ones."""

    n_points: int = 64
    dt: float = 1e-3
    t_final: float = 1.0
    poisson_on: bool = False
    mass: float = 1.0
    v0: str = "zero"
    v0_amplitude: float = 0.0
    v0_mode: int = 1
    v0_file: Optional[str] = None
    init: str = "equilibrium_perturbation"
    amplitude: float = 0.05
    mode: int = 1
    seed: int = 0
    init_file: Optional[str] = None
    newton_tol: float = 1e-12
    newton_stall_tol: float = 1e-10
    newton_max_iter: int = 30
    max_dt_halvings: int = 4
    energy_tol: float = 1e-8
    eq_mix: float = 0.5
    eq_tol: float = 1e-10
    eq_max_iter: int = 500
    inverse_tol: float = 1e-10
    inverse_max_iter: int = 100
    fit_fraction: float = 0.5
    fit_floor: float = 1e-10
    output_dir: str = "out"
    svg: bool = False
    snapshot_every: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        Grid(self.n_points)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be >= dt")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.init not in INIT_KINDS:
            raise ValueError("init must be one of %s" % (INIT_KINDS,))
        if self.v0 not in V0_KINDS:
            raise ValueError("v0 must be one of %s" % (V0_KINDS,))
        if self.init == "file" and not self.init_file:
            raise ValueError("init = file needs init_file")
        if self.v0 == "file" and not self.v0_file:
            raise ValueError("v0 = file needs v0_file")
        if not 0 < self.fit_fraction <= 1:
            raise ValueError("fit_fraction must lie in (0, 1]")
        if self.max_dt_halvings < 0 or self.newton_max_iter < 1:
            raise ValueError("solver iteration limits must be positive")

    @property
    def grid(self) -> Grid:
        return Grid(self.n_points)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def external_potential(self) -> np.ndarray:
        x = self.grid.nodes
        if self.v0 == "zero":
            return np.zeros(self.n_points)
        if self.v0 == "cosine":
            return self.v0_amplitude * np.cos(2 * np.pi * self.v0_mode * x)
        from .io import read_field_csv
        return read_field_csv(self.v0_file, "V0", self.n_points)

    def initial_density(self, eq: Equilibrium) -> np.ndarray:
        """Initial data, renormalised to ``self.mass``."""
        x = self.grid.nodes
        if self.init == "equilibrium":
            n0 = eq.n_inf.copy()
        elif self.init == "equilibrium_perturbation":
            n0 = eq.n_inf * (1.0 + self.amplitude * np.cos(2 * np.pi * self.mode * x))
        elif self.init == "random_perturbation":
            rng = np.random.default_rng(self.seed)
            modes = np.arange(1, 5)
            coef = rng.normal(size=(2, modes.size)) / modes
            bump = coef[0] @ np.cos(2 * np.pi * np.outer(modes, x)) \
                + coef[1] @ np.sin(2 * np.pi * np.outer(modes, x))
            n0 = eq.n_inf * (1.0 + self.amplitude * bump / np.abs(bump).max())
        else:
            from .io import read_field_csv
            n0 = read_field_csv(self.init_file, "n", self.n_points)
        if np.any(n0 <= 0):
            raise ValueError("initial density must be positive")
        return n0 * (self.mass / integrate(n0))


@dataclass(frozen=True, eq=False)
class StepResult:
    n_next: np.ndarray
    A_next: np.ndarray
    V_next: np.ndarray
    state: GibbsState
    newton_iters: int
    residual: float
    dissipation: float
    free_energy: float
    mass_defect: float
    substeps: int = 1


@dataclass(frozen=True)
class StepRecord:
    t: float
    mass: float
    free_energy: float
    free_energy_gap: float
    sigma: float
    rel_entropy: float
    dissipation: float
    min_density: float
    newton_iters: int


SERIES_COLUMNS = tuple(f.name for f in fields(StepRecord))


@dataclass
class TimeSeries:
    """Per-step diagnostics, plus the equilibrium and tail fit of a run.

    Row 0 is the initial state; its ``dissipation`` is the instantaneous
    rate. Row ``k >= 1`` carries the dissipation of the step that produced
    it, ``integral n_{k-1} |grad(A_k - V_k)|^2``, averaged over sub-steps.
    """

    records: list = field(default_factory=list)
    equilibrium: Optional[Equilibrium] = None
    free_energy_inf: float = float("nan")
    mu: float = float("nan")
    r_squared: float = float("nan")
    fit_window: tuple = (0, 0)
    snapshots: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    sigma_initial: float = float("nan")

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


def _potential(n, poisson_on):
    return solve_poisson(n) if poisson_on else np.zeros(n.size)


def free_energy_of(n, A, V) -> float:
    """Dual-form free energy ``-(A + 1, n) + 0.5 ||grad V||^2``."""
    return -integrate((A + 1.0) * n) + poisson_energy(V)


def _newton(n_k, dt, V0, A, cfg):
    N = n_k.size
    P = poisson_matrix(N) if cfg.poisson_on else None
    D = flux_matrix(n_k)
    scale = float(np.max(n_k))

    def residual(A):
        s = state_for(A, V0)
        n = density(s)
        V = P @ n if P is not None else np.zeros(N)
        return n - n_k + dt * divergence_flux(n_k, A - V), s, n, V

    R, s, n, V = residual(A)
    res = float(np.max(np.abs(R)))
    for it in range(cfg.newton_max_iter + 1):
        if res <= cfg.newton_tol * scale:
            return A, s, n, V, R, it
        if it == cfg.newton_max_iter:
            break
        J = density_response(s)
        jac = J + dt * (D - D @ P @ J) if P is not None else J + dt * D
        delta = np.linalg.solve(jac, -R)
        merit = float(np.dot(R, R))
        t = 1.0
        while t >= 1.0 / 64:
            trial = residual(A + t * delta)
            if float(np.dot(trial[0], trial[0])) <= (1.0 - 1e-4 * t) * merit:
                break
            t *= 0.5
        else:
            if res <= cfg.newton_stall_tol * scale:
                # roundoff floor of n[A]; no further decrease possible
                return A, s, n, V, R, it
            raise ConvergenceError("Newton line search failed", res)
        A = A + t * delta
        R, s, n, V = trial
        res = float(np.max(np.abs(R)))
    raise ConvergenceError("Newton did not converge in %d iterations" % cfg.newton_max_iter, res)


def _advance(n_k, A_k, F_k, dt, V0, cfg, depth):
    try:
        A, s, n, V, R, iters = _newton(n_k, dt, V0, A_k, cfg)
    except ConvergenceError:
        if depth >= cfg.max_dt_halvings:
            raise
        return _split(n_k, A_k, F_k, dt, V0, cfg, depth)
    diss = diagnostics.dissipation(n_k, A, V)
    F = free_energy_of(n, A, V)
    if F + dt * diss > F_k + cfg.energy_tol * (1.0 + abs(F_k)):
        if depth >= cfg.max_dt_halvings:
            raise InvariantViolation([{
                "check": "free_energy_step", "step": None,
                "detail": "F_next + dt*D - F_prev = %.3e after %d halvings"
                          % (F + dt * diss - F_k, depth)}])
        return _split(n_k, A_k, F_k, dt, V0, cfg, depth)
    defect = float(np.sum(np.abs(R))) / n_k.size
    return StepResult(n, A, V, s, iters, float(np.max(np.abs(R))), diss, F, defect, 1)


def _split(n_k, A_k, F_k, dt, V0, cfg, depth):
    log.info("halving dt to %g", dt / 2)
    first = _advance(n_k, A_k, F_k, dt / 2, V0, cfg, depth + 1)
    second = _advance(first.n_next, first.A_next, first.free_energy, dt / 2, V0, cfg, depth + 1)
    return StepResult(
        second.n_next, second.A_next, second.V_next, second.state,
        first.newton_iters + second.newton_iters, max(first.residual, second.residual),
        0.5 * (first.dissipation + second.dissipation), second.free_energy,
        first.mass_defect + second.mass_defect, first.substeps + second.substeps)


def step(n_k, dt, cfg: SimConfig, warm=None, V0=None) -> StepResult:
    """Advance ``n_k`` by one implicit step of size ``dt``.

    ``warm`` is a starting guess for ``A_{k+1}``, normally ``A_k``; without
    it ``A_k`` is obtained by inverting the closure. On Newton failure or a
    free-energy increase beyond tolerance ``dt`` is halved (the step becomes
    two half steps), at most ``cfg.max_dt_halvings`` times.
    """
    n_k = _as_field(n_k)
    if np.any(n_k <= 0):
        raise ValueError("step needs a positive density")
    if not dt > 0:
        raise ValueError("dt must be positive")
    V0 = cfg.external_potential() if V0 is None else _as_field(V0)
    if warm is None:
        warm = chemical_potential(n_k, V0, tol=cfg.inverse_tol,
                                  max_iter=cfg.inverse_max_iter).A
    A_k = _as_field(warm)
    F_k = free_energy_of(n_k, A_k, _potential(n_k, cfg.poisson_on))
    return _advance(n_k, A_k, F_k, dt, V0, cfg, 0)


def fit_window(gap, fraction, floor):
    """Index range ``[lo, hi)`` used for the decay-rate fit.

    ``hi`` is the first sample where the gap drops to ``floor`` (below it the
    values are roundoff), ``lo`` keeps the last ``fraction`` of what remains,
    but never fewer than 10 samples.
    """
    below = np.nonzero(~(gap > floor))[0]
    hi = int(below[0]) if below.size else gap.size
    lo = hi - max(10, int(np.ceil(fraction * hi)))
    return max(lo, 0), hi


def run(cfg: SimConfig, raise_on_violation=True) -> TimeSeries:
    """Equilibrium, then ``cfg.n_steps`` implicit steps with monitoring.

    Checked at every step: mass against the accumulated Newton residual,
    the step and cumulative free-energy inequalities, ``Sigma`` against its
    initial value, positivity. A failed check raises
    :class:`InvariantViolation` carrying the partial series, unless
    ``raise_on_violation`` is false, in which case it is only recorded.
    """
    V0 = cfg.external_potential()
    eq = solve_equilibrium(V0, cfg.mass, cfg.poisson_on, mix=cfg.eq_mix, tol=cfg.eq_tol,
                           max_iter=cfg.eq_max_iter)
    n = cfg.initial_density(eq)
    if cfg.init == "equilibrium":
        A = eq.A_inf.copy()
    else:
        A = chemical_potential(n, V0, A_init=eq.A_inf, tol=cfg.inverse_tol,
                               max_iter=cfg.inverse_max_iter).A
    V = _potential(n, cfg.poisson_on)
    series = TimeSeries(equilibrium=eq)
    F_inf = free_energy_of(eq.n_inf, eq.A_inf, _potential(eq.n_inf, cfg.poisson_on))
    series.free_energy_inf = F_inf

    def record(t, n, A, V, diss, iters):
        F = free_energy_of(n, A, V)
        S = integrate(n * (eq.A_inf - A))
        sig = diagnostics.sigma_functional(n, A, eq, V=V)
        series.records.append(StepRecord(t, integrate(n), F, F - F_inf, sig, S, diss,
                                         float(n.min()), iters))
        return F, sig

    F0, sigma0 = record(0.0, n, A, V, diagnostics.dissipation(n, A, V), 0)
    series.sigma_initial = sigma0
    mass0 = integrate(n)
    eps = cfg.energy_tol * (1.0 + abs(F0))
    if cfg.snapshot_every:
        series.snapshots[0] = (n.copy(), A.copy(), V.copy())
    cumulative = 0.0
    defect = 0.0
    F_prev = F0
    for k in range(1, cfg.n_steps + 1):
        try:
            res = _advance(n, A, F_prev, cfg.dt, V0, cfg, 0)
        except InvariantViolation as exc:
            for item in exc.report:
                item["step"] = k
            exc.partial = series
            raise
        cumulative += cfg.dt * res.dissipation
        defect += res.mass_defect
        n, A, V = res.n_next, res.A_next, res.V_next
        F, sig = record(k * cfg.dt, n, A, V, res.dissipation, res.newton_iters)
        if cfg.snapshot_every and k % cfg.snapshot_every == 0:
            series.snapshots[k] = (n.copy(), A.copy(), V.copy())
        checks = (
            ("mass", abs(integrate(n) - mass0) <= defect + 1e-13 * k * mass0 + 1e-14,
             "drift %.3e" % (integrate(n) - mass0)),
            ("free_energy_cumulative", F + cumulative <= F0 + k * eps,
             "F_k + dt*sum(D) - F_0 = %.3e" % (F + cumulative - F0)),
            ("sigma", sig <= sigma0 + k * eps, "Sigma_k - Sigma_0 = %.3e" % (sig - sigma0)),
            ("positivity", n.min() > 0, "min n = %.3e" % n.min()),
        )
        failed = [{"check": c, "step": k, "detail": d} for c, ok, d in checks if not ok]
        if failed:
            series.violations.extend(failed)
            if raise_on_violation:
                raise InvariantViolation(failed, partial=series)
        F_prev = F
    gap = series.column("free_energy_gap")
    lo, hi = fit_window(gap, cfg.fit_fraction, cfg.fit_floor * (1.0 + abs(F_inf)))
    series.fit_window = (lo, hi)
    if hi - lo >= 10:
        fit = diagnostics.fit_exponential(series.column("t")[lo:hi], gap[lo:hi])
        series.mu, series.r_squared = fit.mu, fit.r_squared
    return series
