"""Nash-equilibrium social distancing by forward-backward sweep.

Each sweep pass integrates the SIR model forward under the current
population behaviour k, derives the terminal values of the rescaled
adjoints from the late-time asymptotics, integrates the adjoints backward,
and moves k towards the pointwise optimal control

    kappa = kappa* - (v_s - v_i) * i / (2 beta)

with an adaptive relaxation factor. Rescaled adjoints absorb the factor
exp(rho t) / (1 - C(t)), so the backward equations only see the hazard and
stay finite for any horizon.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import timing as tm
from .asymptotics import (SelfConsistencyReport, TailState, adjoint_boundary,
                          salvage_utility, self_consistency, tail_state)
from .dynamics import (EpidemicTrajectory, Grid, infected_midpoints,
                       integrate_individual, integrate_population)
from .errors import InvalidInputError, NonConvergenceError, TailDomainError

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 5000
DEFAULT_OMEGA = 0.2
OMEGA_FLOOR = 1e-3
# consecutive residual decreases before the relaxation factor is allowed to grow back
OMEGA_REGROW_STREAK = 10
OMEGA_REGROW_FACTOR = 1.5


def scenario_violations(alpha, beta, kappa_star, i0, rho) -> list[str]:
    """Every violated scalar invariant of a Scenario, in a fixed order."""
    values = dict(alpha=alpha, beta=beta, kappa_star=kappa_star, i0=i0, rho=rho)
    problems = [f"{k} must be finite" for k, v in values.items() if not math.isfinite(v)]
    if problems:
        return problems
    if alpha < 0:
        problems.append("alpha must be non-negative")
    if beta <= 0:
        problems.append("beta must be positive")
    if kappa_star <= 1:
        problems.append("kappa_star must exceed 1")
    if not 0 < i0 < 1:
        problems.append("i0 must lie in (0, 1)")
    if rho < 0:
        problems.append("rho must be non-negative")
    return problems


@dataclass(frozen=True)
class Scenario:
    alpha: float = 400.0
    beta: float = 1.0
    kappa_star: float = 3.0
    i0: float = 1e-4
    rho: float = 0.0
    timing: tm.VaccinationTiming = field(default_factory=tm.Never)
    grid: Grid = field(default_factory=Grid)

    def __post_init__(self):
        problems = scenario_violations(self.alpha, self.beta, self.kappa_star, self.i0, self.rho)
        if problems:
            raise InvalidInputError(problems[0])
        if isinstance(self.timing, tm.Sharp):
            if self.timing.t_v > self.grid.t_last + 1e-9:
                raise InvalidInputError("sharp t_v must not exceed t_end")
            self.grid.index_of(self.timing.t_v)

    @property
    def s0(self) -> float:
        return 1.0 - self.i0

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class AdjointTrajectory:
    v_hat_s: np.ndarray
    v_hat_i: np.ndarray


@dataclass
class EquilibriumResult:
    scenario: Scenario
    trajectory: EpidemicTrajectory
    adjoints: AdjointTrajectory
    tail: TailState | None
    utility: float | None
    iterations: int
    residual_history: np.ndarray
    self_consistency: SelfConsistencyReport | None
    converged: bool = True
    clamped: int = 0
    omega: float = DEFAULT_OMEGA

    @property
    def times(self) -> np.ndarray:
        return self.scenario.grid.times

    @property
    def control(self) -> np.ndarray:
        return self.trajectory.k

    @property
    def residual(self) -> float:
        return float(self.residual_history[-1])


@dataclass
class _Problem:
    """Everything the sweep needs on the (possibly truncated) solve grid."""

    scenario: Scenario
    grid: Grid
    haz: np.ndarray
    haz_mid: np.ndarray

    @property
    def sharp(self) -> bool:
        return isinstance(self.scenario.timing, tm.Sharp)

    def boundary(self, traj: EpidemicTrajectory):
        sc = self.scenario
        if self.sharp:
            # everyone susceptible is vaccinated at t_v, the infected recover freely
            return 0.0, -sc.alpha / (sc.rho + 1.0), None
        tail = tail_state(float(traj.s[-1]), float(traj.i[-1]), sc.kappa_star)
        vs, vi = adjoint_boundary(tail, sc.timing, sc.rho, sc.alpha, self.grid.t_last)
        return vs, vi, tail

    def adjoints(self, traj, k, vs_end, vi_end, best_response=False):
        sc = self.scenario
        k_mid = _kernels.midpoints_cubic(k)
        i_mid = infected_midpoints(self.grid, traj)
        vs, vi = _kernels.adjoint_backward(
            self.grid.dt, k, k_mid, traj.i, i_mid, self.haz, self.haz_mid,
            sc.rho, sc.alpha, sc.beta, sc.kappa_star, vs_end, vi_end, best_response)
        return AdjointTrajectory(v_hat_s=vs, v_hat_i=vi)

    def control_map(self, traj, adj):
        sc = self.scenario
        raw = sc.kappa_star - (adj.v_hat_s - adj.v_hat_i) * traj.i / (2.0 * sc.beta)
        cand = np.clip(raw, 0.0, sc.kappa_star)
        return cand, int(np.count_nonzero(cand != raw))


def _problem(scenario: Scenario) -> _Problem:
    grid = scenario.grid
    timing = scenario.timing
    if isinstance(timing, tm.Sharp):
        grid = grid.truncated(grid.index_of(timing.t_v) + 1)
        haz = np.zeros(grid.n_points)
        haz_mid = np.zeros(grid.n_points - 1)
    else:
        haz = np.asarray(tm.hazard(timing, grid.times), dtype=float)
        haz_mid = np.asarray(tm.hazard(timing, grid.midpoints), dtype=float)
    return _Problem(scenario=scenario, grid=grid, haz=haz, haz_mid=haz_mid)


def _extend_after_vaccination(scenario: Scenario, traj: EpidemicTrajectory,
                              adj: AdjointTrajectory):
    """Continue a sharp-timing solution past t_v: s = 0, k = kappa*, i decays."""
    full = scenario.grid
    n_v = traj.s.shape[0]
    t = full.times
    t_v = t[n_v - 1]
    after = t[n_v:] - t_v
    i_v = traj.i[-1]
    s = np.concatenate([traj.s, np.zeros(after.size)])
    i = np.concatenate([traj.i, i_v * np.exp(-after)])
    k = np.concatenate([traj.k, np.full(after.size, scenario.kappa_star)])
    tail_mid = i_v * np.exp(-(full.midpoints[n_v - 1:] - t_v))
    tail_end = i[n_v:]
    stage = np.concatenate(
        [traj.stage_i, np.column_stack([tail_mid, tail_mid, tail_end])])
    vs = np.concatenate([adj.v_hat_s, np.zeros(after.size)])
    vi = np.concatenate([adj.v_hat_i,
                         np.full(after.size, -scenario.alpha / (scenario.rho + 1.0))])
    return (EpidemicTrajectory(s=s, i=i, k=k, stage_i=stage),
            AdjointTrajectory(v_hat_s=vs, v_hat_i=vi))


def _finish(prob: _Problem, traj, adj, tail, **kw) -> EquilibriumResult:
    sc = prob.scenario
    if prob.sharp:
        traj, adj = _extend_after_vaccination(sc, traj, adj)
    report = None
    if tail is not None:
        report = self_consistency(tail, traj, traj.k, sc.kappa_star)
    result = EquilibriumResult(scenario=sc, trajectory=traj, adjoints=adj, tail=tail,
                               utility=None, self_consistency=report, **kw)
    result.utility = evaluate_utility(sc, traj.k, traj)
    return result


def solve_nash(scenario: Scenario, *, tol: float = DEFAULT_TOL,
               max_iter: int = DEFAULT_MAX_ITER, omega: float = DEFAULT_OMEGA,
               omega_floor: float = OMEGA_FLOOR) -> EquilibriumResult:
    """Compute the Nash-equilibrium behaviour k(t) for ``scenario``.

    Raises NonConvergenceError (with the last iterate attached) when the
    sup-norm change of the control map stays above ``tol`` after
    ``max_iter`` passes.
    """
    prob = _problem(scenario)
    sc = scenario
    k = np.full(prob.grid.n_points, sc.kappa_star)
    omega0 = omega
    history = []
    streak = 0
    for it in range(1, max_iter + 1):
        traj = integrate_population(prob.grid, k, sc.s0, sc.i0)
        vs_end, vi_end, tail = prob.boundary(traj)
        adj = prob.adjoints(traj, k, vs_end, vi_end)
        cand, clamped = prob.control_map(traj, adj)
        res = float(np.max(np.abs(cand - k)))
        if not math.isfinite(res):
            raise NonConvergenceError("sweep produced non-finite controls", history)
        history.append(res)
        if res <= tol:
            log.debug("sweep converged after %d passes (omega=%g)", it, omega)
            if clamped:
                log.warning("%d control values clamped at convergence", clamped)
            return _finish(prob, traj, adj, tail, iterations=it,
                           residual_history=np.asarray(history), clamped=clamped,
                           omega=omega)
        if len(history) > 1 and res > history[-2]:
            omega = max(0.5 * omega, omega_floor)
            streak = 0
        else:
            streak += 1
            if streak >= OMEGA_REGROW_STREAK and omega < omega0:
                omega = min(OMEGA_REGROW_FACTOR * omega, omega0)
                streak = 0
        k = (1.0 - omega) * k + omega * cand
    partial = _finish(prob, traj, adj, tail, iterations=max_iter,
                      residual_history=np.asarray(history), converged=False,
                      clamped=clamped, omega=omega)
    raise NonConvergenceError(
        f"forward-backward sweep did not reach tol={tol:g} in {max_iter} passes "
        f"(last residual {history[-1]:.3e})", history, result=partial)


def _solve_grid_slice(scenario: Scenario, population: EpidemicTrajectory, n: int):
    if population.s.shape[0] == n:
        return population
    stage = None if population.stage_i is None else population.stage_i[:n - 1]
    return EpidemicTrajectory(s=population.s[:n], i=population.i[:n],
                              k=population.k[:n], stage_i=stage)


def solve_best_response(scenario: Scenario, population: EpidemicTrajectory) -> np.ndarray:
    """Individual control maximising expected utility against a frozen population.

    The individual's adjoint equations do not involve the individual's own
    state probabilities, so substituting the pointwise Hamiltonian maximiser
    turns them into a closed terminal-value problem that is integrated
    backward once, without the population's sweep iteration.
    """
    prob = _problem(scenario)
    n = prob.grid.n_points
    pop = _solve_grid_slice(scenario, population, n)
    if pop.s.shape[0] != n:
        raise InvalidInputError("population trajectory does not match the scenario grid")
    vs_end, vi_end, _ = prob.boundary(pop)
    adj = prob.adjoints(pop, pop.k, vs_end, vi_end, best_response=True)
    kappa, _ = prob.control_map(pop, adj)
    if prob.sharp:
        extra = scenario.grid.n_points - n
        kappa = np.concatenate([kappa, np.full(extra, scenario.kappa_star)])
    return kappa


def evaluate_utility(scenario: Scenario, individual_control,
                     population: EpidemicTrajectory) -> float:
    """Expected utility of an individual playing ``individual_control``.

    Trapezoid rule over the horizon plus the asymptotic salvage term (or the
    vaccination salvage at t_v for sharp timing).
    """
    sc = scenario
    timing = sc.timing
    if isinstance(timing, tm.Sharp):
        grid = sc.grid.truncated(sc.grid.index_of(timing.t_v) + 1)
    else:
        grid = sc.grid
    n = grid.n_points
    kappa = np.asarray(individual_control, dtype=float)
    if kappa.ndim == 0:
        kappa = np.full(sc.grid.n_points, float(kappa))
    kappa = kappa[:n]
    pop = _solve_grid_slice(sc, population, n)
    ind = integrate_individual(grid, kappa, pop, sc.s0, sc.i0)
    t = grid.times
    disc = np.exp(-sc.rho * t)
    running = -sc.alpha * ind.psi_i - sc.beta * ind.psi_s * (kappa - sc.kappa_star) ** 2
    if isinstance(timing, tm.Sharp):
        body = float(np.trapezoid(disc * running, t))
        u_v = -disc[-1] * sc.alpha * ind.psi_i[-1] / (sc.rho + 1.0)
        return body + u_v
    surv = np.asarray(tm.survival(timing, t))
    dens = np.asarray(tm.pdf(timing, t))
    integrand = surv * disc * running - dens * disc * sc.alpha * ind.psi_i / (sc.rho + 1.0)
    body = float(np.trapezoid(integrand, t))
    if sc.alpha == 0:
        return body
    tail = tail_state(float(pop.s[-1]), float(pop.i[-1]), sc.kappa_star)
    salvage = salvage_utility(tail, timing, sc.rho, sc.alpha, grid.t_last,
                              psi_s_e=float(ind.psi_s[-1]), psi_i_e=float(ind.psi_i[-1]))
    return body + salvage


def evaluate_control(scenario: Scenario, k) -> EquilibriumResult:
    """Package a prescribed population behaviour (e.g. k = kappa*) as a result.

    Useful for non-behavioural baselines. Tail quantities and the utility are
    left as None when the terminal state is outside the asymptotic regime.
    """
    prob = _problem(scenario)
    n = prob.grid.n_points
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        k = np.full(scenario.grid.n_points, float(k))
    k_solve = k[:n]
    traj = integrate_population(prob.grid, k_solve, scenario.s0, scenario.i0)
    try:
        vs_end, vi_end, tail = prob.boundary(traj)
    except TailDomainError:
        vs_end, vi_end, tail = 0.0, -scenario.alpha / (scenario.rho + 1.0), None
        domain_ok = False
    else:
        domain_ok = True
    adj = prob.adjoints(traj, k_solve, vs_end, vi_end)
    cand, clamped = prob.control_map(traj, adj)
    history = np.asarray([np.max(np.abs(cand - k_solve))])
    if prob.sharp or domain_ok:
        return _finish(prob, traj, adj, tail, iterations=0, residual_history=history,
                       converged=False, clamped=clamped)
    return EquilibriumResult(scenario=scenario, trajectory=traj, adjoints=adj, tail=None,
                             utility=None, iterations=0, residual_history=history,
                             self_consistency=None, converged=False, clamped=clamped)


def stationarity_residual(result: EquilibriumResult) -> float:
    """Max over interior points of dH/dkappa, normalised by 2 beta kappa* (1-C) e^(-rho t) psi_s."""
    sc = result.scenario
    traj, adj = result.trajectory, result.adjoints
    g = (traj.k - sc.kappa_star) + (adj.v_hat_s - adj.v_hat_i) * traj.i / (2.0 * sc.beta)
    if isinstance(sc.timing, tm.Sharp):
        g = g[:sc.grid.index_of(sc.timing.t_v) + 1]
    return float(np.max(np.abs(g[1:-1]))) / sc.kappa_star
