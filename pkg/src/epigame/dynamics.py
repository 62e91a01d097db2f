"""SIR population dynamics and individual infection probabilities on a fixed grid.

Time is measured in units of the recovery period. Controls are sampled at
grid points; RK4 half-step values come from four-point cubic interpolation so
the scheme stays fourth order for smooth controls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IntegratorInstabilityError, InvalidInputError

NEGATIVE_STATE_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform time grid t_j = j * dt, j = 0 .. n_points - 1."""

    t_end: float = 200.0
    dt: float = 0.01

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and np.isfinite(self.dt)):
            raise InvalidInputError("grid t_end and dt must be finite")
        if self.dt <= 0 or self.t_end <= 0:
            raise InvalidInputError("grid t_end and dt must be positive")
        if self.n_points < 2:
            raise InvalidInputError("grid needs at least two points")

    @property
    def n_points(self) -> int:
        return int(round(self.t_end / self.dt)) + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dt

    @property
    def t_last(self) -> float:
        return (self.n_points - 1) * self.dt

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_points - 1) + 0.5) * self.dt

    def index_of(self, t: float) -> int:
        """Grid index of time ``t``; ``t`` must lie on the grid."""
        j = int(round(t / self.dt))
        if abs(j * self.dt - t) > 1e-9 * max(1.0, abs(t)) or not 0 <= j < self.n_points:
            raise InvalidInputError(f"time {t} is not a point of the grid (dt={self.dt})")
        return j

    def truncated(self, n_points: int) -> "Grid":
        return Grid(t_end=(n_points - 1) * self.dt, dt=self.dt)


@dataclass(frozen=True)
class EpidemicTrajectory:
    """Population fractions s, i and population behaviour k on a grid."""

    s: np.ndarray
    i: np.ndarray
    k: np.ndarray
    # infected fraction at RK stages 2-4 of each step; lets the individual
    # equations reproduce the population scheme exactly
    stage_i: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def r(self) -> np.ndarray:
        # 1 - s - i can come out as -1e-17 from roundoff alone
        return np.maximum(1.0 - self.s - self.i, 0.0)


@dataclass(frozen=True)
class IndividualTrajectory:
    psi_s: np.ndarray
    psi_i: np.ndarray


def _as_control(grid: Grid, values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(grid.n_points, float(arr))
    if arr.shape != (grid.n_points,):
        raise InvalidInputError(
            f"{name} must have length {grid.n_points}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def _check_fraction(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0 or value > 1:
        raise InvalidInputError(f"{name} must be a finite fraction in [0, 1], got {value}")
    return value


def integrate_population(grid: Grid, k, s0: float, i0: float) -> EpidemicTrajectory:
    """Integrate s' = -k s i, i' = k s i - i with classical RK4.

    ``k`` may be a scalar (constant behaviour) or one value per grid point.
    Raises IntegratorInstabilityError instead of clamping if a state drops
    below -1e-12.
    """
    k = _as_control(grid, k, "k")
    s0 = _check_fraction(s0, "s0")
    i0 = _check_fraction(i0, "i0")
    if i0 <= 0:
        raise InvalidInputError("i0 must be positive")
    if s0 + i0 > 1 + 1e-15:
        raise InvalidInputError("s0 + i0 must not exceed 1")
    if np.any(k < 0):
        raise InvalidInputError("k must be non-negative")
    k_mid = _kernels.midpoints_cubic(k)
    s, i, stage_i, fail = _kernels.sir_forward(grid.dt, k, k_mid, s0, i0, NEGATIVE_STATE_TOL)
    if fail >= 0:
        raise IntegratorInstabilityError(
            f"SIR state left the admissible range at step {fail} "
            f"(t={fail * grid.dt:g}); reduce dt", step=fail)
    return EpidemicTrajectory(s=s, i=i, k=k, stage_i=stage_i)


def integrate_individual(grid: Grid, kappa, population, psi_s0: float,
                         psi_i0: float) -> IndividualTrajectory:
    """Integrate the individual's state probabilities against a population.

    ``population`` is either an EpidemicTrajectory from integrate_population
    (then its stored RK stage values are used, and kappa == k reproduces s, i
    exactly) or a bare array of infected fractions, which is interpolated
    cubically at half steps.
    """
    kappa = _as_control(grid, kappa, "kappa")
    if np.any(kappa < 0):
        raise InvalidInputError("kappa must be non-negative")
    psi_s0 = _check_fraction(psi_s0, "psi_s0")
    psi_i0 = _check_fraction(psi_i0, "psi_i0")
    if isinstance(population, EpidemicTrajectory):
        pop_i = population.i
        stage_i = population.stage_i
    else:
        pop_i = np.asarray(population, dtype=float)
        stage_i = None
    if pop_i.shape != (grid.n_points,):
        raise InvalidInputError(
            f"population_i must have length {grid.n_points}, got shape {pop_i.shape}")
    if not np.all(np.isfinite(pop_i)):
        raise InvalidInputError("population_i contains non-finite values")
    if stage_i is None:
        mid = _kernels.midpoints_cubic(pop_i)
        stage_i = np.column_stack([mid, mid, pop_i[1:]])
    kappa_mid = _kernels.midpoints_cubic(kappa)
    ps, pi, fail = _kernels.individual_forward(
        grid.dt, kappa, kappa_mid, pop_i, stage_i, psi_s0, psi_i0, NEGATIVE_STATE_TOL)
    if fail >= 0:
        raise IntegratorInstabilityError(
            f"individual state left the admissible range at step {fail}; reduce dt",
            step=fail)
    return IndividualTrajectory(psi_s=ps, psi_i=pi)


def infected_midpoints(grid: Grid, traj: EpidemicTrajectory) -> np.ndarray:
    """Cubic Hermite estimate of i at half steps, using i' = k s i - i."""
    di = traj.k * traj.s * traj.i - traj.i
    return 0.5 * (traj.i[:-1] + traj.i[1:]) + grid.dt / 8.0 * (di[:-1] - di[1:])
