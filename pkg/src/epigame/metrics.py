"""Summary numbers for solved equilibria."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from . import timing as tm
from .solver import EquilibriumResult

DEFAULT_DURATION_THRESHOLD = 1e-4
TAIL_MASS_LIMIT = 1e-6


class TailMassWarning(UserWarning):
    """The vaccination distribution has noticeable mass beyond the horizon."""


@dataclass
class RunSummary:
    peak_i: float
    t_peak: float
    duration: float
    expected_vaccinations: float
    final_s: float
    utility: float | None
    eta: float | None
    min_k: float
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def susceptible_at(result: EquilibriumResult, t) -> np.ndarray:
    """s(t) on the horizon by linear interpolation, asymptotic tail beyond t_e."""
    t = np.asarray(t, dtype=float)
    times = result.times
    traj = result.trajectory
    inside = np.interp(np.minimum(t, times[-1]), times, traj.s)
    tail = result.tail
    if tail is None:
        return inside
    beyond = tail.s_inf + (tail.s_e - tail.s_inf) * np.exp(
        -tail.eta * np.maximum(t - times[-1], 0.0))
    return np.where(t > times[-1], beyond, inside)


def expected_vaccinations(result: EquilibriumResult, timing=None) -> float:
    """Expected fraction still susceptible when the vaccine arrives."""
    timing = result.scenario.timing if timing is None else timing
    if isinstance(timing, tm.Never):
        return 0.0
    if isinstance(timing, tm.Sharp):
        return float(result.trajectory.s[result.scenario.grid.index_of(timing.t_v)])
    t = result.times
    t_e = float(t[-1])
    body = float(np.trapezoid(result.trajectory.s * tm.pdf(timing, t), t))
    surv_e = float(tm.survival(timing, t_e))
    if surv_e > TAIL_MASS_LIMIT:
        warnings.warn(
            f"vaccination probability {surv_e:.3g} remains beyond t_e={t_e:g}",
            TailMassWarning, stacklevel=2)
    tail = result.tail
    if tail is None or surv_e == 0.0:
        return body + surv_e * float(result.trajectory.s[-1])

    def weight(u):
        x = t_e + u
        return math.exp(-tail.eta * u) * float(tm.hazard(timing, x)) * float(
            tm.survival_ratio(timing, x, t_e))

    decayed, _ = integrate.quad(weight, 0.0, np.inf, epsabs=1e-14, epsrel=1e-10, limit=200)
    return body + surv_e * (tail.s_inf + (tail.s_e - tail.s_inf) * decayed)


def epidemic_duration(result: EquilibriumResult,
                      threshold: float = DEFAULT_DURATION_THRESHOLD) -> float:
    """Last grid time at which i(t) >= threshold (0 if never)."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    above = np.nonzero(result.trajectory.i >= threshold)[0]
    if above.size == 0:
        return 0.0
    return float(result.times[above[-1]])


def peak(result: EquilibriumResult) -> tuple[float, float]:
    j = int(np.argmax(result.trajectory.i))
    return float(result.trajectory.i[j]), float(result.times[j])


def final_susceptible(result: EquilibriumResult) -> float:
    """s just before vaccination for sharp timing, s(t_e) otherwise."""
    timing = result.scenario.timing
    if isinstance(timing, tm.Sharp):
        return float(result.trajectory.s[result.scenario.grid.index_of(timing.t_v)])
    return float(result.trajectory.s[-1])


def summarize(result: EquilibriumResult,
              threshold: float = DEFAULT_DURATION_THRESHOLD) -> RunSummary:
    timing = result.scenario.timing
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TailMassWarning)
        ev = expected_vaccinations(result)
    notes.extend(str(w.message) for w in caught)
    k = result.control
    if isinstance(timing, tm.Sharp):
        k = k[:result.scenario.grid.index_of(timing.t_v) + 1]
    p, tp = peak(result)
    return RunSummary(
        peak_i=p, t_peak=tp, duration=epidemic_duration(result, threshold),
        expected_vaccinations=ev, final_s=final_susceptible(result),
        utility=result.utility, eta=None if result.tail is None else result.tail.eta,
        min_k=float(np.min(k)), warnings=notes)
