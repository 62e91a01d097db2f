"""Late-time asymptotic solution of the equilibrium beyond the horizon t_e.

For t > t_e the epidemic is assumed to have burned out: i decays like
exp(-eta (t - t_e)) with eta = 1 - s_inf * kappa_star. This yields the
salvage utility, the boundary values of the rescaled adjoints at t_e, and
three diagnostics checking that the linearisation was legitimate.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import timing as tm
from .errors import InvalidInputError, TailDomainError

SELF_CONSISTENCY_THRESHOLD = 0.1


@dataclass(frozen=True)
class TailState:
    s_e: float
    i_e: float
    eta: float
    s_inf: float


def tail_state(s_e: float, i_e: float, kappa_star: float) -> TailState:
    """Final susceptible fraction and late-time decay rate from (s_e, i_e).

    Solves s_e - s_inf = s_inf kappa* i_e / (1 - s_inf kappa*) on the branch
    s_inf < 1/kappa*.
    """
    if not all(np.isfinite(v) for v in (s_e, i_e, kappa_star)):
        raise InvalidInputError("tail_state arguments must be finite")
    if kappa_star <= 1:
        raise InvalidInputError("kappa_star must exceed 1")
    if i_e < 0 or s_e <= 0:
        raise InvalidInputError("need s_e > 0 and i_e >= 0")
    if s_e * kappa_star >= 1:
        raise TailDomainError(
            f"s_e = {s_e:.6g} is not below 1/kappa* = {1 / kappa_star:.6g}; "
            "the epidemic has not run its course by t_e, increase t_end")
    a = 1.0 + (s_e + i_e) * kappa_star
    # a^2 - 4 kappa* s_e rewritten as a sum of non-negative terms (no cancellation near eta = 0)
    disc = (1.0 - (s_e + i_e) * kappa_star) ** 2 + 4.0 * kappa_star * i_e
    # product of the roots is s_e / kappa*; this form avoids cancellation
    # min() only strips roundoff: the exact root never exceeds s_e
    s_inf = min(2.0 * s_e / (a + math.sqrt(disc)), s_e)
    eta = 1.0 - s_inf * kappa_star
    return TailState(s_e=float(s_e), i_e=float(i_e), eta=float(eta), s_inf=float(s_inf))


def adjoint_boundary(tail: TailState, timing, rho: float, alpha: float,
                     t_e: float) -> tuple[float, float]:
    """Rescaled values (v_s, v_i) at t_e implied by the asymptotic tail."""
    if alpha < 0:
        raise InvalidInputError("alpha must be non-negative")
    m_eta = tm.m_hat(timing, t_e, rho, tail.eta)
    m_one = tm.m_hat(timing, t_e, rho, 1.0)
    v_s = -alpha * (tail.i_e / tail.s_e) * (m_eta - m_one)
    v_i = -alpha * m_one
    return v_s, v_i


def salvage_utility(tail: TailState, timing, rho: float, alpha: float, t_e: float,
                    psi_s_e: float | None = None, psi_i_e: float | None = None) -> float:
    """Expected utility accrued after t_e.

    Without individual probabilities the Nash form -alpha i_e M(eta) is
    returned. Passing ``psi_s_e``/``psi_i_e`` gives the salvage of an
    individual whose state differs from the population's.
    """
    if alpha == 0 or tail.i_e == 0:
        return 0.0
    m_eta = tm.m_integral(timing, t_e, rho, tail.eta)
    if psi_s_e is None and psi_i_e is None:
        return -alpha * tail.i_e * m_eta
    ratio = psi_s_e / tail.s_e
    m_one = tm.m_integral(timing, t_e, rho, 1.0)
    return -alpha * ratio * tail.i_e * m_eta - alpha * (psi_i_e - tail.i_e * ratio) * m_one


@dataclass(frozen=True)
class SelfConsistencyReport:
    susceptible_margin: float  # i_e kappa* / eta
    control_margin: float  # |kappa* - k(t_e)| / kappa*
    linearisation_margin: float  # |ds kappa* - s_inf dk| / eta
    threshold: float = SELF_CONSISTENCY_THRESHOLD

    @property
    def margins(self) -> tuple[float, float, float]:
        return (self.susceptible_margin, self.control_margin, self.linearisation_margin)

    @property
    def passed(self) -> bool:
        return all(m < self.threshold for m in self.margins)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def self_consistency(tail: TailState, trajectory, control, kappa_star: float,
                     threshold: float = SELF_CONSISTENCY_THRESHOLD) -> SelfConsistencyReport:
    k_e = float(np.asarray(control)[-1])
    dk = kappa_star - k_e
    ds = float(trajectory.s[-1]) - tail.s_inf
    return SelfConsistencyReport(
        susceptible_margin=tail.i_e * kappa_star / tail.eta,
        control_margin=abs(dk) / kappa_star,
        linearisation_margin=abs(ds * kappa_star - tail.s_inf * dk) / tail.eta,
        threshold=threshold,
    )
