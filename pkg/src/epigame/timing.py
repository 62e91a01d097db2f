"""Vaccination arrival-time distributions and the late-time salvage integrals.

Three timings are supported: ``Never`` (no vaccine), ``Sharp(t_v)`` (arrival
known exactly) and ``Erlang(n, tau)`` with density
t^n exp(-t/tau) / (n! tau^(n+1)) and mean (n + 1) tau.

Tail quantities are evaluated relative to the truncation time t_e
(survival ratios and hazards) so that nothing underflows when the survival
function itself is exp(-80)-small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate
from scipy.special import gammaincc, gammaln, logsumexp, xlogy

from .errors import InvalidInputError, NumericalFailureError

MAX_ERLANG_N = 64
QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-10


@dataclass(frozen=True)
class Never:
    """No vaccine ever arrives."""

    kind = "never"

    def mean(self) -> float:
        return math.inf


@dataclass(frozen=True)
class Sharp:
    """Vaccine arrives at the known time ``t_v``."""

    t_v: float
    kind = "sharp"

    def __post_init__(self):
        if not (np.isfinite(self.t_v) and self.t_v > 0):
            raise InvalidInputError(f"sharp vaccination time must be positive, got {self.t_v}")

    def mean(self) -> float:
        return float(self.t_v)


@dataclass(frozen=True)
class Erlang:
    """Erlang(n, tau) arrival time: shape n + 1, scale tau."""

    n: int
    tau: float
    kind = "erlang"

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 0:
            raise InvalidInputError(f"Erlang n must be a non-negative integer, got {self.n}")
        if self.n > MAX_ERLANG_N:
            raise InvalidInputError(f"n exceeds cap {MAX_ERLANG_N}")
        object.__setattr__(self, "n", int(self.n))
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise InvalidInputError(f"Erlang tau must be positive, got {self.tau}")

    @classmethod
    def from_mean(cls, mean: float, n: int) -> "Erlang":
        return cls(n=n, tau=mean / (n + 1))

    def mean(self) -> float:
        return (self.n + 1) * self.tau


VaccinationTiming = Union[Never, Sharp, Erlang]


def _times(t):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError("times must be finite and non-negative")
    return arr


def _reject_sharp(timing, what):
    if isinstance(timing, Sharp):
        raise InvalidInputError(
            f"{what} is not defined for sharp timing; use the sharp solver path")


def _log_partial_exp(x: np.ndarray, n: int) -> np.ndarray:
    """log(sum_{l=0}^n x^l / l!) for x >= 0."""
    ls = np.arange(n + 1)
    terms = xlogy(ls, x[..., None]) - gammaln(ls + 1)
    return logsumexp(terms, axis=-1)


def _out(arr, template):
    return float(arr) if np.ndim(template) == 0 else arr


def pdf(timing: VaccinationTiming, t):
    """Arrival density p(t)."""
    _reject_sharp(timing, "pdf")
    tt = _times(t)
    if isinstance(timing, Never):
        return _out(np.zeros_like(tt), t)
    x = tt / timing.tau
    val = np.exp(xlogy(timing.n, x) - gammaln(timing.n + 1) - x) / timing.tau
    return _out(val, t)


def survival(timing: VaccinationTiming, t):
    """Probability 1 - C(t) that the vaccine has not arrived by time t."""
    tt = _times(t)
    if isinstance(timing, Never):
        return _out(np.ones_like(tt), t)
    if isinstance(timing, Sharp):
        return _out(np.where(tt < timing.t_v, 1.0, 0.0), t)
    # regularised upper incomplete gamma: stays in [0, 1] and monotone, unlike exp(logsumexp)
    return _out(gammaincc(timing.n + 1, tt / timing.tau), t)


def hazard(timing: VaccinationTiming, t):
    """Arrival rate conditional on no arrival yet, p(t) / (1 - C(t)).

    Evaluated as the ratio of the leading Erlang term to the partial
    exponential sum, which never under- or overflows.
    """
    _reject_sharp(timing, "hazard")
    tt = _times(t)
    if isinstance(timing, Never):
        return _out(np.zeros_like(tt), t)
    x = tt / timing.tau
    n = timing.n
    val = np.exp(xlogy(n, x) - gammaln(n + 1) - _log_partial_exp(x, n)) / timing.tau
    return _out(val, t)


def survival_ratio(timing: VaccinationTiming, t, t_ref: float):
    """(1 - C(t)) / (1 - C(t_ref)) computed without forming either factor."""
    _reject_sharp(timing, "survival_ratio")
    tt = _times(t)
    if isinstance(timing, Never):
        return _out(np.ones_like(tt), t)
    x = tt / timing.tau
    xr = np.asarray(float(t_ref) / timing.tau)
    logr = _log_partial_exp(x, timing.n) - _log_partial_exp(xr, timing.n) - (x - xr)
    return _out(np.exp(logr), t)


def sample(timing: VaccinationTiming, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw arrival times (inf for Never)."""
    if isinstance(timing, Never):
        return np.full(size, np.inf)
    if isinstance(timing, Sharp):
        return np.full(size, float(timing.t_v))
    return rng.gamma(shape=timing.n + 1, scale=timing.tau, size=size)


def _check_tail_args(t_e, rho, eta):
    for name, v in (("t_e", t_e), ("rho", rho), ("eta", eta)):
        if not np.isfinite(v):
            raise InvalidInputError(f"{name} must be finite")
    if t_e < 0:
        raise InvalidInputError("t_e must be non-negative")
    if rho < 0:
        raise InvalidInputError("rho must be non-negative")
    if eta <= 0:
        raise InvalidInputError("eta must be positive")


def _erlang_tail_integrand(timing: Erlang, t_e: float, rho: float, eta: float):
    n, tau = timing.n, timing.tau
    xe = t_e / tau
    log_pe = float(_log_partial_exp(np.asarray(xe), n))
    lgn = math.lgamma(n + 1)
    decay = eta + rho
    w = 1.0 / (rho + 1.0)
    log_fact = [math.lgamma(l + 1) for l in range(n + 1)]

    def f(u):
        x = xe + u / tau
        if x == 0.0:
            log_p = 0.0
            haz = 1.0 / tau if n == 0 else 0.0
        else:
            lx = math.log(x)
            terms = [l * lx - log_fact[l] for l in range(n + 1)]
            top = max(terms)
            log_p = top + math.log(math.fsum(math.exp(v - top) for v in terms))
            haz = math.exp(n * lx - lgn - log_p) / tau
        ratio = math.exp(log_p - log_pe - u / tau - decay * u)
        return ratio * (1.0 + haz * w)

    return f


def _quad(f, a, b, points=None):
    kwargs = dict(epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=500, full_output=1)
    if points is not None and np.isfinite(b):
        kwargs["points"] = points
    out = integrate.quad(f, a, b, **kwargs)
    value, abserr, info = out[0], out[1], out[2]
    ier = 0 if len(out) == 3 else 1
    # a roundoff flag is acceptable when the error estimate already meets the target
    if ier and abserr > max(10 * QUAD_EPSABS, 10 * QUAD_EPSREL * abs(value)):
        raise NumericalFailureError(
            f"salvage quadrature did not converge on [{a}, {b}]",
            diagnostics={"value": value, "abserr": abserr,
                         "intervals": info.get("last"), "message": out[3]})
    return value


def m_hat(timing: VaccinationTiming, t_e: float, rho: float, eta: float) -> float:
    """Rescaled salvage integral e^(rho t_e) M / (1 - C(t_e)).

    Equals the integral over u >= 0 of
    exp(-(eta + rho) u) * R(t_e + u) * (1 + h(t_e + u) / (rho + 1)),
    with R the survival ratio relative to t_e and h the hazard.
    """
    _reject_sharp(timing, "m_hat")
    _check_tail_args(t_e, rho, eta)
    if isinstance(timing, Never):
        return 1.0 / (rho + eta)
    f = _erlang_tail_integrand(timing, float(t_e), float(rho), float(eta))
    span = 60.0 * max(timing.tau, 1.0 / (eta + rho))
    points = None
    bulk = timing.mean() - t_e
    if 0.0 < bulk < span:
        points = [bulk]
    head = _quad(f, 0.0, span, points)
    rest = _quad(f, span, np.inf)
    return head + rest


def m_integral(timing: VaccinationTiming, t_e: float, rho: float, eta: float) -> float:
    """Salvage helper M(t_e, rho, eta, p).

    M = integral_{t_e}^inf exp(-eta (t - t_e)) exp(-rho t)
        (1 - C(t) + p(t) / (rho + 1)) dt
    """
    if isinstance(timing, Never):
        _check_tail_args(t_e, rho, eta)
        return math.exp(-rho * t_e) / (rho + eta)
    return math.exp(-rho * t_e) * float(survival(timing, t_e)) * m_hat(timing, t_e, rho, eta)
