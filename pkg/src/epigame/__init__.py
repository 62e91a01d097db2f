"""Nash-equilibrium social distancing in an SIR epidemic with uncertain vaccination time."""

from .asymptotics import (SelfConsistencyReport, TailState, adjoint_boundary,
                          salvage_utility, self_consistency, tail_state)
from .dynamics import (EpidemicTrajectory, Grid, IndividualTrajectory,
                       integrate_individual, integrate_population)
from .errors import (EpigameError, IntegratorInstabilityError, InvalidInputError,
                     NonConvergenceError, NumericalFailureError, TailDomainError)
from .metrics import (RunSummary, TailMassWarning, epidemic_duration,
                      expected_vaccinations, peak, summarize)
from .solver import (EquilibriumResult, Scenario, evaluate_control, evaluate_utility,
                     solve_best_response, solve_nash, stationarity_residual)
from .timing import Erlang, Never, Sharp, hazard, m_hat, m_integral, pdf, survival

__all__ = [
    "SelfConsistencyReport", "TailState", "adjoint_boundary", "salvage_utility",
    "self_consistency", "tail_state", "EpidemicTrajectory", "Grid",
    "IndividualTrajectory", "integrate_individual", "integrate_population",
    "EpigameError", "IntegratorInstabilityError", "InvalidInputError",
    "NonConvergenceError", "NumericalFailureError", "TailDomainError", "RunSummary",
    "TailMassWarning", "epidemic_duration", "expected_vaccinations", "peak", "summarize",
    "EquilibriumResult", "Scenario", "evaluate_control", "evaluate_utility",
    "solve_best_response", "solve_nash", "stationarity_residual", "Erlang", "Never",
    "Sharp", "hazard", "m_hat", "m_integral", "pdf", "survival",
]
__version__ = "0.1.0"
