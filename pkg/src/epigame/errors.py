"""Exception types raised by the epigame numerics."""


class EpigameError(Exception):
    """Base class for all library errors."""


class InvalidInputError(EpigameError, ValueError):
    """An argument is non-finite, out of range or of the wrong shape."""


class IntegratorInstabilityError(EpigameError):
    """A state went negative during fixed-step integration (dt too large)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NumericalFailureError(EpigameError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TailDomainError(EpigameError, ValueError):
    """The terminal state is not in the late-time asymptotic regime (s_e >= 1/kappa*)."""


class NonConvergenceError(EpigameError):
    """The forward-backward sweep ran out of iterations.

    ``result`` holds the last iterate so callers can still inspect or write it.
    """

    def __init__(self, message, residual_history, result=None):
        super().__init__(message)
        self.residual_history = list(residual_history)
        self.result = result
