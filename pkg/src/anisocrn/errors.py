"""Exception hierarchy shared by all modules."""


class AnisoError(Exception):
    """Base class for all library errors."""


class NetworkSyntaxError(AnisoError, ValueError):
    """Malformed network document."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class NetworkValidationError(AnisoError, ValueError):
    """A network document violates a semantic invariant."""


class NegativeTemperatureError(AnisoError, ValueError):
    """The energy budget leaves a negative temperature."""


class UnboundedLPError(AnisoError):
    """Linear program is unbounded."""


class InfeasibleError(AnisoError):
    """Feasible set (or its interior) is empty."""


class ConvergenceError(AnisoError, RuntimeError):
    """An iterative solver failed to converge."""


class HypothesisError(AnisoError):
    """A theorem's hypotheses do not hold for the given input."""


class IrreversibleNetworkError(HypothesisError):
    """The operation requires every reaction to be reversible."""


class DomainError(AnisoError, ValueError):
    """Evaluation point lies outside the open domain of a function."""


class TopologyError(AnisoError, ValueError):
    """Network has the wrong shape for the requested operation."""


class InconclusiveError(AnisoError):
    """A numerical trend test could not decide."""


class StepFailureError(ConvergenceError):
    """ODE integration left the admissible state space."""
