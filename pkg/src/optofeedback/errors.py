"""Exception types raised by the simulator."""


class OptoFeedbackError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(OptoFeedbackError, ValueError):
    """A parameter set or input violates its domain."""


class UnstableSystemError(OptoFeedbackError):
    """The drift matrix has an eigenvalue with non-positive real part."""


class SingularSystemError(OptoFeedbackError):
    """A linear solve was degenerate."""


class DivergenceError(OptoFeedbackError):
    """A covariance trajectory blew up during integration.

    Attributes
    ----------
    t : float
        Time of the first sample that exceeded the bound.
    """

    def __init__(self, message, t):
        super().__init__(message)
        self.t = t


class NonPhysicalError(OptoFeedbackError, ValueError):
    """A covariance matrix violates the uncertainty relation."""


class DomainError(OptoFeedbackError, ValueError):
    """A closed-form expression was evaluated outside its domain."""
