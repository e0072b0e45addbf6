"""Exception hierarchy shared by every module."""


class VosError(Exception):
    """Base class for all errors raised by vosopt."""


class InputError(VosError, ValueError):
    """Malformed input: wrong shape, non-finite entries, bad matrix structure."""


class ParameterError(InputError):
    """A scalar parameter is outside its admissible range."""


class CapabilityError(VosError):
    """The oracle or problem lacks something the scheme needs (resolvent, prox, ...)."""


class ConvergenceError(VosError):
    """An inner solve did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(VosError):
    """Iterates became non-finite; ``last_state`` holds the last finite one."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ConfigurationError(VosError):
    """Inconsistent configuration (unknown ids, violated preconditions)."""


class IntegrationError(VosError):
    """The ODE integrator produced a non-finite state."""


class FitError(VosError, ValueError):
    """A rate fit was asked to work on unusable data."""
