"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain where an operation is defined (non-finite, zero divisor...)."""


class UnsupportedOrderError(ValueError):
    pass


class SolveError(RuntimeError):
    pass


class AssemblyError(FloatingPointError):
    """Non-finite value produced while assembling the Galerkin system.

    ``sample`` holds the first offending quadrature point.
    """

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class IntegrationError(FloatingPointError):
    """Time integration produced a non-finite state.

    ``partial`` is whatever trajectory object was built up to the last finite step.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class FitError(RuntimeError):
    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


class ConfigError(ValueError):
    """Invalid run configuration. ``problems`` lists every violation found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
