"""Exception hierarchy shared by all modules."""


class EnclosureError(Exception):
    """Base class for every error raised by this package."""


class DomainError(EnclosureError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularSourceError(DomainError):
    """The exponential decay rate of the source coincides with an eigenvalue."""


class RegularityError(DomainError):
    """The source lacks the smoothness or vanishing conditions an estimate needs."""


class QuadratureError(EnclosureError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate):
        super().__init__(f"{message} (achieved error estimate {estimate:.3g})")
        self.estimate = estimate


class InfeasibleError(EnclosureError):
    """No frequency satisfies the requested sample-count constraint."""


class MagnitudeError(EnclosureError, OverflowError):
    """An integer result is too large to be represented exactly."""

    def __init__(self, message, log_value):
        super().__init__(f"{message} (natural log of the value: {log_value:.17g})")
        self.log_value = log_value


class ConfigError(EnclosureError):
    """A configuration file could not be parsed or validated."""

    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
