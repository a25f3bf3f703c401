"""Exception types shared across the package."""


class BackhaulError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(BackhaulError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class DomainError(ParameterError):
    """A closed-form scaling formula was evaluated outside its validity region."""


class NumericalError(BackhaulError, ArithmeticError):
    """A factorization or linear solve failed (e.g. a covariance that is not PD)."""


class ConfigError(BackhaulError):
    """A scenario configuration is malformed or violates a module precondition."""


class DomainWarning(UserWarning):
    """Evaluation went outside the region a formula was derived for."""
