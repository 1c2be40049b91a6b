"""Exception types shared across the package.

Everything raised for a rejected input derives from ValidationError, so
callers (the service layer in particular) can map bad requests to a single
error channel while letting genuine bugs surface as ordinary exceptions.
"""


class ValidationError(ValueError):
    """Base class for rejected inputs and violated contracts."""


class DomainError(ValidationError):
    """A parameter lies outside its mathematical domain."""


class CovarianceError(ValidationError):
    """A matrix fails symmetry, positivity, or the uncertainty bound."""


class DegenerateCovarianceError(ValidationError):
    """A covariance is singular where a positive definite one is required."""


class InvalidRegimeError(ValidationError):
    """A parameter combination leaves the validity region of a formula."""


class EstimationError(ValidationError):
    """Statistical estimation cannot proceed on the given sample."""
