"""Exception hierarchy shared across the package.

Validation problems (bad files, bad config, domain violations in input
data) and numerical problems (optimizers that do not converge, martingale
roots that do not exist) are kept apart so the CLI can map them to
distinct exit codes.
"""


class WellbeingError(Exception):
    """Base class for all package errors."""


class ValidationError(WellbeingError):
    """Bad input: malformed files, bad schema, invalid configuration."""


class ParseError(ValidationError):
    """A cell or header could not be parsed; message names the location."""


class SchemaError(ValidationError):
    """Input does not match the declared schema (unknown indicator etc.)."""


class DomainError(ValidationError):
    """A value violates a domain constraint (non-positive indicator etc.)."""


class NumericalError(WellbeingError):
    """A numerical routine failed (non-convergence, no root, singularity)."""


class FitError(NumericalError):
    """Model estimation failed; carries the best iterate seen."""

    def __init__(self, message, best_params=None, grad_norm=None):
        super().__init__(message)
        self.best_params = best_params
        self.grad_norm = grad_norm
