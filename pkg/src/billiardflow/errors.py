"""Exception taxonomy shared by the library and the command line front end.

The CLI maps these onto process exit codes: DomainError -> 2,
PropertyViolation -> 3, NumericalGuard -> 4.
"""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class PropertyViolation(RuntimeError):
    """A property that is guaranteed analytically failed numerically.

    Carries optional diagnostic payload in ``details``.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details


class NumericalGuard(RuntimeError):
    """A runtime numerical safeguard tripped (CFL bound, convexity, resolution)."""
