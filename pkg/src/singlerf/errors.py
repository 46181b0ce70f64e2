"""Exception types raised across the package.

Every numerical failure mode has a named class so callers (and the CLI,
which maps them to exit code 3) can react to specific conditions instead
of parsing messages.
"""


class SinglerfError(Exception):
    """Base class for all package errors."""


class NonHermitian(SinglerfError):
    """Supplied correlation matrix is not Hermitian within tolerance."""


class NotPSD(SinglerfError):
    """Matrix has an eigenvalue below -1e-10; not positive semi-definite."""


class BadCoefficient(SinglerfError):
    """Exponential correlation coefficient with |a| >= 1."""


class BadDimensions(SinglerfError):
    """Inconsistent or unsupported dimensions (e.g. K >= M)."""


class SingularChannel(SinglerfError):
    """Gram matrix H^H H too ill-conditioned to invert reliably."""


class RootNotBracketed(SinglerfError):
    """A scalar root search could not establish a sign change."""


class NoConvergence(SinglerfError):
    """Iteration hit its cap before reaching tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateDenominator(SinglerfError):
    """A denominator that must be positive came out <= 0."""


class NoClipping(SinglerfError):
    """Asymptotically the power constraint is inactive; no matched root."""


class NoRoot(SinglerfError):
    """Scalar equation has no admissible solution (e.g. all-zero spectrum)."""


class OutOfSupport(SinglerfError):
    """Density evaluation requested outside the computable support."""


class EmptyInput(SinglerfError):
    """An operation received an empty collection."""


class TooManyRejections(SinglerfError):
    """More than 1% of Monte Carlo trials were ill-conditioned."""
