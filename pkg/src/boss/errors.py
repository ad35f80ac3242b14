"""Exception taxonomy. Messages carry the diagnostic; types drive exit codes."""


class BossError(Exception):
    """Base class for all package errors."""


class InputError(BossError):
    """Bad user input: malformed files, unknown columns, inadmissible grids."""


class FitError(BossError):
    """A regression fit failed (collinear design, separation, non-convergence).

    ``last_beta`` carries the final iterate when an iterative fit gives up.
    """

    def __init__(self, message, last_beta=None):
        super().__init__(message)
        self.last_beta = last_beta


class NumericError(BossError):
    """Numerical failure outside fitting (covariance repair, MVN integration)."""
