"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numeric guards (size limits, positivity failures, normalization)
with 3, and iterative non-convergence with 4.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (CLI exit code 2)."""


class DimensionMismatchError(ValueError):
    """Tensor extents incompatible with the requested contraction."""


class NumericGuardError(RuntimeError):
    """A numeric safety guard tripped (CLI exit code 3)."""


class SizeGuardError(NumericGuardError):
    """Requested object exceeds a hard size limit (memory or runtime)."""


class PositivityError(NumericGuardError):
    """An operator expected to be positive semidefinite is not."""


class NormalizationError(NumericGuardError):
    """Input state/tensor is not normalized.

    ``suggested_scale`` is the factor the caller should divide by.
    """

    def __init__(self, message: str, suggested_scale: float | None = None):
        super().__init__(message)
        self.suggested_scale = suggested_scale


class VariantError(ValueError):
    """Unsupported replica-variant / replica-index combination."""


class ConvergenceError(RuntimeError):
    """Iterative solver failed to converge (CLI exit code 4).

    Carries the best estimate seen so far in ``best``.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class DegenerateOverlapError(NumericGuardError):
    """Boundary eigenvector overlap too small for a reliable contraction."""


class BracketError(ValueError):
    """A grid extremum sits on the edge of the scanned interval."""


class DegenerateFitError(RuntimeError):
    """Least-squares fit has a singular or ill-conditioned Jacobian."""


class FixtureError(RuntimeError):
    """A random fixture failed its quality check after resampling."""
