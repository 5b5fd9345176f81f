"""Exception types shared across the package."""


class SspcError(Exception):
    """Base class for all errors raised by this package."""


class SingularMatrixError(SspcError):
    """A factorization pivot fell below the singularity threshold."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class NoConvergenceError(SspcError):
    """An iterative method hit its iteration cap before reaching tolerance.

    Carries the best iterate seen and the residual at that iterate so
    callers can inspect or salvage partial progress.
    """

    def __init__(self, message, best=None, residual=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class NonFiniteEvaluationError(SspcError):
    """A user callback or finite-difference probe produced NaN/inf."""


class DimensionMismatchError(SspcError):
    """Inputs do not have the dimensions the contract requires."""


class GimbalLockError(SspcError):
    """Euler-angle kinematics evaluated too close to the pitch singularity."""


class ConfigError(SspcError):
    """An experiment configuration failed validation."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
