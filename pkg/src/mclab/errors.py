"""Exception types shared across the package."""


class MclabError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(MclabError, ValueError):
    """An argument is outside its documented domain."""


class DegenerateInputError(MclabError, ValueError):
    """Input is rank-deficient or otherwise unusable (e.g. dependent columns)."""


class NumericFailureError(MclabError, RuntimeError):
    """An iterative numeric routine failed to converge.

    Carries the best estimate produced so far in ``estimate`` so callers
    can inspect how far the iteration got.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class GenerationFailureError(MclabError, RuntimeError):
    """A rejection sampler exhausted its attempt budget."""


class DivergenceError(MclabError, RuntimeError):
    """A series construction cannot converge (contraction factor >= 1)."""


class InjectivityError(MclabError, RuntimeError):
    """The sampling operator restricted to the tangent space is not
    positive definite, so the normal equations have no stable solution."""


class ConvergenceError(NumericFailureError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, residual=None, estimate=None):
        super().__init__(message, estimate=estimate)
        self.residual = residual
