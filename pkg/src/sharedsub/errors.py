"""Exception and warning types shared across the package."""


class SharedSubError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(SharedSubError, ValueError):
    """An input violates a documented precondition."""


class DomainError(SharedSubError):
    """An evaluator was called outside its mathematical domain."""


class StencilError(SharedSubError):
    """A finite-difference stencil could not be evaluated, even after shrinking."""

    def __init__(self, message, coordinate=None, sample_index=None):
        super().__init__(message)
        self.coordinate = coordinate
        self.sample_index = sample_index


class SingularCovarianceError(SharedSubError):
    """A covariance (or metric) matrix is not positive definite."""


class SingularMatrixError(SharedSubError):
    """A matrix required to be nonsingular is singular."""


class NonConvergenceError(SharedSubError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, last_change=None):
        super().__init__(message)
        self.last_change = last_change


class EmptyEvaluationError(SharedSubError):
    """Every row of an evaluation was excluded; no statistic can be formed."""


class ConfigError(SharedSubError):
    """An experiment configuration is invalid."""


class DegenerateSpectrumWarning(UserWarning):
    """A spectrum is (numerically) degenerate; only projectors are contractual."""


class ZeroColumnWarning(UserWarning):
    """A derivative column is identically zero; a placeholder direction was used."""


class NearConstantOutputWarning(UserWarning):
    """An output is nearly constant; its normalization std was floored."""


class SampleCountWarning(UserWarning):
    """Fewer samples than recommended for the requested operation."""
