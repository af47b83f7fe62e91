"""Exception types raised across the package."""


class QDarwinError(Exception):
    """Base class for all package errors."""


class LabelCollisionError(QDarwinError, ValueError):
    pass


class DomainError(QDarwinError, ValueError):
    pass


class SpaceMismatchError(QDarwinError, ValueError):
    pass


class InvalidStateError(QDarwinError, ValueError):
    pass


class InvalidObservableError(QDarwinError, ValueError):
    pass


class NullConditioningError(QDarwinError, ValueError):
    """Conditioning on an outcome whose probability is (numerically) zero."""


class IncompleteMapError(QDarwinError, ValueError):
    pass


class CommutatorError(QDarwinError, ValueError):
    """Raised when projectors that must commute do not.

    ``max_norm`` holds the largest Frobenius norm of ``[B_i, C_j]`` found.
    """

    def __init__(self, message, max_norm):
        super().__init__(message)
        self.max_norm = max_norm


class GeneratorError(QDarwinError, ValueError):
    pass


class BudgetError(QDarwinError, ValueError):
    """A dense object would exceed the configured dimension budget."""


class DegenerateBranchError(QDarwinError, ValueError):
    pass


class DegenerateObservableError(QDarwinError, ValueError):
    pass


class OverlappingSupportError(QDarwinError, ValueError):
    pass


class RegimeError(QDarwinError, ValueError):
    """The perfect-correlation regime required by a computation is not met."""

    def __init__(self, message, gamma_f, gamma_fbar):
        super().__init__(message)
        self.gamma_f = gamma_f
        self.gamma_fbar = gamma_fbar


class ConfigError(QDarwinError, ValueError):
    pass
