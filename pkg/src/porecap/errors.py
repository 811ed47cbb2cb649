"""Exception types shared across the package."""


class PorecapError(Exception):
    """Base class for all library errors."""


class InvalidInputError(PorecapError, ValueError):
    pass


class DomainError(PorecapError, ValueError):
    """Argument outside the domain where a function is defined."""


class SingularInputError(DomainError):
    """Argument at a point where the direct evaluation path is singular."""


class GeometryError(PorecapError, ValueError):
    pass


class UnsupportedConfigurationError(PorecapError, ValueError):
    pass


class AssemblyError(PorecapError, RuntimeError):
    pass


class SolverError(PorecapError, RuntimeError):
    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class TableBuildError(PorecapError, RuntimeError):
    pass


class ConvergenceError(PorecapError, RuntimeError):
    """Adaptive quadrature did not meet its tolerance.

    ``estimate`` and ``error`` hold the best value found and its error bound.
    """

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
