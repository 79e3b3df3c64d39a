"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (grid, problem, files)."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class StepDiverged(RuntimeError):
    """Picard iteration failed to contract within ``max_iter`` sweeps."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class BlowUpSuspected(RuntimeError):
    """Integration stopped because the solution norm appears unbounded."""

    def __init__(self, message, time=None, norm=None):
        super().__init__(message)
        self.time = time
        self.norm = norm


class TruncationWarning(UserWarning):
    """Hermite expansion does not reproduce the input to tolerance."""
