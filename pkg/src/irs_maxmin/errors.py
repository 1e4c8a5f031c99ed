"""Exception types shared across the solver stack."""


class ConfigurationError(ValueError):
    """Invalid system configuration (bad dimensions, signs, geometry, keys)."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its iteration cap.

    Carries the residual history so callers can inspect how the iteration
    behaved before failing.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []
