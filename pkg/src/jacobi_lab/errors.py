"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Invalid geometric input: non-immersive point, bad normalization, etc."""


class MeshError(ValueError):
    """Degenerate or inconsistent mesh (zero-area triangle, bad Euler count)."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach the requested tolerance.

    ``residuals`` carries the best residuals reached before giving up.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals
