"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A precondition on grids, truncations, time steps or parameters is violated."""


class GridMismatchError(ConfigurationError):
    """Two objects that must share a grid do not."""


class AdmissibilityError(ConfigurationError):
    """The semiclassical parameter is not admissible for the momentum lattice scale."""


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach its fixed point; carries diagnostics."""

    def __init__(self, message, oscillation=None):
        super().__init__(message)
        self.oscillation = oscillation
