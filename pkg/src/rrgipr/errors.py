"""Exception types shared across the package."""


class InvalidSpecError(ValueError):
    """Graph parameters that cannot describe a simple z-regular graph."""


class ResourceLimitError(RuntimeError):
    """A computation would exceed its configured size budget."""


class ConvergenceError(ArithmeticError):
    """An iterative eigensolver failed to converge."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DisconnectedGraphError(ValueError):
    """The Laplacian kernel is not one-dimensional."""


class FitError(RuntimeError):
    """A least-squares fit could not be performed."""


class ConfigError(ValueError):
    """Malformed run configuration."""


class FigureDataError(KeyError):
    """Statistics required for a figure are missing from a run record."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
