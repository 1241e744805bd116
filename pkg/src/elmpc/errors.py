"""Exception types shared across the package."""


class ElmpcError(Exception):
    """Base class for all package errors."""


class InvalidInputError(ElmpcError, ValueError):
    """Non-finite or dimensionally inconsistent input."""


class DomainError(ElmpcError, ValueError):
    """Input outside the domain where the model is defined (e.g. vx <= 0)."""


class InvalidPerturbationError(ElmpcError, ValueError):
    pass


class InfeasibleQPError(ElmpcError):
    """The QP constraint set is empty."""


class InvalidDataError(ElmpcError, ValueError):
    """Dataset rows or labels that cannot be used for training."""

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = list(rows) if rows is not None else []


class SimulationAbort(ElmpcError):
    """Plant diverged during a closed-loop run.

    The partial log up to the failing tick is attached as ``log``.
    """

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


class ConfigError(ElmpcError, ValueError):
    pass
