"""Exception hierarchy shared by every tlps module."""


class TlpsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidModelError(TlpsError, ValueError):
    """Bad distribution or model parameters."""


class UnstableModelError(InvalidModelError):
    """Offered load is not strictly below one."""


class DegenerateThresholdError(TlpsError):
    """Tail mass above the threshold underflowed to zero."""


class SingularSystemError(TlpsError, ArithmeticError):
    pass


class IllConditionedError(TlpsError, ArithmeticError):
    pass


class ConvergenceError(TlpsError, ArithmeticError):
    pass


class GridTooCoarseError(TlpsError):
    """Volterra discretization failed its self-consistency check."""


class SimulationBugError(TlpsError, AssertionError):
    """A simulation trace violated a bookkeeping identity."""

    def __init__(self, message: str, event_index: int | None = None):
        super().__init__(message if event_index is None else f"{message} (event {event_index})")
        self.event_index = event_index
