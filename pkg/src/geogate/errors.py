"""Exception hierarchy shared by the simulator modules."""


class GeogateError(Exception):
    """Base class for all simulator errors."""


class DimensionError(GeogateError, ValueError):
    """A Hilbert-space dimension is invalid or inconsistent."""


class AddressingError(GeogateError, ValueError):
    """An operator kind was addressed to a subsystem that cannot carry it."""


class TruncationError(GeogateError):
    """The Fock cutoff is too small for the requested cavity state."""

    def __init__(self, message, tail=None, cutoff=None):
        super().__init__(message)
        self.tail = tail
        self.cutoff = cutoff


class NumericError(GeogateError, ArithmeticError):
    """Non-finite values entered a numerical routine."""


class ConvergenceError(GeogateError):
    """Step halving did not reach the requested tolerance within budget."""

    def __init__(self, message, residual, steps):
        super().__init__(message)
        self.residual = residual
        self.steps = steps


class DesignError(GeogateError, ValueError):
    """No gate schedule satisfies the requested design."""


class DegenerateDetuningError(GeogateError, ValueError):
    """A construction needs a nonzero cavity-drive detuning."""
