"""Exception types shared across the solver modules."""


class NFWavesError(Exception):
    """Base class for all package errors."""


class BadGuessError(NFWavesError):
    """A solver was started from a guess that produces non-finite residuals."""


class MaxIterationsError(NFWavesError):
    """Damped Newton failed to converge within the iteration budget."""

    def __init__(self, message, residual_norm=None):
        super().__init__(message)
        self.residual_norm = residual_norm


class LostMonotonicityError(NFWavesError):
    """A converged front has U'(z_k) <= 0 at a crossing (breakdown signal)."""


class OrderingViolatedError(NFWavesError):
    """Pulse crossings interleave: the solution is not locally excited."""


class ComplexBranchError(NFWavesError):
    """Adaptation parameters put the linear system in the complex-rate regime."""


class SymmetryViolatedError(NFWavesError):
    """Firing rate is not odd-symmetric about its midpoint."""


class NonFiniteError(NFWavesError):
    """Simulation state became non-finite (blow-up)."""


class PoorFitError(NFWavesError):
    """Speed regression fit quality below the acceptance threshold."""
