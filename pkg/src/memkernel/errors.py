"""Exception hierarchy for memkernel.

Every failure mode of the library maps onto one of these classes so that the
CLI can translate them into stable exit codes (config -> 2, numerics -> 3).
"""


class MemKernelError(Exception):
    """Base class for all memkernel errors."""


class DomainError(MemKernelError, ValueError):
    """Input outside the mathematical domain (non-finite, wrong sign, ...)."""


class UnsupportedOrderError(DomainError):
    """Bessel order other than 0 or 1 was requested."""


class EvaluationWindowError(DomainError):
    """Pointwise kernel evaluation requested below the t_floor window."""


class ConvergenceDomainError(DomainError):
    """Laplace variable outside the half-plane of absolute convergence."""


class TruncationError(MemKernelError):
    """Image-series truncation tail exceeds the requested tolerance."""


class InsufficientModesError(MemKernelError):
    """Eigenfunction oracle called with too few modes for the target accuracy."""


class NonConvergenceError(MemKernelError):
    """A function did not approach its declared limit at the given horizon."""


class MappingInfeasibleError(MemKernelError, ValueError):
    """Junction parameters violate the positivity constraints of the mapping."""


class SourceEvaluationError(MemKernelError):
    """The user-supplied source returned NaN or infinity."""


class NumericalFailureError(MemKernelError):
    """Quadrature or iteration failed to reach the requested tolerance."""


class NonContractionError(NumericalFailureError):
    """Picard iteration exhausted max_iter; carries the ratio history."""

    def __init__(self, message, diffs=None, ratios=None):
        super().__init__(message)
        self.diffs = list(diffs) if diffs is not None else []
        self.ratios = list(ratios) if ratios is not None else []


class StabilityError(MemKernelError, ValueError):
    """Finite-difference grid violates the recorded stability bound."""


class BlowUpError(NumericalFailureError):
    """Finite-difference solution exceeded the blow-up threshold."""


class ConfigError(MemKernelError, ValueError):
    """Malformed or unknown experiment configuration."""
