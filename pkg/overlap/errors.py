"""
Exception hierarchy for the codeword overlap toolkit.
"""
from typing import Optional


class OverlapError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameter(OverlapError):
    """A scalar parameter (loss, dimension, angle, mode count) is out of range."""


class ShapeMismatch(OverlapError):
    """Operands have incompatible dimensions."""


class InvalidState(OverlapError):
    """A density operator or covariance matrix violates its physicality constraints."""


class TruncationError(OverlapError):
    """The Fock truncation is too small for the requested state."""

    def __init__(self, message: str, required_dim: Optional[int] = None):
        super().__init__(message)
        self.required_dim = required_dim


class UnsupportedOperation(OverlapError):
    """The requested operation is not available for this input."""


class ContractError(OverlapError):
    """A precondition on a channel (complete positivity) does not hold."""


class EmptyResultError(OverlapError):
    """There is nothing to render or aggregate."""
