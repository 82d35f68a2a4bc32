"""Exception hierarchy shared by both kernel backends and the high-level API."""

from __future__ import annotations


class DDError(Exception):
    """Base class for decision-diagram package errors."""


class NonFiniteValue(DDError, ValueError):
    """A NaN or infinite component was offered to the complex table."""


class LevelOrderViolation(DDError, ValueError):
    """A successor edge points to a node that is not strictly below the new node."""


class DimensionMismatch(DDError, ValueError):
    """Operands of a DD operation span different numbers of qubits or shapes."""


class ResourceLimit(DDError):
    """The cooperative deadline of a package expired during an operation."""


class NotADifference(DDError, ValueError):
    """Counterexample extraction was asked to explain an identity (up to phase)."""


class CircuitError(ValueError):
    """Malformed gate or circuit."""


class QubitOutOfRange(CircuitError):
    pass


class OverlappingControlTarget(CircuitError):
    pass


class TooFewGates(CircuitError):
    pass


class QubitCountMismatch(ValueError):
    """The two circuits handed to a checker act on different qubit counts."""
