"""Exception types shared across the package."""


class CircuitError(ValueError):
    """Raised for malformed circuits, gates, or Pauli operands."""


class CapExceeded(RuntimeError):
    """Raised when an exact or brute-force routine would exceed its size cap."""
