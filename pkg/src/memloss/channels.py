"""Depolarizing and reset channels and their adjoint action on Pauli strings."""

from __future__ import annotations

import math
from dataclasses import dataclass

from memloss.errors import CircuitError
from memloss.pauli import LABELS, PauliString

NAMED_STATES = {
    "zero": (0, 0, 1),
    "one": (0, 0, -1),
    "plus": (1, 0, 0),
    "minus": (-1, 0, 0),
    "magic": (1 / math.sqrt(2), 0, 1 / math.sqrt(2)),
    "mixed": (0, 0, 0),
}


@dataclass(frozen=True)
class NoiseModel:
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise CircuitError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class ResetSpec:
    """Reset of ``qubit`` to ``(I + aX + bY + cZ) / 2``.

    ``zero_flags`` marks components that were exactly zero when the reset was
    built. Annihilation decisions read the flags, never the float values.
    """

    qubit: int
    bloch: tuple[float, float, float]

    def __post_init__(self):
        if isinstance(self.bloch, str):
            object.__setattr__(self, "bloch", NAMED_STATES[self.bloch])
        if len(self.bloch) != 3:
            raise CircuitError("bloch vector needs three components")
        object.__setattr__(self, "bloch", tuple(self.bloch))

    @property
    def zero_flags(self) -> tuple[bool, bool, bool]:
        return tuple(v == 0 for v in self.bloch)

    @property
    def is_valid_state(self) -> bool:
        a, b, c = self.bloch
        return all(math.isfinite(v) for v in self.bloch) and a * a + b * b + c * c <= 1 + 1e-12

    def component(self, value: int) -> float:
        """Bloch component multiplying the local operator ``LABELS[value]``."""
        a, b, c = self.bloch
        return (1.0, a, c, b)[value]

    @property
    def allowed_mask(self) -> int:
        """Bit ``v`` set iff local operator ``LABELS[v]`` is not annihilated."""
        za, zb, zc = self.zero_flags
        return 1 | (not za) << 1 | (not zc) << 2 | (not zb) << 3


def depolarize_error_adjoint(p: PauliString, qubit: int) -> PauliString:
    """Adjoint of a complete depolarization on ``qubit`` (self-adjoint)."""
    if not 0 <= qubit < p.n:
        raise CircuitError(f"qubit {qubit} out of range for {p.n} qubits")
    if p.zero or p.value(qubit) == 0:
        return p
    return PauliString.annihilated(p.n)


def reset_adjoint(p: PauliString, r: ResetSpec) -> PauliString:
    """Heisenberg-picture reset: the local factor becomes I times its Bloch weight."""
    q = r.qubit
    if not 0 <= q < p.n:
        raise CircuitError(f"qubit {q} out of range for {p.n} qubits")
    if p.zero:
        return p
    v = p.value(q)
    if v == 0:
        return p
    if not (r.allowed_mask >> v) & 1:
        return PauliString.annihilated(p.n)
    keep = ~(1 << q)
    return PauliString(p.n, p.x & keep, p.z & keep, p.coeff * r.component(v), False)


def reset_forward_ptm_row(r: ResetSpec, label: str) -> list[tuple[str, float]]:
    """Forward reset action on a single-qubit Pauli, expanded in the Pauli basis."""
    if label not in LABELS:
        raise CircuitError(f"bad Pauli label {label!r}")
    if label != "I":
        return []
    a, b, c = r.bloch
    out = [("I", 1.0)]
    for lbl, v, is_zero in zip("XYZ", (a, b, c), r.zero_flags):
        if not is_zero:
            out.append((lbl, float(v)))
    return out
