"""Flatten a circuit into the adjoint op stream consumed by the survival kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from memloss.circuit import Circuit

NOISE, RESET, PURGE, GATE = 0, 1, 2, 3

# allowed-value masks over local values (I=0, X=1, Z=2, Y=3)
FULL = 0b1111
SUBGROUPS = {0b0001, 0b0011, 0b0101, 0b1001}


@dataclass(frozen=True, eq=False)
class AdjointProgram:
    n: int
    depth: int
    op_kind: np.ndarray
    op_arg: np.ndarray
    reset_qubit: np.ndarray
    reset_allowed: np.ndarray
    gate_k: np.ndarray
    gate_qoff: np.ndarray
    gate_qubits: np.ndarray
    gate_loff: np.ndarray
    lut: np.ndarray

    @property
    def nops(self) -> int:
        return len(self.op_kind)

    @property
    def branching(self) -> bool:
        """True if some reset keeps a non-subgroup set of local values."""
        return any(int(a) not in SUBGROUPS and int(a) != FULL for a in self.reset_allowed)


def compile_program(c: Circuit) -> AdjointProgram:
    kinds, args = [], []
    rq, ra = [], []
    gk, gqoff, gq, gloff, luts = [], [], [], [], []
    lut_len = 0
    for t in range(c.depth - 1, -1, -1):
        layer = c.layers[t]
        kinds.append(NOISE)
        args.append(t)
        for r in layer.resets:
            kinds.append(RESET)
            args.append(len(rq))
            rq.append(r.qubit)
            ra.append(r.allowed_mask)
        kinds.append(PURGE)
        args.append(t)
        for g in layer.gates:
            kinds.append(GATE)
            args.append(len(gk))
            gk.append(len(g.qubits))
            gqoff.append(len(gq))
            gq.extend(g.qubits)
            lut = g.adjoint_lut()
            gloff.append(lut_len)
            luts.append(lut)
            lut_len += len(lut)

    def arr(v):
        return np.ascontiguousarray(v, dtype=np.int32)

    return AdjointProgram(
        n=c.n,
        depth=c.depth,
        op_kind=arr(kinds),
        op_arg=arr(args),
        reset_qubit=arr(rq),
        reset_allowed=arr(ra),
        gate_k=arr(gk),
        gate_qoff=arr(gqoff),
        gate_qubits=arr(gq),
        gate_loff=arr(gloff),
        lut=arr(np.concatenate(luts) if luts else []),
    )
