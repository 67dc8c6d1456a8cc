"""Pure-Python (numpy) survival kernel; mirrors ``_kernel.pyx`` op for op.

The state is the list of frontier images of a generating set of the surviving
subgroup, stored as boolean ``(rows, n)`` X and Z matrices. Only images are
kept: the survival decision depends on their span alone.
"""

from __future__ import annotations

import numpy as np

from memloss._program import FULL, GATE, NOISE, PURGE, RESET, AdjointProgram

NAME = "python"


class State:
    def __init__(self, n: int, _empty: bool = False):
        self.n = n
        if _empty:
            return
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        idx = np.arange(n)
        self.x[idx, idx] = True
        self.z[n + idx, idx] = True
        self.rows = 2 * n

    def copy(self) -> State:
        s = State(self.n, _empty=True)
        s.x = self.x.copy()
        s.z = self.z.copy()
        s.rows = self.rows
        return s

    def any_alive(self) -> bool:
        r = self.rows
        return bool(self.x[:r].any() or self.z[:r].any())

    def images(self) -> list[tuple[int, int]]:
        out = []
        for r in range(self.rows):
            out.append((_pack(self.x[r]), _pack(self.z[r])))
        return out


def _pack(bits) -> int:
    return sum(1 << int(i) for i in np.flatnonzero(bits))


class Program:
    def __init__(self, prog: AdjointProgram):
        self.prog = prog
        self.nops = prog.nops
        self.kinds = prog.op_kind.tolist()
        self.args = prog.op_arg.tolist()
        self.reset_qubit = prog.reset_qubit.tolist()
        self.reset_allowed = prog.reset_allowed.tolist()
        self.gates = []
        for g in range(len(prog.gate_k)):
            k = int(prog.gate_k[g])
            qs = prog.gate_qubits[prog.gate_qoff[g]: prog.gate_qoff[g] + k]
            lut = prog.lut[prog.gate_loff[g]: prog.gate_loff[g] + (1 << (2 * k))]
            self.gates.append((k, qs.astype(np.intp), lut))


def _remove(st: State, r: int) -> None:
    last = st.rows - 1
    if r != last:
        st.x[r] = st.x[last]
        st.z[r] = st.z[last]
    st.rows = last


def _eliminate(st: State, q: int, ux: bool, uz: bool) -> None:
    r = st.rows
    if ux and uz:
        f = st.x[:r, q] ^ st.z[:r, q]
    elif ux:
        f = st.x[:r, q].copy()
    else:
        f = st.z[:r, q].copy()
    hit = np.flatnonzero(f)
    if hit.size == 0:
        return
    p = hit[0]
    others = hit[1:]
    if others.size:
        st.x[others] ^= st.x[p]
        st.z[others] ^= st.z[p]
    _remove(st, int(p))


def restrict(st: State, q: int, allowed: int) -> None:
    """Restrict to local values in the subgroup ``allowed`` at ``q``, then clear ``q``."""
    if allowed == 0b0001:
        _eliminate(st, q, True, False)
        _eliminate(st, q, False, True)
    elif allowed == 0b0011:
        _eliminate(st, q, False, True)
    elif allowed == 0b0101:
        _eliminate(st, q, True, False)
    elif allowed == 0b1001:
        _eliminate(st, q, True, True)
    r = st.rows
    st.x[:r, q] = False
    st.z[:r, q] = False


def _purge(st: State) -> None:
    # swap-with-last removal, same row order as the compiled kernel
    r = 0
    while r < st.rows:
        if st.x[r].any() or st.z[r].any():
            r += 1
        else:
            _remove(st, r)


def _apply_gate(st: State, k: int, qs, lut) -> None:
    r = st.rows
    if r == 0:
        return
    xs = st.x[:r][:, qs]
    zs = st.z[:r][:, qs]
    weights = 1 << np.arange(k)
    idx = xs.astype(np.int64) @ weights + (zs.astype(np.int64) @ weights << k)
    out = lut[idx]
    bits = (out[:, None] >> np.arange(2 * k)) & 1
    st.x[:r, qs] = bits[:, :k].astype(bool)
    st.z[:r, qs] = bits[:, k:].astype(bool)


def run(st: State, pg: Program, fired: np.ndarray, pos: int = 0) -> int:
    """Execute ops from ``pos``; return ``pg.nops`` when finished, or the index of
    a reset that needs a branch split (left unapplied)."""
    nops = pg.nops
    while pos < nops:
        kind = pg.kinds[pos]
        arg = pg.args[pos]
        if kind == NOISE:
            for q in np.flatnonzero(fired[arg]):
                _eliminate(st, int(q), True, False)
                _eliminate(st, int(q), False, True)
        elif kind == RESET:
            q = pg.reset_qubit[arg]
            allowed = pg.reset_allowed[arg]
            if allowed == FULL or allowed in (0b0001, 0b0011, 0b0101, 0b1001):
                restrict(st, q, allowed)
            else:
                r = st.rows
                vals = st.x[:r, q].astype(np.int8) | (st.z[:r, q].astype(np.int8) << 1)
                seen = np.unique(vals[vals != 0])
                if seen.size >= 2:
                    return pos
                if seen.size == 1 and not (allowed >> int(seen[0])) & 1:
                    restrict(st, q, 0b0001)
                else:
                    restrict(st, q, FULL)
        elif kind == PURGE:
            _purge(st)
            if st.rows == 0:
                return nops
        elif kind == GATE:
            k, qs, lut = pg.gates[arg]
            _apply_gate(st, k, qs, lut)
        pos += 1
    return nops
