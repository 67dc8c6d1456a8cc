# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled survival kernel over word-packed images.

Same contract as ``_kernel_py``: a ``State`` holds the frontier images of the
surviving subgroup's generators, ``run`` executes the adjoint op stream.
"""

import numpy as np

from libc.stdint cimport uint64_t, int32_t, uint8_t

NAME = "compiled"

cdef enum:
    NOISE = 0
    RESET = 1
    PURGE = 2
    GATE = 3
    FULL = 15


cdef class State:
    cdef public int n
    cdef public int words
    cdef public int rows
    cdef uint64_t[:, ::1] x
    cdef uint64_t[:, ::1] z

    def __init__(self, int n, bint _empty=False):
        cdef int i
        self.n = n
        self.words = max(1, (n + 63) >> 6)
        if _empty:
            return
        self.x = np.zeros((2 * n, self.words), dtype=np.uint64)
        self.z = np.zeros((2 * n, self.words), dtype=np.uint64)
        for i in range(n):
            self.x[i, i >> 6] |= (<uint64_t>1) << (i & 63)
            self.z[n + i, i >> 6] |= (<uint64_t>1) << (i & 63)
        self.rows = 2 * n

    def copy(self):
        cdef State s = State(self.n, True)
        s.x = self.x.copy()
        s.z = self.z.copy()
        s.rows = self.rows
        return s

    def any_alive(self):
        cdef int r, w
        for r in range(self.rows):
            for w in range(self.words):
                if self.x[r, w] or self.z[r, w]:
                    return True
        return False

    def images(self):
        out = []
        cdef int r, w
        for r in range(self.rows):
            xv = 0
            zv = 0
            for w in range(self.words):
                xv |= int(self.x[r, w]) << (64 * w)
                zv |= int(self.z[r, w]) << (64 * w)
            out.append((xv, zv))
        return out


cdef class Program:
    cdef public int nops
    cdef int32_t[::1] kinds
    cdef int32_t[::1] args
    cdef int32_t[::1] reset_qubit
    cdef int32_t[::1] reset_allowed
    cdef int32_t[::1] gate_k
    cdef int32_t[::1] gate_qoff
    cdef int32_t[::1] gate_qubits
    cdef int32_t[::1] gate_loff
    cdef int32_t[::1] lut
    cdef public object prog

    def __init__(self, prog):
        self.prog = prog
        self.nops = prog.nops
        self.kinds = prog.op_kind
        self.args = prog.op_arg
        self.reset_qubit = prog.reset_qubit
        self.reset_allowed = prog.reset_allowed
        self.gate_k = prog.gate_k
        self.gate_qoff = prog.gate_qoff
        self.gate_qubits = prog.gate_qubits
        self.gate_loff = prog.gate_loff
        self.lut = prog.lut if len(prog.lut) else np.zeros(1, dtype=np.int32)


cdef inline int _value(State st, int r, int q) nogil:
    cdef int w = q >> 6
    cdef uint64_t b = (<uint64_t>1) << (q & 63)
    return (1 if st.x[r, w] & b else 0) | (2 if st.z[r, w] & b else 0)


cdef inline void _remove(State st, int r) nogil:
    cdef int last = st.rows - 1
    cdef int w
    if r != last:
        for w in range(st.words):
            st.x[r, w] = st.x[last, w]
            st.z[r, w] = st.z[last, w]
    st.rows = last


cdef void _eliminate(State st, int q, int ux, int uz) nogil:
    cdef int w0 = q >> 6
    cdef uint64_t b = (<uint64_t>1) << (q & 63)
    cdef int r, w, f
    cdef int piv = -1
    for r in range(st.rows):
        f = 0
        if ux and (st.x[r, w0] & b):
            f ^= 1
        if uz and (st.z[r, w0] & b):
            f ^= 1
        if f:
            if piv < 0:
                piv = r
            else:
                for w in range(st.words):
                    st.x[r, w] ^= st.x[piv, w]
                    st.z[r, w] ^= st.z[piv, w]
    if piv >= 0:
        _remove(st, piv)


cdef void _restrict(State st, int q, int allowed) nogil:
    cdef int r
    cdef int w0 = q >> 6
    cdef uint64_t keep = ~((<uint64_t>1) << (q & 63))
    if allowed == 1:
        _eliminate(st, q, 1, 0)
        _eliminate(st, q, 0, 1)
    elif allowed == 3:
        _eliminate(st, q, 0, 1)
    elif allowed == 5:
        _eliminate(st, q, 1, 0)
    elif allowed == 9:
        _eliminate(st, q, 1, 1)
    for r in range(st.rows):
        st.x[r, w0] &= keep
        st.z[r, w0] &= keep


def restrict(State st, int q, int allowed):
    """Restrict to local values in the subgroup ``allowed`` at ``q``, then clear ``q``."""
    _restrict(st, q, allowed)


cdef void _purge(State st) nogil:
    cdef int r = 0
    cdef int w
    cdef bint live
    while r < st.rows:
        live = False
        for w in range(st.words):
            if st.x[r, w] or st.z[r, w]:
                live = True
                break
        if live:
            r += 1
        else:
            _remove(st, r)


cdef void _apply_gates(State st, Program pg, int start, int stop) nogil:
    cdef int r, op, g, k, j, q, idx, out, w
    cdef int32_t* qs
    cdef uint64_t b
    for r in range(st.rows):
        for op in range(start, stop):
            g = pg.args[op]
            k = pg.gate_k[g]
            qs = &pg.gate_qubits[pg.gate_qoff[g]]
            idx = 0
            for j in range(k):
                q = qs[j]
                b = (<uint64_t>1) << (q & 63)
                w = q >> 6
                if st.x[r, w] & b:
                    idx |= 1 << j
                if st.z[r, w] & b:
                    idx |= 1 << (k + j)
            if idx == 0:
                continue
            out = pg.lut[pg.gate_loff[g] + idx]
            if out == idx:
                continue
            for j in range(k):
                q = qs[j]
                b = (<uint64_t>1) << (q & 63)
                w = q >> 6
                if (out >> j) & 1:
                    st.x[r, w] |= b
                else:
                    st.x[r, w] &= ~b
                if (out >> (k + j)) & 1:
                    st.z[r, w] |= b
                else:
                    st.z[r, w] &= ~b


cdef int _run(State st, Program pg, const uint8_t[:, ::1] fired, int pos) nogil:
    cdef int nops = pg.nops
    cdef int kind, arg, q, allowed, r, v, seen, stop, n = st.n
    while pos < nops:
        kind = pg.kinds[pos]
        arg = pg.args[pos]
        if kind == NOISE:
            for q in range(n):
                if fired[arg, q]:
                    _eliminate(st, q, 1, 0)
                    _eliminate(st, q, 0, 1)
        elif kind == RESET:
            q = pg.reset_qubit[arg]
            allowed = pg.reset_allowed[arg]
            if allowed == FULL or allowed == 1 or allowed == 3 or allowed == 5 or allowed == 9:
                _restrict(st, q, allowed)
            else:
                seen = 0
                for r in range(st.rows):
                    v = _value(st, r, q)
                    if v:
                        seen |= 1 << v
                if seen != 0 and (seen & (seen - 1)) != 0:
                    return pos
                if seen != 0 and (seen & allowed) == 0:
                    _restrict(st, q, 1)
                else:
                    _restrict(st, q, FULL)
        elif kind == PURGE:
            _purge(st)
            if st.rows == 0:
                return nops
        elif kind == GATE:
            stop = pos + 1
            while stop < nops and pg.kinds[stop] == GATE:
                stop += 1
            _apply_gates(st, pg, pos, stop)
            pos = stop
            continue
        pos += 1
    return nops


def run(State st, Program pg, const uint8_t[:, ::1] fired, int pos=0):
    """Execute ops from ``pos``; return ``pg.nops`` when finished, or the index of
    a reset that needs a branch split (left unapplied)."""
    cdef int out
    if pg.nops and fired.shape[1] != st.n:
        raise ValueError("error configuration width does not match state")
    with nogil:
        out = _run(st, pg, fired, pos)
    return out
