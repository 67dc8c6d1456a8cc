"""Dense density-matrix evolution for small circuits.

Everything here works with full ``2**n x 2**n`` matrices (qubit 0 is the most
significant tensor factor) and is independent of the bitset propagation code.
It is the ground truth for trace distances, channel adjoints, and the
survival bound on trace distance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from memloss.channels import ResetSpec
from memloss.circuit import Circuit, ErrorConfig
from memloss.errors import CapExceeded, CircuitError
from memloss.pauli import LABELS, CliffordTableau, Gate, PauliString

DENSE_MAX_QUBITS = 7
TOL = 1e-10

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_S = np.diag([1, 1j])
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
NAMED_UNITARIES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": _S,
    "SDG": _S.conj().T,
    "X": PAULI["X"],
    "Y": PAULI["Y"],
    "Z": PAULI["Z"],
    "CNOT": _CNOT,
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    n: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (1 << self.n, 1 << self.n):
            raise CircuitError(f"density matrix shape {data.shape} does not fit {self.n} qubits")
        object.__setattr__(self, "data", data)

    @classmethod
    def pure(cls, psi) -> DensityMatrix:
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        n = int(round(np.log2(psi.size)))
        return cls(n, np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, bits: str) -> DensityMatrix:
        psi = np.zeros(1 << len(bits), dtype=complex)
        psi[int(bits, 2) if bits else 0] = 1
        return cls.pure(psi)

    def problems(self, tol: float = 1e-10) -> list[str]:
        out = []
        if not np.allclose(self.data, self.data.conj().T, atol=tol):
            out.append("not Hermitian")
        if abs(np.trace(self.data) - 1) > 1e-12 * max(1, self.data.shape[0]) + 1e-12:
            out.append("trace differs from 1")
        if np.linalg.eigvalsh((self.data + self.data.conj().T) / 2).min() < -tol:
            out.append("not positive semidefinite")
        return out


def random_density(n: int, rng: np.random.Generator, components: int = 3) -> DensityMatrix:
    """Random mixture of Haar-random pure states."""
    dim = 1 << n
    weights = rng.random(components)
    weights /= weights.sum()
    rho = np.zeros((dim, dim), dtype=complex)
    for w in weights:
        psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        psi /= np.linalg.norm(psi)
        rho += w * np.outer(psi, psi.conj())
    return DensityMatrix(n, rho)


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Hermitian matrix of a phaseless string, scaled by its coefficient."""
    mats = [PAULI[LABELS[p.value(q)]] for q in range(p.n)]
    return p.coeff * reduce(np.kron, mats, np.eye(1, dtype=complex))


def clifford_unitary(t: CliffordTableau) -> np.ndarray:
    """A unitary ``U`` with ``U X_j U^dagger`` and ``U Z_j U^dagger`` equal to the
    signed tableau images.

    ``U|0..0>`` is the joint +1 eigenvector of the Z images and the remaining
    columns are obtained by applying products of the X images.
    """
    k = t.n
    dim = 1 << k
    px = [pauli_matrix(p) for p in t.xs]
    pz = [pauli_matrix(p) for p in t.zs]
    proj = np.eye(dim, dtype=complex)
    for m in pz:
        proj = proj @ (np.eye(dim) + m) / 2
    col = proj[:, np.argmax(np.linalg.norm(proj, axis=0))]
    psi0 = col / np.linalg.norm(col)
    u = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        v = psi0
        for j in range(k):
            if (idx >> (k - 1 - j)) & 1:
                v = px[j] @ v
        u[:, idx] = v
    return u


@lru_cache(maxsize=4096)
def _gate_unitary(kind: str, tableau) -> np.ndarray:
    if kind in NAMED_UNITARIES:
        return NAMED_UNITARIES[kind]
    return clifford_unitary(Gate(kind, tuple(range(len(tableau) // 2)), tableau).local_tableau())


def gate_unitary(g: Gate) -> np.ndarray:
    return _gate_unitary(g.kind, g.tableau)


def embed(u: np.ndarray, qubits, n: int) -> np.ndarray:
    """Full-space operator acting as ``u`` on ``qubits`` (in that order)."""
    k = len(qubits)
    rest = [q for q in range(n) if q not in qubits]
    full = np.kron(u, np.eye(1 << (n - k), dtype=complex))
    order = list(qubits) + rest
    t = full.reshape([2] * (2 * n))
    perm = [order.index(q) for q in range(n)]
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(1 << n, 1 << n)


def replace_qubit(rho: np.ndarray, n: int, q: int, tau: np.ndarray) -> np.ndarray:
    """``tau`` on qubit ``q`` tensored with the partial trace of ``rho`` over ``q``."""
    a, c = 1 << q, 1 << (n - q - 1)
    t = rho.reshape(a, 2, c, a, 2, c)
    red = np.einsum("aibcid->abcd", t)
    return np.einsum("abcd,ij->aibcjd", red, tau).reshape(rho.shape)


def reset_adjoint_dense(obs: np.ndarray, n: int, q: int, tau: np.ndarray) -> np.ndarray:
    """Heisenberg reset: ``I_q`` tensored with ``Tr_q[(tau_q (x) I) obs]``."""
    a, c = 1 << q, 1 << (n - q - 1)
    t = obs.reshape(a, 2, c, a, 2, c)
    red = np.einsum("aibcjd,ji->abcd", t, tau)
    return np.einsum("abcd,ij->aibcjd", red, I2).reshape(obs.shape)


def bloch_state(r: ResetSpec) -> np.ndarray:
    a, b, c = r.bloch
    return (I2 + a * PAULI["X"] + b * PAULI["Y"] + c * PAULI["Z"]) / 2


def depolarize_dense(rho: np.ndarray, n: int, q: int, gamma: float) -> np.ndarray:
    return (1 - gamma) * rho + gamma * replace_qubit(rho, n, q, I2 / 2)


def _check_cap(c: Circuit, rho: DensityMatrix | None = None) -> None:
    if c.n > DENSE_MAX_QUBITS:
        raise CapExceeded(f"dense oracle limited to {DENSE_MAX_QUBITS} qubits, circuit has {c.n}")
    if rho is not None and rho.n != c.n:
        raise CircuitError(f"state has {rho.n} qubits, circuit has {c.n}")


@lru_cache(maxsize=256)
def layer_unitary(c: Circuit, t: int) -> np.ndarray:
    u = np.eye(1 << c.n, dtype=complex)
    for g in c.layers[t].gates:
        u = embed(gate_unitary(g), g.qubits, c.n) @ u
    return u


def _evolve(c: Circuit, rho: DensityMatrix, noise) -> DensityMatrix:
    _check_cap(c, rho)
    n = c.n
    m = rho.data
    for t, layer in enumerate(c.layers):
        if layer.gates:
            u = layer_unitary(c, t)
            m = u @ m @ u.conj().T
        for r in layer.resets:
            m = replace_qubit(m, n, r.qubit, bloch_state(r))
        m = noise(m, t)
    return DensityMatrix(n, m)


def evolve(c: Circuit, rho: DensityMatrix) -> DensityMatrix:
    """``Phi(rho)`` with the exact depolarizing channel after every layer."""

    def noise(m, t):
        for q in range(c.n):
            m = depolarize_dense(m, c.n, q, c.gamma)
        return m

    return _evolve(c, rho, noise)


def evolve_config(c: Circuit, b: ErrorConfig, rho: DensityMatrix) -> DensityMatrix:
    """``Phi_b(rho)``: complete depolarization exactly where ``b`` fired."""
    if not b.matches(c):
        raise CircuitError("error configuration does not match circuit")

    def noise(m, t):
        for q in np.flatnonzero(b.fired[t]):
            m = replace_qubit(m, c.n, int(q), I2 / 2)
        return m

    return _evolve(c, rho, noise)


def adjoint_config(c: Circuit, b: ErrorConfig, obs: np.ndarray) -> np.ndarray:
    """Dense Heisenberg-picture ``Phi_b^dagger(obs)``."""
    _check_cap(c)
    n = c.n
    m = np.asarray(obs, dtype=complex)
    for t in range(c.depth - 1, -1, -1):
        layer = c.layers[t]
        for q in np.flatnonzero(b.fired[t]):
            m = replace_qubit(m, n, int(q), I2 / 2)
        for r in layer.resets:
            m = reset_adjoint_dense(m, n, r.qubit, bloch_state(r))
        if layer.gates:
            u = layer_unitary(c, t)
            m = u.conj().T @ m @ u
    return m


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Trace norm of ``rho - sigma``; lies in [0, 2]."""
    if rho.data.shape != sigma.data.shape:
        raise CircuitError("dimension mismatch")
    diff = rho.data - sigma.data
    return float(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


# --- survival bound ---------------------------------------------------------------

@dataclass(frozen=True)
class Lemma1Report:
    lhs: float
    rhs: float
    holds: bool
    method: str


def check_lemma1(
    c: Circuit,
    rho: DensityMatrix,
    sigma: DensityMatrix,
    trials: int = 100_000,
    seed: int = 0,
    confidence: float = 0.99,
) -> Lemma1Report:
    """Compare the output trace distance with twice the survival probability.

    Uses exact enumeration when the circuit has at most
    ``EXACT_MAX_SITES`` noise sites, otherwise the upper Wilson bound of a
    Monte Carlo estimate.
    """
    from memloss.engine import EXACT_MAX_SITES, survival_probability, survival_probability_exact

    lhs = trace_distance(evolve(c, rho), evolve(c, sigma))
    if c.n * c.depth <= EXACT_MAX_SITES:
        rhs = 2 * survival_probability_exact(c)
        return Lemma1Report(lhs, rhs, lhs <= rhs + TOL, "exact")
    est = survival_probability(c, trials, seed=seed, confidence=confidence)
    rhs = 2 * est.ci[1]
    return Lemma1Report(lhs, rhs, lhs <= rhs + TOL, "mc")


# --- channel adjoint checks ------------------------------------------------------

def pauli_basis(k: int) -> list[np.ndarray]:
    return [reduce(np.kron, [PAULI[ch] for ch in lbl], np.eye(1, dtype=complex))
            for lbl in ("".join(t) for t in itertools.product("IXYZ", repeat=k))]


def ptm(channel, k: int) -> np.ndarray:
    """Pauli transfer matrix ``T[i, j] = Tr(P_i N(P_j)) / 2**k``."""
    basis = pauli_basis(k)
    dim = 1 << k
    return np.array([[np.trace(pi @ channel(pj)).real / dim for pj in basis] for pi in basis])


def channel_pair(spec) -> tuple[int, callable, callable]:
    """Forward and adjoint dense maps for a supported channel spec.

    Specs: ``("depolarize", gamma)``, ``("reset", bloch)``, ``("gate", name)``
    or ``("gate", Gate)``.
    """
    kind, arg = spec
    if kind == "depolarize":
        g = float(arg)
        kraus = [np.sqrt(1 - 3 * g / 4) * I2] + [np.sqrt(g / 4) * PAULI[s] for s in "XYZ"]

        def fwd(m):
            return (1 - g) * m + g * I2 / 2 * np.trace(m)

        def adj(m):
            return sum(k.conj().T @ m @ k for k in kraus)

        return 1, fwd, adj
    if kind == "reset":
        tau = bloch_state(ResetSpec(0, tuple(arg)))
        w, v = np.linalg.eigh(tau)
        kraus = [np.sqrt(max(wi, 0.0)) * np.outer(v[:, i], e) for i, wi in enumerate(w) for e in I2]

        def fwd(m):
            return tau * np.trace(m)

        def adj(m):
            return sum(k.conj().T @ m @ k for k in kraus)

        return 1, fwd, adj
    if kind == "gate":
        gate = arg if isinstance(arg, Gate) else None
        if gate is None:
            from memloss.pauli import GATE_ARITY

            gate = Gate(arg, tuple(range(GATE_ARITY[arg])))
        u = gate_unitary(gate)
        k = len(gate.qubits)
        return k, (lambda m: u @ m @ u.conj().T), (lambda m: u.conj().T @ m @ u)
    raise ValueError(f"unsupported channel {kind!r}")


def dense_channel_adjoint_check(spec) -> float:
    """Max deviation in ``T(N^dagger) = T(N)^T`` and ``<P, N(Q)> = <N^dagger(P), Q>``.

    Reset and depolarizing channels are also compared against the symbolic
    adjoint rules used by the propagation path.
    """
    k, fwd, adj = channel_pair(spec)
    t_fwd = ptm(fwd, k)
    t_adj = ptm(adj, k)
    dev = float(np.abs(t_adj - t_fwd.T).max())
    basis = pauli_basis(k)
    for p in basis:
        for q in basis:
            lhs = np.trace(p.conj().T @ fwd(q))
            rhs = np.trace(adj(p).conj().T @ q)
            dev = max(dev, abs(lhs - rhs))
    kind, arg = spec
    if kind in ("depolarize", "reset"):
        dev = max(dev, _symbolic_deviation(kind, arg, t_adj))
    return dev


def _symbolic_deviation(kind: str, arg, t_adj: np.ndarray) -> float:
    """Compare the dense adjoint PTM with the bitset rules (one-qubit channels)."""
    from memloss.channels import depolarize_error_adjoint, reset_adjoint

    order = "IXYZ"
    sym = np.zeros((4, 4))
    for j, lbl in enumerate(order):
        p = PauliString.from_label(lbl)
        if kind == "depolarize":
            g = float(arg)
            out = depolarize_error_adjoint(p, 0)
            # N = (1 - g) id + g D, so the adjoint mixes identity and D^dagger
            sym[j, j] += 1 - g
            if not out.zero:
                sym[order.index(out.label), j] += g * out.coeff
        else:
            out = reset_adjoint(p, ResetSpec(0, tuple(arg)))
            if not out.zero:
                sym[order.index(out.label), j] += out.coeff
    return float(np.abs(sym - t_adj).max())
