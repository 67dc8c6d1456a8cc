"""Phaseless Pauli strings, Clifford tableaux and the named gate set.

A Pauli string on ``n`` qubits is a pair of integer bitsets ``(x, z)``; bit ``q``
of each mask holds the X and Z component on qubit ``q``. Qubit 0 is the leftmost
tensor factor in labels such as ``"XIZ"``.

Local gate actions use a flat bit layout for a ``k``-qubit support: bit ``j`` is
the X component of the ``j``-th support qubit and bit ``k + j`` its Z component.
Symplectic matrices act on column vectors in that layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from memloss.errors import CircuitError

LABELS = "IXZY"  # indexed by x | z << 1


@dataclass(frozen=True, eq=False)
class PauliString:
    """Phaseless Pauli string with a real coefficient.

    ``zero`` is the structural annihilation flag. When omitted it is inferred
    from ``coeff == 0``; propagation code passes it explicitly so that float
    underflow of ``coeff`` never counts as annihilation.
    """

    n: int
    x: int = 0
    z: int = 0
    coeff: float = 1.0
    zero: bool | None = None

    def __post_init__(self):
        if self.n < 0:
            raise CircuitError("qubit count must be non-negative")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise CircuitError(f"masks do not fit in {self.n} qubits")
        zero = self.coeff == 0 if self.zero is None else bool(self.zero)
        object.__setattr__(self, "zero", zero)
        if zero:
            object.__setattr__(self, "coeff", 0.0)

    @classmethod
    def from_label(cls, label: str, coeff: float = 1.0) -> PauliString:
        x = z = 0
        for q, ch in enumerate(label.upper()):
            if ch not in LABELS:
                raise CircuitError(f"bad Pauli label {label!r}")
            v = LABELS.index(ch)
            x |= (v & 1) << q
            z |= (v >> 1) << q
        return cls(len(label), x, z, coeff)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n)

    @classmethod
    def annihilated(cls, n: int) -> PauliString:
        return cls(n, coeff=0.0, zero=True)

    @classmethod
    def single(cls, n: int, qubit: int, label: str) -> PauliString:
        v = LABELS.index(label)
        return cls(n, (v & 1) << qubit, (v >> 1) << qubit)

    def value(self, qubit: int) -> int:
        """Local operator on ``qubit`` as an index into ``LABELS``."""
        return ((self.x >> qubit) & 1) | (((self.z >> qubit) & 1) << 1)

    @property
    def label(self) -> str:
        return "".join(LABELS[self.value(q)] for q in range(self.n))

    @property
    def is_identity(self) -> bool:
        return not self.zero and self.x == 0 and self.z == 0

    def with_coeff(self, coeff: float) -> PauliString:
        return PauliString(self.n, self.x, self.z, coeff, self.zero)

    def commutes(self, other: PauliString) -> bool:
        return symplectic_inner(self.x, self.z, other.x, other.z) == 0

    def __eq__(self, other):
        if not isinstance(other, PauliString):
            return NotImplemented
        if self.n != other.n or self.zero != other.zero:
            return False
        if self.zero:
            return True
        return (self.x, self.z, self.coeff) == (other.x, other.z, other.coeff)

    def __hash__(self):
        if self.zero:
            return hash((self.n, "zero"))
        return hash((self.n, self.x, self.z, self.coeff))

    def __repr__(self):
        if self.zero:
            return f"PauliString.annihilated({self.n})"
        c = "" if self.coeff == 1.0 else f"{self.coeff!r}*"
        return f"<{c}{self.label}>"


def symplectic_inner(x1: int, z1: int, x2: int, z2: int) -> int:
    return ((x1 & z2).bit_count() + (z1 & x2).bit_count()) & 1


def weight(p: PauliString) -> int:
    """Number of non-identity tensor factors; 0 for annihilated strings."""
    if p.zero:
        return 0
    return (p.x | p.z).bit_count()


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Phaseless product: masks XOR, coefficients multiply."""
    if p.n != q.n:
        raise CircuitError(f"size mismatch: {p.n} vs {q.n}")
    return PauliString(p.n, p.x ^ q.x, p.z ^ q.z, p.coeff * q.coeff, p.zero or q.zero)


@dataclass(frozen=True)
class CliffordTableau:
    """Images of ``X_i`` and ``Z_i`` under conjugation ``P -> U P U^dagger``.

    Image coefficients are the signs (+1 or -1); they are carried for the dense
    oracle and ignored by all survival logic.
    """

    n: int
    xs: tuple[PauliString, ...]
    zs: tuple[PauliString, ...]

    def __post_init__(self):
        if len(self.xs) != self.n or len(self.zs) != self.n:
            raise CircuitError("tableau needs one X and one Z image per qubit")
        for img in self.xs + self.zs:
            if img.n != self.n or img.zero or abs(img.coeff) != 1.0:
                raise CircuitError("tableau images must be signed n-qubit Paulis")

    @classmethod
    def identity(cls, n: int) -> CliffordTableau:
        return cls(
            n,
            tuple(PauliString(n, 1 << i, 0) for i in range(n)),
            tuple(PauliString(n, 0, 1 << i) for i in range(n)),
        )

    @classmethod
    def from_matrix(cls, m: np.ndarray, signs: Sequence[int] | None = None) -> CliffordTableau:
        """Build from a ``2n x 2n`` GF(2) matrix whose columns are the images."""
        m = np.asarray(m, dtype=np.uint8) & 1
        n = m.shape[0] // 2
        if m.shape != (2 * n, 2 * n):
            raise CircuitError("symplectic matrix must be square with even size")
        signs = [1] * (2 * n) if signs is None else list(signs)
        imgs = []
        for col in range(2 * n):
            x = sum(int(m[r, col]) << r for r in range(n))
            z = sum(int(m[n + r, col]) << r for r in range(n))
            imgs.append(PauliString(n, x, z, float(signs[col])))
        return cls(n, tuple(imgs[:n]), tuple(imgs[n:]))

    def matrix(self) -> np.ndarray:
        n = self.n
        m = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        for col, img in enumerate(self.xs + self.zs):
            for r in range(n):
                m[r, col] = (img.x >> r) & 1
                m[n + r, col] = (img.z >> r) & 1
        return m

    @property
    def signs(self) -> tuple[int, ...]:
        return tuple(int(p.coeff) for p in self.xs + self.zs)

    def is_symplectic(self) -> bool:
        imgs = self.xs + self.zs
        n = self.n
        for i, a in enumerate(imgs):
            for j in range(i + 1, len(imgs)):
                b = imgs[j]
                expected = 1 if j == i + n else 0
                if symplectic_inner(a.x, a.z, b.x, b.z) != expected:
                    return False
        return True

    def inverse(self) -> CliffordTableau:
        """Phaseless inverse (signs reset to +1)."""
        return CliffordTableau.from_matrix(symplectic_inverse(self.matrix()))


def conjugate(t: CliffordTableau, p: PauliString) -> PauliString:
    """Phaseless image of ``p`` under the tableau automorphism."""
    if t.n != p.n:
        raise CircuitError(f"size mismatch: tableau {t.n} vs Pauli {p.n}")
    if p.zero:
        return p
    x = z = 0
    xm, zm = p.x, p.z
    while xm:
        low = xm & -xm
        img = t.xs[low.bit_length() - 1]
        x ^= img.x
        z ^= img.z
        xm ^= low
    while zm:
        low = zm & -zm
        img = t.zs[low.bit_length() - 1]
        x ^= img.x
        z ^= img.z
        zm ^= low
    return PauliString(p.n, x, z, p.coeff, False)


def omega(k: int) -> np.ndarray:
    w = np.zeros((2 * k, 2 * k), dtype=np.uint8)
    w[:k, k:] = np.eye(k, dtype=np.uint8)
    w[k:, :k] = np.eye(k, dtype=np.uint8)
    return w


def is_symplectic_matrix(m: np.ndarray) -> bool:
    m = np.asarray(m, dtype=np.int64)
    k = m.shape[0] // 2
    if m.shape != (2 * k, 2 * k):
        return False
    w = omega(k).astype(np.int64)
    return bool(np.array_equal((m.T @ w @ m) % 2, w))


def symplectic_inverse(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.int64)
    w = omega(m.shape[0] // 2).astype(np.int64)
    return ((w @ m.T @ w) % 2).astype(np.uint8)


def local_lut(m: np.ndarray) -> np.ndarray:
    """Lookup table of the linear map ``m`` on all ``4**k`` local bit patterns."""
    m = np.asarray(m, dtype=np.int64) & 1
    size = m.shape[0]
    cols = [int(sum(int(m[r, c]) << r for r in range(size))) for c in range(size)]
    lut = np.zeros(1 << size, dtype=np.int32)
    for idx in range(1, 1 << size):
        low = idx & -idx
        lut[idx] = lut[idx ^ low] ^ cols[low.bit_length() - 1]
    return lut


# --- named gates ------------------------------------------------------------

GATE_ARITY = {
    "H": 1, "S": 1, "SDG": 1, "X": 1, "Y": 1, "Z": 1,
    "CNOT": 2, "CZ": 2, "SWAP": 2,
}
MAX_TABLEAU_QUBITS = 8

# images of (X_0..X_{k-1}, Z_0..Z_{k-1}) as (label, sign)
_NAMED_IMAGES = {
    "H": (("Z", 1), ("X", 1)),
    "S": (("Y", 1), ("Z", 1)),
    "SDG": (("Y", -1), ("Z", 1)),
    "X": (("X", 1), ("Z", -1)),
    "Y": (("X", -1), ("Z", -1)),
    "Z": (("X", -1), ("Z", 1)),
    "CNOT": (("XX", 1), ("IX", 1), ("ZI", 1), ("ZZ", 1)),
    "CZ": (("XZ", 1), ("ZX", 1), ("ZI", 1), ("IZ", 1)),
    "SWAP": (("IX", 1), ("XI", 1), ("IZ", 1), ("ZI", 1)),
}


@lru_cache(maxsize=None)
def named_tableau(kind: str) -> CliffordTableau:
    if kind not in _NAMED_IMAGES:
        raise CircuitError(f"unknown gate {kind!r}")
    imgs = [PauliString.from_label(lbl, float(s)) for lbl, s in _NAMED_IMAGES[kind]]
    k = GATE_ARITY[kind]
    return CliffordTableau(k, tuple(imgs[:k]), tuple(imgs[k:]))


@dataclass(frozen=True)
class Gate:
    """A gate acting on ``qubits``.

    For ``kind == "TABLEAU"`` the ``tableau`` field holds ``2k`` rows of ``2k``
    bits: row ``j < k`` is the image of ``X_j`` and row ``k + j`` the image of
    ``Z_j``, each written as ``[x_0..x_{k-1}, z_0..z_{k-1}]``.
    """

    kind: str
    qubits: tuple[int, ...]
    tableau: tuple[tuple[int, ...], ...] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.tableau is not None:
            object.__setattr__(
                self, "tableau", tuple(tuple(int(b) for b in row) for row in self.tableau)
            )

    @classmethod
    def from_tableau(cls, t: CliffordTableau, qubits: Sequence[int]) -> Gate:
        rows = tuple(tuple(int(b) for b in col) for col in t.matrix().T)
        return cls("TABLEAU", tuple(qubits), rows)

    def check(self, n: int) -> str | None:
        """Return a description of the first problem with this gate, if any."""
        k = len(self.qubits)
        if self.kind == "TABLEAU":
            if self.tableau is None:
                return "TABLEAU gate without tableau rows"
            if not 1 <= k <= MAX_TABLEAU_QUBITS:
                return f"TABLEAU gate must act on 1..{MAX_TABLEAU_QUBITS} qubits"
            m = np.array(self.tableau, dtype=np.int64)
            if m.shape != (2 * k, 2 * k) or not np.isin(m, (0, 1)).all():
                return "TABLEAU rows must form a 2k x 2k bit matrix"
            if not is_symplectic_matrix(m.T):
                return "TABLEAU rows are not symplectic"
        elif self.kind in GATE_ARITY:
            if self.tableau is not None:
                return f"{self.kind} gate takes no tableau"
            if k != GATE_ARITY[self.kind]:
                return f"{self.kind} gate needs {GATE_ARITY[self.kind]} qubit(s)"
        else:
            return f"unknown gate {self.kind!r}"
        if len(set(self.qubits)) != k:
            return f"{self.kind} gate repeats a qubit"
        if any(not 0 <= q < n for q in self.qubits):
            return f"{self.kind} gate qubit out of range"
        return None

    def local_tableau(self) -> CliffordTableau:
        if self.kind == "TABLEAU":
            return CliffordTableau.from_matrix(np.array(self.tableau, dtype=np.uint8).T)
        return named_tableau(self.kind)

    def local_matrix(self) -> np.ndarray:
        return _local_matrix(self.kind, self.tableau)

    def adjoint_lut(self) -> np.ndarray:
        """LUT of the Heisenberg-picture map ``P -> U^dagger P U`` on the support."""
        return _adjoint_lut(self.kind, self.tableau)


@lru_cache(maxsize=4096)
def _local_matrix(kind, tableau) -> np.ndarray:
    if kind == "TABLEAU":
        return np.array(tableau, dtype=np.uint8).T.copy()
    return named_tableau(kind).matrix()


@lru_cache(maxsize=4096)
def _adjoint_lut(kind, tableau) -> np.ndarray:
    lut = local_lut(symplectic_inverse(_local_matrix(kind, tableau)))
    lut.setflags(write=False)
    return lut


def tableau_from_layer(n: int, gates: Iterable[Gate]) -> CliffordTableau:
    """Compose a layer of disjoint gates into one ``n``-qubit tableau."""
    xs = list(CliffordTableau.identity(n).xs)
    zs = list(CliffordTableau.identity(n).zs)
    used: set[int] = set()
    for g in gates:
        problem = g.check(n)
        if problem:
            raise CircuitError(problem)
        if used.intersection(g.qubits):
            raise CircuitError(f"overlapping gates on qubits {sorted(used.intersection(g.qubits))}")
        used.update(g.qubits)
        local = g.local_tableau()
        for j, q in enumerate(g.qubits):
            xs[q] = _embed(local.xs[j], g.qubits, n)
            zs[q] = _embed(local.zs[j], g.qubits, n)
    return CliffordTableau(n, tuple(xs), tuple(zs))


def _embed(p: PauliString, qubits: Sequence[int], n: int) -> PauliString:
    x = z = 0
    for j, q in enumerate(qubits):
        x |= ((p.x >> j) & 1) << q
        z |= ((p.z >> j) & 1) << q
    return PauliString(n, x, z, p.coeff)


# --- random Cliffords ---------------------------------------------------------

def _sp_inner(k: int, u: int, v: int) -> int:
    lo = (1 << k) - 1
    return ((u & lo & (v >> k)).bit_count() + ((u >> k) & v & lo).bit_count()) & 1


@lru_cache(maxsize=None)
def _sp_free(k: int, chosen: tuple[int, ...]) -> tuple[int, ...]:
    """Nonzero vectors orthogonal to every chosen vector."""
    return tuple(u for u in range(1, 1 << (2 * k)) if all(_sp_inner(k, u, c) == 0 for c in chosen))


@lru_cache(maxsize=None)
def _sp_partners(k: int, chosen: tuple[int, ...], v: int) -> tuple[int, ...]:
    return tuple(w for w in _sp_free(k, chosen) if _sp_inner(k, v, w) == 1)


def random_symplectic(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform element of Sp(2k, GF(2)) as a matrix whose columns are images.

    Builds a symplectic basis pair by pair; each pair is drawn uniformly from
    the vectors compatible with the pairs already chosen, so every group
    element arises from exactly one sequence of draws.
    """
    if k > 4:
        raise ValueError("enumeration-based sampler supports k <= 4")
    chosen: tuple[int, ...] = ()
    vs, ws = [], []
    for _ in range(k):
        free = _sp_free(k, chosen)
        v = free[int(rng.integers(len(free)))]
        partners = _sp_partners(k, chosen, v)
        w = partners[int(rng.integers(len(partners)))]
        chosen += (v, w)
        vs.append(v)
        ws.append(w)
    cols = np.array(vs + ws, dtype=np.int64)
    return ((cols[None, :] >> np.arange(2 * k)[:, None]) & 1).astype(np.uint8)


def random_clifford_tableau(k: int, rng: np.random.Generator) -> CliffordTableau:
    m = random_symplectic(k, rng)
    signs = 1 - 2 * rng.integers(0, 2, size=2 * k)
    return CliffordTableau.from_matrix(m, signs)


def random_two_qubit_clifford(rng: np.random.Generator) -> CliffordTableau:
    """Uniform two-qubit Clifford modulo phase, with uniform Pauli signs."""
    return random_clifford_tableau(2, rng)
