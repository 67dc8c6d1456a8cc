"""Backward propagation of Pauli strings through sampled adjoint circuits.

For a fixed error configuration ``b`` every adjoint layer maps each Pauli to at
most one Pauli (or to zero). The set of input Paulis that are not annihilated
is then tracked through a generating set, which is what the fast path does.

One wrinkle: a reset whose state has exactly one zero Bloch component keeps
three of the four local operators, which is not a subgroup. The fast path
splits into two subgroups there and explores the branches depth first; the
survival event is the OR over branches.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from memloss import backend as _backend
from memloss._program import FULL, SUBGROUPS, compile_program
from memloss.channels import ResetSpec, depolarize_error_adjoint, reset_adjoint
from memloss.circuit import Circuit, ErrorConfig, Layer
from memloss.errors import CapExceeded, CircuitError
from memloss.pauli import (
    CliffordTableau,
    Gate,
    PauliString,
    conjugate,
    multiply,
    symplectic_inverse,
    tableau_from_layer,
    weight,
)
from memloss.stats import wilson_interval

BRUTEFORCE_MAX_QUBITS = 8
EXACT_MAX_SITES = 20
BRANCH_CAP = 1 << 16


@lru_cache(maxsize=1024)
def adjoint_tableau(layer: Layer, n: int) -> CliffordTableau:
    """Tableau of ``P -> U^dagger P U`` for the layer's gates."""
    inv = []
    for g in layer.gates:
        local = CliffordTableau.from_matrix(symplectic_inverse(g.local_matrix()))
        inv.append(Gate.from_tableau(local, g.qubits))
    return tableau_from_layer(n, inv)


def _check_dims(c: Circuit, b: ErrorConfig) -> None:
    if not b.matches(c):
        raise CircuitError(f"error configuration {b.fired.shape} does not match circuit ({c.depth}, {c.n})")


# --- single-string propagation ------------------------------------------------

@dataclass
class PropagationTrace:
    initial_weight: int
    weights: list[int] = field(default_factory=list)
    annihilated_at: int | None = None
    subrounds: list[tuple[int, str, int]] = field(default_factory=list)

    @property
    def min_weight(self) -> int:
        return min([self.initial_weight] + self.weights)


def propagate_pauli(c: Circuit, b: ErrorConfig, s: PauliString) -> tuple[PauliString, PropagationTrace]:
    """Return ``Phi_b^dagger(s)`` up to sign and its weight trace.

    ``trace.weights[i]`` is the weight after the ``i``-th adjoint layer, i.e.
    after circuit layer ``depth - 1 - i`` has been undone.
    """
    if s.n != c.n:
        raise CircuitError(f"Pauli has {s.n} qubits, circuit has {c.n}")
    _check_dims(c, b)
    p = s
    trace = PropagationTrace(weight(s))
    for t in range(c.depth - 1, -1, -1):
        layer = c.layers[t]
        for q in np.flatnonzero(b.fired[t]):
            p = depolarize_error_adjoint(p, int(q))
        trace.subrounds.append((t, "noise", weight(p)))
        for r in layer.resets:
            p = reset_adjoint(p, r)
        trace.subrounds.append((t, "resets", weight(p)))
        if layer.gates:
            p = conjugate(adjoint_tableau(layer, c.n), p)
        trace.subrounds.append((t, "gates", weight(p)))
        trace.weights.append(weight(p))
        if p.zero and trace.annihilated_at is None:
            trace.annihilated_at = t
    return p, trace


def weight_schedule(n: int) -> list[int]:
    """Weight limits ``w_0 = n, w_j = ceil(w_{j-1} / 4)`` down to 1 (diagnostic only)."""
    out = [n]
    while out[-1] > 1:
        out.append(math.ceil(out[-1] / 4))
    return out


# --- brute force ----------------------------------------------------------------

def any_survivor_bruteforce(c: Circuit, b: ErrorConfig, cap: int = BRUTEFORCE_MAX_QUBITS) -> bool:
    """Enumerate every non-identity input Pauli and propagate it.

    All ``4**n - 1`` strings move through the adjoint circuit together as
    integer mask arrays.
    """
    n = c.n
    if n > cap:
        raise CapExceeded(f"brute force limited to {cap} qubits, circuit has {n}")
    _check_dims(c, b)
    codes = np.arange(1, 1 << (2 * n), dtype=np.int64)
    lo = (1 << n) - 1
    x = codes & lo
    z = codes >> n
    alive = np.ones(codes.size, dtype=bool)
    for t in range(c.depth - 1, -1, -1):
        layer = c.layers[t]
        for q in np.flatnonzero(b.fired[t]):
            alive &= (((x | z) >> int(q)) & 1) == 0
        for r in layer.resets:
            q = r.qubit
            v = ((x >> q) & 1) | (((z >> q) & 1) << 1)
            allowed = np.array([(r.allowed_mask >> i) & 1 for i in range(4)], dtype=bool)
            alive &= allowed[v]
            x &= ~(1 << q)
            z &= ~(1 << q)
        for g in layer.gates:
            k = len(g.qubits)
            lut = g.adjoint_lut()
            idx = np.zeros_like(x)
            for j, q in enumerate(g.qubits):
                idx |= ((x >> q) & 1) << j
                idx |= ((z >> q) & 1) << (k + j)
            out = lut[idx].astype(np.int64)
            for j, q in enumerate(g.qubits):
                x = (x & ~(1 << q)) | (((out >> j) & 1) << q)
                z = (z & ~(1 << q)) | (((out >> (k + j)) & 1) << q)
    return bool(np.any(alive & ((x | z) != 0)))


# --- reference generator tracking ---------------------------------------------

@dataclass
class SurvivorBasis:
    """Generators of the surviving input subgroup with their current images.

    Methods return new bases and leave ``self`` untouched.
    """

    n: int
    generators: list[tuple[PauliString, PauliString]]

    @classmethod
    def initial(cls, n: int) -> SurvivorBasis:
        gens = []
        for i in range(n):
            p = PauliString(n, 1 << i, 0)
            gens.append((p, p))
        for i in range(n):
            p = PauliString(n, 0, 1 << i)
            gens.append((p, p))
        return cls(n, gens)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def sources(self) -> list[PauliString]:
        return [s for s, _ in self.generators]

    @property
    def images(self) -> list[PauliString]:
        return [img for _, img in self.generators]

    def survives(self) -> bool:
        """True if some surviving input reaches a non-identity image."""
        return any(img.x or img.z for img in self.images)

    def has_support(self, q: int) -> bool:
        return any(img.value(q) for img in self.images)

    def local_values(self, q: int) -> set[int]:
        return {img.value(q) for img in self.images} - {0}

    def conjugate(self, t: CliffordTableau) -> SurvivorBasis:
        return SurvivorBasis(self.n, [(s, conjugate(t, img)) for s, img in self.generators])

    def eliminate(self, q: int, ux: bool, uz: bool) -> SurvivorBasis:
        """Keep the subgroup on which ``ux*x_q + uz*z_q`` vanishes (lowest-index pivot)."""

        def f(img):
            return (ux and (img.x >> q) & 1) ^ (uz and (img.z >> q) & 1)

        pivot = None
        out = []
        for s, img in self.generators:
            if not f(img):
                out.append((s, img))
            elif pivot is None:
                pivot = (s, img)
            else:
                out.append((multiply(s, pivot[0]), multiply(img, pivot[1])))
        return SurvivorBasis(self.n, out)

    def depolarize(self, q: int) -> SurvivorBasis:
        return self.eliminate(q, True, False).eliminate(q, False, True)

    def restrict(self, q: int, allowed: int) -> SurvivorBasis:
        if allowed == 0b0001:
            return self.depolarize(q)
        if allowed == 0b0011:
            return self.eliminate(q, False, True)
        if allowed == 0b0101:
            return self.eliminate(q, True, False)
        if allowed == 0b1001:
            return self.eliminate(q, True, True)
        return self

    def clear(self, r: ResetSpec) -> SurvivorBasis:
        q = r.qubit
        keep = ~(1 << q)
        out = []
        for s, img in self.generators:
            v = img.value(q)
            if v:
                img = PauliString(self.n, img.x & keep, img.z & keep, img.coeff * r.component(v), False)
            out.append((s, img))
        return SurvivorBasis(self.n, out)

    def reset(self, r: ResetSpec) -> list[SurvivorBasis]:
        """Adjoint reset; two bases when the kept local values are not a subgroup."""
        allowed = r.allowed_mask
        q = r.qubit
        if allowed == FULL or allowed in SUBGROUPS:
            return [self.restrict(q, allowed).clear(r)]
        seen = self.local_values(q)
        if len(seen) >= 2:
            keep = [v for v in (1, 2, 3) if (allowed >> v) & 1]
            return [self.restrict(q, 1 | 1 << v).clear(r) for v in keep]
        if seen and not (allowed >> seen.pop()) & 1:
            return [self.depolarize(q).clear(r)]
        return [self.clear(r)]

    def layer(self, layer: Layer, fired_row: np.ndarray) -> list[SurvivorBasis]:
        """Apply one full adjoint layer: noise, resets, then gates."""
        basis = self
        for q in np.flatnonzero(fired_row):
            basis = basis.depolarize(int(q))
        bases = [basis]
        for r in layer.resets:
            bases = [out for bb in bases for out in bb.reset(r)]
        if layer.gates:
            t = adjoint_tableau(layer, self.n)
            bases = [bb.conjugate(t) for bb in bases]
        return bases


def survivor_bases(c: Circuit, b: ErrorConfig) -> list[SurvivorBasis]:
    """Final generator sets (one per branch) after the whole adjoint circuit."""
    _check_dims(c, b)
    bases = [SurvivorBasis.initial(c.n)]
    for t in range(c.depth - 1, -1, -1):
        bases = [out for bb in bases for out in bb.layer(c.layers[t], b.fired[t])]
    return bases


# --- fast path ----------------------------------------------------------------------

class SurvivalEngine:
    """Compiled adjoint program plus kernel, reusable across error configurations."""

    def __init__(self, c: Circuit, backend: str | None = None, branch_cap: int = BRANCH_CAP):
        self.circuit = c
        self.kernel = _backend.get(backend)
        self.program = compile_program(c)
        self._pg = self.kernel.Program(self.program)
        self.branch_cap = branch_cap

    def any_survivor(self, fired: np.ndarray) -> bool:
        fired = np.ascontiguousarray(fired, dtype=bool).view(np.uint8)
        if fired.shape != (self.program.depth, self.program.n):
            raise CircuitError("error configuration does not match circuit")
        k = self.kernel
        prog = self.program
        nops = prog.nops
        stack = [(k.State(prog.n), 0)]
        splits = 0
        while stack:
            st, pos = stack.pop()
            pos = k.run(st, self._pg, fired, pos)
            if pos >= nops:
                if st.any_alive():
                    return True
                continue
            splits += 1
            if splits > self.branch_cap:
                raise CapExceeded(f"more than {self.branch_cap} reset branches")
            arg = int(prog.op_arg[pos])
            q = int(prog.reset_qubit[arg])
            allowed = int(prog.reset_allowed[arg])
            v1, v2 = [v for v in (1, 2, 3) if (allowed >> v) & 1]
            other = st.copy()
            k.restrict(st, q, 1 | 1 << v1)
            k.restrict(other, q, 1 | 1 << v2)
            stack.append((other, pos + 1))
            stack.append((st, pos + 1))
        return False

    def count_survivors(self, seed, start: int, stop: int) -> int:
        c = self.circuit
        count = 0
        for i in range(start, stop):
            rng = trial_rng(seed, i)
            fired = rng.random((c.depth, c.n)) < c.gamma
            count += self.any_survivor(fired)
        return count


def any_survivor_fast(c: Circuit, b: ErrorConfig, backend: str | None = None) -> bool:
    _check_dims(c, b)
    return SurvivalEngine(c, backend).any_survivor(b.fired)


def trial_rng(seed, trial: int) -> np.random.Generator:
    """Generator for one Monte Carlo trial, derived from ``(seed, trial)`` only."""
    if isinstance(seed, np.random.SeedSequence):
        entropy, key = seed.entropy, tuple(seed.spawn_key)
    else:
        entropy, key = int(seed), ()
    ss = np.random.SeedSequence(entropy, spawn_key=key + (trial,))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class SurvivalEstimate:
    p_hat: float
    ci: tuple[float, float]
    survivors: int
    trials: int


def survival_probability(
    c: Circuit,
    trials: int,
    seed=0,
    confidence: float = 0.99,
    workers: int = 1,
    backend: str | None = None,
) -> SurvivalEstimate:
    """Monte Carlo estimate of Pr_b(some non-identity Pauli survives as non-identity).

    Trial ``i`` draws its error configuration from ``trial_rng(seed, i)``, so
    the counts do not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    engine = SurvivalEngine(c, backend)
    if workers <= 1:
        survivors = engine.count_survivors(seed, 0, trials)
    else:
        bounds = np.linspace(0, trials, min(workers * 4, trials) + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            parts = pool.map(
                lambda ab: engine.count_survivors(seed, int(ab[0]), int(ab[1])),
                zip(bounds[:-1], bounds[1:]),
            )
            survivors = sum(parts)
    return SurvivalEstimate(survivors / trials, wilson_interval(survivors, trials, confidence), survivors, trials)


def survival_probability_exact(c: Circuit, cap: int = EXACT_MAX_SITES) -> float:
    """Exact ``Pr_b`` of survival by enumerating error configurations.

    Noise sites that no live image touches contribute identically whether or
    not they fire, so they are summed out without branching.
    """
    n, d, gamma = c.n, c.depth, c.gamma
    if n * d > cap:
        raise CapExceeded(f"exact enumeration limited to {cap} noise sites, circuit has {n * d}")

    def after_layer(bases, t):
        layer = c.layers[t]
        out = []
        for bb in bases:
            for r_basis in _resets(bb, layer.resets):
                if layer.gates:
                    r_basis = r_basis.conjugate(adjoint_tableau(layer, n))
                if r_basis.survives():
                    out.append(r_basis)
        return out

    def rec(bases, t, q):
        if not bases:
            return 0.0
        if t < 0:
            return 1.0 if any(bb.survives() for bb in bases) else 0.0
        if q == n:
            return rec(after_layer(bases, t), t - 1, 0)
        if gamma == 0 or not any(bb.has_support(q) for bb in bases):
            return rec(bases, t, q + 1)
        hit = [bb.depolarize(q) for bb in bases]
        hit = [bb for bb in hit if bb.survives()]
        if gamma == 1:
            return rec(hit, t, q + 1)
        return gamma * rec(hit, t, q + 1) + (1 - gamma) * rec(bases, t, q + 1)

    return rec([SurvivorBasis.initial(n)], d - 1, 0)


def _resets(basis: SurvivorBasis, resets) -> list[SurvivorBasis]:
    bases = [basis]
    for r in resets:
        bases = [out for bb in bases for out in bb.reset(r)]
    return bases
