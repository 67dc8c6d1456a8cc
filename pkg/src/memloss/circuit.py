"""Circuit data model, JSON file format, validation and circuit generators.

Within a layer the order is fixed: gates, then resets, then one round of
depolarizing noise on every qubit. The adjoint layer runs in reverse.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from memloss.channels import NAMED_STATES, NoiseModel, ResetSpec
from memloss.errors import CircuitError
from memloss.pauli import GATE_ARITY, Gate, random_two_qubit_clifford

LAYER_ORDER = ("gates", "resets", "noise")


@dataclass(frozen=True)
class Layer:
    gates: tuple[Gate, ...] = ()
    resets: tuple[ResetSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "resets", tuple(self.resets))


@dataclass(frozen=True)
class Circuit:
    n: int
    noise: NoiseModel
    layers: tuple[Layer, ...] = ()

    def __post_init__(self):
        if not isinstance(self.noise, NoiseModel):
            object.__setattr__(self, "noise", NoiseModel(float(self.noise)))
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def gamma(self) -> float:
        return self.noise.gamma

    @property
    def depth(self) -> int:
        return len(self.layers)

    def prefix(self, depth: int) -> Circuit:
        return Circuit(self.n, self.noise, self.layers[:depth])

    def extended(self, layers: Iterable[Layer]) -> Circuit:
        return Circuit(self.n, self.noise, self.layers + tuple(layers))


@dataclass(frozen=True)
class Violation:
    layer: int | None
    message: str

    def __str__(self):
        return self.message if self.layer is None else f"{self.message}, layer {self.layer}"


def validate(c: Circuit) -> list[Violation]:
    """Every invariant breach in ``c``; an empty list means the circuit is valid."""
    out = []
    if c.n < 1:
        out.append(Violation(None, "qubit count must be positive"))
    for i, layer in enumerate(c.layers):
        used: set[int] = set()
        for g in layer.gates:
            problem = g.check(c.n)
            if problem:
                out.append(Violation(i, problem))
                continue
            if used.intersection(g.qubits):
                out.append(Violation(i, "overlapping gates"))
            used.update(g.qubits)
        seen: set[int] = set()
        for r in layer.resets:
            if not 0 <= r.qubit < c.n:
                out.append(Violation(i, "reset qubit out of range"))
            if r.qubit in seen:
                out.append(Violation(i, "duplicate reset qubit"))
            seen.add(r.qubit)
            if not r.is_valid_state:
                out.append(Violation(i, "invalid reset state"))
    return out


def check(c: Circuit) -> Circuit:
    problems = validate(c)
    if problems:
        raise CircuitError("; ".join(str(p) for p in problems))
    return c


@dataclass(frozen=True, eq=False)
class ErrorConfig:
    """Boolean ``(depth, n)`` matrix; True where a complete depolarization fired."""

    fired: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.fired, dtype=bool)
        if arr.ndim != 2:
            raise CircuitError("error configuration must be a 2-d matrix")
        object.__setattr__(self, "fired", arr)

    @classmethod
    def none(cls, c: Circuit) -> ErrorConfig:
        return cls(np.zeros((c.depth, c.n), dtype=bool))

    @classmethod
    def all(cls, c: Circuit) -> ErrorConfig:
        return cls(np.ones((c.depth, c.n), dtype=bool))

    def matches(self, c: Circuit) -> bool:
        return self.fired.shape == (c.depth, c.n)

    def __eq__(self, other):
        if not isinstance(other, ErrorConfig):
            return NotImplemented
        return np.array_equal(self.fired, other.fired)


def sample_error_config(c: Circuit, rng: np.random.Generator) -> ErrorConfig:
    return ErrorConfig(rng.random((c.depth, c.n)) < c.gamma)


# --- file format --------------------------------------------------------------

def _num(v: float):
    if v == 0:
        return 0
    return float(v)


def to_dict(c: Circuit) -> dict:
    layers = []
    for layer in c.layers:
        gates = []
        for g in layer.gates:
            d = {"kind": g.kind, "qubits": list(g.qubits)}
            if g.tableau is not None:
                d["tableau"] = [list(row) for row in g.tableau]
            gates.append(d)
        resets = [{"bloch": [_num(v) for v in r.bloch], "qubit": r.qubit} for r in layer.resets]
        layers.append({"gates": gates, "resets": resets})
    return {"gamma": float(c.gamma), "layers": layers, "n": c.n}


def from_dict(d: dict) -> Circuit:
    try:
        layers = []
        for ld in d["layers"]:
            gates = tuple(
                Gate(g["kind"], tuple(g["qubits"]), g.get("tableau")) for g in ld.get("gates", [])
            )
            resets = tuple(ResetSpec(int(r["qubit"]), tuple(r["bloch"])) for r in ld.get("resets", []))
            layers.append(Layer(gates, resets))
        return Circuit(int(d["n"]), NoiseModel(float(d["gamma"])), tuple(layers))
    except (KeyError, TypeError) as exc:
        raise CircuitError(f"malformed circuit: {exc}") from exc


def dumps(c: Circuit) -> str:
    return json.dumps(to_dict(c), sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str) -> Circuit:
    return from_dict(json.loads(text))


def load(path) -> Circuit:
    return loads(Path(path).read_text(encoding="utf-8"))


def dump(c: Circuit, path) -> None:
    Path(path).write_text(dumps(c), encoding="utf-8", newline="\n")


# --- generators -----------------------------------------------------------------

def resolve_state(state) -> tuple[float, float, float]:
    if isinstance(state, str):
        try:
            return NAMED_STATES[state]
        except KeyError:
            raise CircuitError(f"unknown reset state {state!r}") from None
    if isinstance(state, ResetSpec):
        return state.bloch
    return tuple(state)


def gen_idle(n: int, d: int, gamma: float) -> Circuit:
    return Circuit(n, NoiseModel(gamma), tuple(Layer() for _ in range(d)))


def gen_brickwork(
    n: int,
    d: int,
    gamma: float,
    reset_rate: float,
    reset_state,
    rng: np.random.Generator,
) -> Circuit:
    """Alternating even/odd nearest-neighbour layers of uniform two-qubit Cliffords.

    Randomness is drawn layer by layer, so the depth-``d`` circuit for a seed is
    a prefix of the deeper circuits for the same seed.
    """
    if n < 2:
        raise CircuitError("brickwork needs at least two qubits")
    bloch = resolve_state(reset_state)
    layers = []
    for t in range(d):
        gates = []
        for a in range(t % 2, n - 1, 2):
            gates.append(Gate.from_tableau(random_two_qubit_clifford(rng), (a, a + 1)))
        hits = rng.random(n) < reset_rate
        resets = tuple(ResetSpec(int(q), bloch) for q in np.flatnonzero(hits))
        layers.append(Layer(tuple(gates), resets))
    return Circuit(n, NoiseModel(gamma), tuple(layers))


def gen_repetition_refresh(n: int, rounds: int, gamma: float) -> Circuit:
    """Repetition-code parity copying with ancillas refreshed to |0> every round.

    Data qubits sit at even indices and ancillas between them. A round is two
    CNOT layers (left and right data neighbour onto each ancilla) and a layer
    resetting all ancillas. No majority vote is possible with Clifford gates.
    """
    if n < 3 or n % 2 == 0:
        raise CircuitError("repetition refresh needs an odd qubit count >= 3")
    ancillas = range(1, n, 2)
    left = tuple(Gate("CNOT", (a - 1, a)) for a in ancillas)
    right = tuple(Gate("CNOT", (a + 1, a)) for a in ancillas)
    reset = tuple(ResetSpec(a, NAMED_STATES["zero"]) for a in ancillas)
    layers = []
    for _ in range(rounds):
        layers += [Layer(left), Layer(right), Layer((), reset)]
    return Circuit(n, NoiseModel(gamma), tuple(layers))


def gen_random(
    n: int,
    d: int,
    gamma: float,
    rng: np.random.Generator,
    reset_rate: float = 0.3,
    reset_states: Sequence = ("zero", "plus", "magic", "mixed"),
) -> Circuit:
    """Random layers mixing named gates, random two-qubit tableaux and resets."""
    names1 = [k for k, a in GATE_ARITY.items() if a == 1]
    names2 = [k for k, a in GATE_ARITY.items() if a == 2]
    states = [resolve_state(s) for s in reset_states]
    layers = []
    for _ in range(d):
        order = [int(q) for q in rng.permutation(n)]
        gates = []
        i = 0
        while i < n:
            roll = rng.random()
            if roll < 0.45 and i + 1 < n:
                pair = (order[i], order[i + 1])
                if rng.random() < 0.5:
                    gates.append(Gate(names2[int(rng.integers(len(names2)))], pair))
                else:
                    gates.append(Gate.from_tableau(random_two_qubit_clifford(rng), pair))
                i += 2
            else:
                if roll < 0.8:
                    gates.append(Gate(names1[int(rng.integers(len(names1)))], (order[i],)))
                i += 1
        resets = []
        for q in range(n):
            if rng.random() < reset_rate:
                resets.append(ResetSpec(q, states[int(rng.integers(len(states)))]))
        layers.append(Layer(tuple(gates), tuple(resets)))
    return Circuit(n, NoiseModel(gamma), tuple(layers))


def random_bloch(rng: np.random.Generator) -> tuple[float, float, float]:
    v = rng.normal(size=3)
    v *= rng.random() ** (1 / 3) / math.sqrt(float(v @ v))
    return tuple(float(a) for a in v)
