"""Verification suites behind ``memloss check``.

Each suite returns a :class:`CheckResult` whose ``lines`` are human-readable
and whose ``passed`` flag drives the CLI exit code.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from memloss.channels import NAMED_STATES
from memloss.circuit import (
    Circuit,
    ErrorConfig,
    Layer,
    gen_idle,
    gen_random,
    sample_error_config,
)
from memloss.engine import any_survivor_bruteforce, any_survivor_fast, propagate_pauli
from memloss.oracle import (
    DensityMatrix,
    TOL,
    check_lemma1,
    dense_channel_adjoint_check,
    evolve,
    evolve_config,
    random_density,
)
from memloss.pauli import GATE_ARITY, Gate, PauliString

ADJOINT_TOL = 1e-12
ADJOINT_GAMMAS = (0.0, 0.1, 0.5, 1.0)
ADJOINT_STATES = ("zero", "plus", "magic", "mixed")
EQUIV_GAMMAS = (0.0, 0.1, 0.5, 1.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    lines: list[str] = field(default_factory=list)

    def report(self) -> str:
        head = f"{self.name}: {'PASS' if self.passed else 'FAIL'}"
        return "\n".join([head] + ["  " + s for s in self.lines])


def adjoint_specs() -> list[tuple[str, object]]:
    specs = [("depolarize", g) for g in ADJOINT_GAMMAS]
    specs += [("reset", NAMED_STATES[s]) for s in ADJOINT_STATES]
    specs += [("gate", name) for name in GATE_ARITY]
    return specs


def check_adjoint(instances: int | None = None, seed: int = 0) -> CheckResult:
    """Dense PTM transpose and inner-product identities for every supported channel."""
    lines = []
    worst = 0.0
    for spec in adjoint_specs():
        dev = dense_channel_adjoint_check(spec)
        worst = max(worst, dev)
        lines.append(f"{spec[0]} {spec[1]}: max deviation {dev:.3e}")
    lines.append(f"worst {worst:.3e} (tolerance {ADJOINT_TOL:g})")
    return CheckResult("adjoint", worst < ADJOINT_TOL, lines)


def check_equivalence(instances: int = 500, seed: int = 0, backend: str | None = None) -> CheckResult:
    """Fast survivor decision against brute-force enumeration on random small circuits."""
    rng = np.random.default_rng(seed)
    mismatches = []
    survived = 0
    for i in range(instances):
        n = int(rng.integers(1, 7))
        d = int(rng.integers(0, 7))
        gamma = float(EQUIV_GAMMAS[i % len(EQUIV_GAMMAS)])
        c = gen_random(n, d, gamma, rng)
        b = sample_error_config(c, rng)
        slow = any_survivor_bruteforce(c, b)
        fast = any_survivor_fast(c, b, backend)
        survived += slow
        if slow != fast:
            mismatches.append(f"instance {i}: n={n} d={d} gamma={gamma} brute={slow} fast={fast}")
    lines = mismatches[:20] + [f"{instances} instances, {survived} with survivors, {len(mismatches)} mismatches"]
    return CheckResult("equivalence", not mismatches, lines)


def idle_equality(gamma: float, d: int) -> tuple[float, float, float]:
    """(lhs, rhs, closed form) on the one-qubit idle chain with inputs |0> and |1>."""
    c = gen_idle(1, d, gamma)
    rep = check_lemma1(c, DensityMatrix.basis("0"), DensityMatrix.basis("1"))
    return rep.lhs, rep.rhs, 2 * (1 - gamma) ** d


def check_lemma1_suite(instances: int = 100, seed: int = 0) -> CheckResult:
    """Trace distance of outputs never exceeds twice the survival probability."""
    rng = np.random.default_rng(seed)
    ok = True
    lines = []
    methods = {"exact": 0, "mc": 0}
    worst_gap = -math.inf
    for i in range(instances):
        n = int(rng.integers(1, 5))
        d = int(rng.integers(1, 5))
        gamma = float(rng.choice([0.05, 0.1, 0.3, 0.5]))
        c = gen_random(n, d, gamma, rng)
        rep = check_lemma1(c, random_density(n, rng), random_density(n, rng), seed=seed + i)
        methods[rep.method] += 1
        worst_gap = max(worst_gap, rep.lhs - rep.rhs)
        if not rep.holds:
            ok = False
            lines.append(f"instance {i}: lhs {rep.lhs:.6g} > rhs {rep.rhs:.6g} ({rep.method})")
    lines.append(f"{instances} random circuits ({methods['exact']} exact, {methods['mc']} mc), max lhs - rhs {worst_gap:.3e}")
    worst_eq = 0.0
    for gamma in (0.1, 0.3, 0.5):
        for d in (1, 2, 4, 8):
            lhs, rhs, closed = idle_equality(gamma, d)
            worst_eq = max(worst_eq, abs(lhs - rhs), abs(lhs - closed), abs(rhs - closed))
    eq_ok = worst_eq <= TOL
    lines.append(f"idle equality 2(1-gamma)^d: max deviation {worst_eq:.3e}")
    return CheckResult("lemma1", ok and eq_ok, lines)


def swap_ladder(w: int, d: int, gamma: float) -> Circuit:
    """``2w`` qubits with alternating even/odd SWAP rounds; weight is conserved."""
    n = 2 * w
    layers = []
    for t in range(d):
        gates = tuple(Gate("SWAP", (a, a + 1)) for a in range(t % 2, n - 1, 2))
        layers.append(Layer(gates))
    return Circuit(n, gamma, tuple(layers))


def fact_case(family: str, w: int, d: int, gamma: float, samples: int, rng) -> dict:
    """Empirical survival of one weight-``w`` Pauli against ``(1 - gamma)**(w d)``."""
    if family == "idle":
        c = gen_idle(w, d, gamma)
    else:
        c = swap_ladder(w, d, gamma)
    s = PauliString.from_label("X" * w + "I" * (c.n - w))
    hits = 0
    for _ in range(samples):
        out, _ = propagate_pauli(c, sample_error_config(c, rng), s)
        hits += not out.zero
    bound = (1 - gamma) ** (w * d)
    sigma = math.sqrt(bound * (1 - bound) / samples)
    p = hits / samples
    return {
        "family": family, "w": w, "d": d, "gamma": gamma, "p": p, "bound": bound, "sigma": sigma,
        "below": p <= bound + 3 * sigma,
        "equal": abs(p - bound) <= 3 * sigma,
    }


def check_fact(instances: int = 100_000, seed: int = 0) -> CheckResult:
    """Survival of a weight-w string through d noisy layers is at most (1-gamma)^(wd).

    ``instances`` is the number of sampled error configurations per grid point.
    """
    ok = True
    lines = []
    grid = itertools.product(("idle", "swap"), (1, 2, 3), (1, 5, 10), (0.1, 0.3))
    for idx, (family, w, d, gamma) in enumerate(grid):
        rng = np.random.default_rng([seed, idx])
        r = fact_case(family, w, d, gamma, instances, rng)
        good = r["below"] and (family != "idle" or r["equal"])
        ok &= good
        lines.append(
            f"{family} w={w} d={d} gamma={gamma}: p={r['p']:.5f} bound={r['bound']:.5f} "
            f"sigma={r['sigma']:.2e} {'ok' if good else 'FAIL'}"
        )
    return CheckResult("fact", ok, lines)


def mixture_deviation(c: Circuit, rho: DensityMatrix) -> float:
    """Entrywise gap between the noisy evolution and its enumerated error mixture."""
    d, n, g = c.depth, c.n, c.gamma
    acc = np.zeros_like(rho.data)
    for bits in itertools.product((False, True), repeat=d * n):
        k = sum(bits)
        weight = g**k * (1 - g) ** (d * n - k)
        if weight == 0:
            continue
        b = ErrorConfig(np.array(bits, dtype=bool).reshape(d, n))
        acc += weight * evolve_config(c, b, rho).data
    return float(np.abs(acc - evolve(c, rho).data).max())


def check_mixture(instances: int = 20, seed: int = 0, max_sites: int = 12) -> CheckResult:
    """Noisy evolution equals the binomially weighted average over error configurations."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, 4))
        d = int(rng.integers(1, max_sites // n + 1))
        c = gen_random(n, d, float(rng.choice([0.1, 0.3, 0.5])), rng)
        worst = max(worst, mixture_deviation(c, random_density(n, rng)))
    return CheckResult("mixture", worst <= TOL, [f"{instances} instances, max entrywise deviation {worst:.3e}"])


SUITES = {
    "adjoint": (check_adjoint, None),
    "equivalence": (check_equivalence, 500),
    "lemma1": (check_lemma1_suite, 100),
    "fact": (check_fact, 100_000),
    "mixture": (check_mixture, 20),
}


def run_suite(name: str, instances: int | None = None, seed: int = 0) -> CheckResult:
    fn, default = SUITES[name]
    if instances is None:
        instances = default
    return fn(instances, seed)
