import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memloss.channels import NAMED_STATES, ResetSpec
from memloss.checks import mixture_deviation
from memloss.circuit import Circuit, ErrorConfig, Layer, gen_idle, gen_random, sample_error_config
from memloss.engine import propagate_pauli
from memloss.errors import CapExceeded, CircuitError
from memloss.oracle import (
    PAULI,
    DensityMatrix,
    adjoint_config,
    check_lemma1,
    clifford_unitary,
    dense_channel_adjoint_check,
    embed,
    evolve,
    evolve_config,
    pauli_matrix,
    random_density,
    trace_distance,
)
from memloss.pauli import GATE_ARITY, Gate, PauliString, random_clifford_tableau

ZERO = NAMED_STATES["zero"]


def seeds():
    return st.integers(0, 2**32 - 1)


class TestDensityMatrix:
    def test_random_density_valid(self, rng):
        for n in range(1, 5):
            assert random_density(n, rng).problems() == []

    def test_problems_detected(self):
        assert "trace differs from 1" in DensityMatrix(1, np.eye(2)).problems()
        assert "not positive semidefinite" in DensityMatrix(1, np.diag([1.5, -0.5])).problems()
        assert "not Hermitian" in DensityMatrix(1, np.array([[0.5, 1], [0, 0.5]])).problems()

    def test_shape_checked(self):
        with pytest.raises(CircuitError):
            DensityMatrix(2, np.eye(2) / 2)


class TestEvolve:
    def test_empty_circuit(self, rng):
        rho = random_density(2, rng)
        assert np.array_equal(evolve(Circuit(2, 0.3), rho).data, rho.data)

    def test_reset_to_zero(self):
        c = Circuit(1, 0.0, [Layer((), [ResetSpec(0, ZERO)])])
        assert np.allclose(evolve(c, DensityMatrix.basis("1")).data, np.diag([1, 0]), atol=1e-15)

    @pytest.mark.parametrize("gamma,d", [(0.1, 1), (0.3, 4), (0.7, 2)])
    def test_idle_fixed_point(self, gamma, d):
        out = evolve(gen_idle(1, d, gamma), DensityMatrix.basis("0")).data
        f = (1 - gamma) ** d
        assert np.allclose(out, np.diag([(1 + f) / 2, (1 - f) / 2]), atol=1e-14)

    @settings(max_examples=25, deadline=None)
    @given(seeds())
    def test_output_is_a_state(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        c = gen_random(n, 4, float(rng.random()), rng)
        assert evolve(c, random_density(n, rng)).problems() == []

    def test_config_all_false_is_noiseless(self, rng):
        c = gen_random(3, 3, 0.4, rng)
        rho = random_density(3, rng)
        clean = Circuit(3, 0.0, c.layers)
        assert np.allclose(evolve_config(c, ErrorConfig.none(c), rho).data, evolve(clean, rho).data, atol=1e-12)

    def test_config_full_depolarization(self, rng):
        c = gen_idle(1, 1, 0.2)
        out = evolve_config(c, ErrorConfig.all(c), random_density(1, rng))
        assert np.allclose(out.data, np.eye(2) / 2, atol=1e-15)

    def test_mixture_identity_small(self, rng):
        c = gen_random(2, 3, 0.3, rng)
        assert mixture_deviation(c, random_density(2, rng)) < 1e-10

    def test_cap(self):
        with pytest.raises(CapExceeded):
            evolve(gen_idle(8, 1, 0.1), DensityMatrix.basis("0" * 8))

    def test_state_size_mismatch(self):
        with pytest.raises(CircuitError):
            evolve(gen_idle(2, 1, 0.1), DensityMatrix.basis("0"))


class TestTraceDistance:
    def test_self(self, rng):
        rho = random_density(3, rng)
        assert trace_distance(rho, rho) == 0

    def test_orthogonal(self):
        assert trace_distance(DensityMatrix.basis("01"), DensityMatrix.basis("10")) == pytest.approx(2)

    @pytest.mark.parametrize("gamma,d", [(0.2, 3), (0.5, 1), (0.05, 10)])
    def test_idle_closed_form(self, gamma, d):
        c = gen_idle(1, d, gamma)
        td = trace_distance(evolve(c, DensityMatrix.basis("0")), evolve(c, DensityMatrix.basis("1")))
        assert td == pytest.approx(2 * (1 - gamma) ** d, abs=1e-12)

    def test_matches_singular_values(self, rng):
        a, b = random_density(3, rng), random_density(3, rng)
        sv = np.linalg.svd(a.data - b.data, compute_uv=False).sum()
        assert trace_distance(a, b) == pytest.approx(sv, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(CircuitError):
            trace_distance(DensityMatrix.basis("0"), DensityMatrix.basis("00"))


class TestLemma1:
    def test_reset_circuit(self):
        c = Circuit(1, 0.1, [Layer((), [ResetSpec(0, ZERO)])])
        rep = check_lemma1(c, DensityMatrix.basis("0"), DensityMatrix.basis("1"))
        assert rep.lhs == pytest.approx(0, abs=1e-15) and rep.rhs == 0 and rep.holds
        assert rep.method == "exact"

    @pytest.mark.parametrize("gamma,d", [(0.1, 2), (0.4, 3)])
    def test_idle_equality(self, gamma, d):
        rep = check_lemma1(gen_idle(1, d, gamma), DensityMatrix.basis("0"), DensityMatrix.basis("1"))
        assert rep.lhs == pytest.approx(rep.rhs, abs=1e-10)
        assert rep.rhs == pytest.approx(2 * (1 - gamma) ** d, abs=1e-12)

    def test_monte_carlo_branch(self, rng):
        c = gen_random(3, 7, 0.2, rng)
        rep = check_lemma1(c, random_density(3, rng), random_density(3, rng), trials=20_000)
        assert rep.method == "mc" and rep.holds

    def test_random_instances(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n, d = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            c = gen_random(n, d, float(rng.choice([0.1, 0.3])), rng)
            assert check_lemma1(c, random_density(n, rng), random_density(n, rng)).holds


class TestAdjoint:
    @pytest.mark.parametrize("gamma", [0.0, 0.25, 1.0])
    def test_depolarizing(self, gamma):
        assert dense_channel_adjoint_check(("depolarize", gamma)) < 1e-12

    @pytest.mark.parametrize("state", sorted(NAMED_STATES))
    def test_resets(self, state):
        assert dense_channel_adjoint_check(("reset", NAMED_STATES[state])) < 1e-12

    @pytest.mark.parametrize("kind", sorted(GATE_ARITY))
    def test_gates(self, kind):
        assert dense_channel_adjoint_check(("gate", kind)) < 1e-12

    def test_raw_tableau(self, rng):
        g = Gate.from_tableau(random_clifford_tableau(2, rng), (0, 1))
        assert dense_channel_adjoint_check(("gate", g)) < 1e-12

    def test_unknown(self):
        with pytest.raises(ValueError):
            dense_channel_adjoint_check(("amplitude-damping", 0.1))


class TestCliffordUnitary:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_signed_images(self, k, rng):
        t = random_clifford_tableau(k, rng)
        u = clifford_unitary(t)
        assert np.allclose(u @ u.conj().T, np.eye(1 << k), atol=1e-12)
        for j in range(k):
            for ch, img in (("X", t.xs[j]), ("Z", t.zs[j])):
                p = pauli_matrix(PauliString.single(k, j, ch))
                assert np.allclose(u @ p @ u.conj().T, pauli_matrix(img), atol=1e-12)

    def test_embed_order(self):
        cnot = embed(np.kron(np.diag([1, 0]), np.eye(2)) + np.kron(np.diag([0, 1]), PAULI["X"]), (2, 0), 3)
        # control qubit 2, target qubit 0: |001> -> |101>
        assert cnot[0b101, 0b001] == 1


class TestForwardAdjointConsistency:
    @settings(max_examples=25, deadline=None)
    @given(seeds())
    def test_expectations(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        c = gen_random(n, 3, 0.3, rng)
        b = sample_error_config(c, rng)
        rho = random_density(n, rng)
        out = evolve_config(c, b, rho).data
        for code in range(4**n):
            s = pauli_matrix(PauliString(n, code & ((1 << n) - 1), code >> n))
            lhs = np.trace(out @ s)
            rhs = np.trace(rho.data @ adjoint_config(c, b, s))
            assert abs(lhs - rhs) < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(seeds())
    def test_agrees_with_propagation(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        c = gen_random(n, 3, 0.3, rng)
        b = sample_error_config(c, rng)
        for code in range(4**n):
            s = PauliString(n, code & ((1 << n) - 1), code >> n)
            dense = adjoint_config(c, b, pauli_matrix(s))
            out, _ = propagate_pauli(c, b, s)
            if out.zero:
                assert np.abs(dense).max() < 1e-10
            else:
                m = pauli_matrix(out)
                assert min(np.abs(dense - m).max(), np.abs(dense + m).max()) < 1e-10
