import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memloss.channels import NAMED_STATES, ResetSpec
from memloss.circuit import (
    Circuit,
    ErrorConfig,
    Layer,
    gen_brickwork,
    gen_idle,
    gen_random,
    gen_repetition_refresh,
    sample_error_config,
)
from memloss.engine import (
    SurvivalEngine,
    SurvivorBasis,
    any_survivor_bruteforce,
    any_survivor_fast,
    propagate_pauli,
    survival_probability,
    survival_probability_exact,
    survivor_bases,
    trial_rng,
    weight_schedule,
)
from memloss.errors import CapExceeded, CircuitError
from memloss.pauli import Gate, PauliString, multiply

ZERO = NAMED_STATES["zero"]
MAGIC = NAMED_STATES["magic"]


def reset_circuit(bloch, gamma=0.0):
    return Circuit(1, gamma, [Layer((), [ResetSpec(0, bloch)])])


class TestPropagate:
    def test_empty_circuit(self):
        c = Circuit(3, 0.3)
        s = PauliString.from_label("XIZ")
        out, trace = propagate_pauli(c, ErrorConfig.none(c), s)
        assert out == s and trace.min_weight == 2 and trace.weights == []

    def test_reset_kills_x(self):
        c = reset_circuit(ZERO)
        out, trace = propagate_pauli(c, ErrorConfig.none(c), PauliString.from_label("X"))
        assert out.zero and trace.annihilated_at == 0

    def test_reset_maps_z_to_identity(self):
        c = reset_circuit(ZERO)
        out, _ = propagate_pauli(c, ErrorConfig.none(c), PauliString.from_label("Z"))
        assert out.is_identity and out.coeff == 1.0

    def test_weight_trace(self):
        # CNOT(0,1) undone on XX gives XI; then an idle layer
        c = Circuit(2, 0.1, [Layer([Gate("CNOT", (0, 1))]), Layer()])
        out, trace = propagate_pauli(c, ErrorConfig.none(c), PauliString.from_label("XX"))
        assert out.label == "XI"
        assert trace.weights == [2, 1] and trace.min_weight == 1
        assert [s[1] for s in trace.subrounds[:3]] == ["noise", "resets", "gates"]

    def test_fired_site_annihilates(self):
        c = gen_idle(2, 3, 0.5)
        fired = np.zeros((3, 2), dtype=bool)
        fired[1, 1] = True
        out, trace = propagate_pauli(c, ErrorConfig(fired), PauliString.from_label("IY"))
        assert out.zero and trace.annihilated_at == 1
        out, _ = propagate_pauli(c, ErrorConfig(fired), PauliString.from_label("YI"))
        assert out.label == "YI"

    def test_dimension_mismatch(self):
        c = gen_idle(2, 3, 0.5)
        with pytest.raises(CircuitError):
            propagate_pauli(c, ErrorConfig(np.zeros((2, 2), dtype=bool)), PauliString.from_label("XX"))
        with pytest.raises(CircuitError):
            propagate_pauli(c, ErrorConfig.none(c), PauliString.from_label("X"))

    def test_weight_schedule(self):
        assert weight_schedule(100) == [100, 25, 7, 2, 1]
        assert weight_schedule(1) == [1]


class TestBruteForce:
    @pytest.mark.parametrize("layer", [0, 2, 4])
    def test_full_layer_of_errors(self, layer, rng):
        c = gen_random(3, 5, 0.3, rng)
        fired = np.zeros((5, 3), dtype=bool)
        fired[layer] = True
        assert not any_survivor_bruteforce(c, ErrorConfig(fired))

    def test_noiseless_reset_free(self, rng):
        c = gen_random(4, 6, 0.0, rng, reset_rate=0.0)
        assert any_survivor_bruteforce(c, ErrorConfig.none(c))

    def test_identity_image_is_not_survival(self):
        # Z -> I under reset to |0>; X, Y killed
        c = reset_circuit(ZERO)
        assert not any_survivor_bruteforce(c, ErrorConfig.none(c))

    def test_cap(self):
        c = gen_idle(9, 1, 0.1)
        with pytest.raises(CapExceeded):
            any_survivor_bruteforce(c, ErrorConfig.none(c))

    def test_fixed_two_qubit_instance(self):
        rng = np.random.default_rng(2)
        c = gen_random(2, 2, 0.5, rng)
        b = sample_error_config(c, rng)
        assert any_survivor_bruteforce(c, b) == any_survivor_fast(c, b)


class TestFastPath:
    def test_one_qubit_fired(self, backend_name):
        c = gen_idle(1, 1, 0.5)
        b = ErrorConfig.all(c)
        assert not any_survivor_fast(c, b, backend_name)
        assert [bb.rank for bb in survivor_bases(c, b)] == [0]

    def test_cnot_noiseless(self, backend_name):
        c = Circuit(2, 0.1, [Layer([Gate("CNOT", (0, 1))])])
        b = ErrorConfig.none(c)
        assert any_survivor_fast(c, b, backend_name)
        assert [bb.rank for bb in survivor_bases(c, b)] == [4]

    def test_random_agreement(self, backend_name):
        rng = np.random.default_rng(99)
        for i in range(200):
            n = int(rng.integers(1, 7))
            d = int(rng.integers(0, 7))
            c = gen_random(n, d, float(rng.choice([0.0, 0.1, 0.5, 1.0])), rng)
            b = sample_error_config(c, rng)
            expected = any_survivor_bruteforce(c, b)
            assert any_survivor_fast(c, b, backend_name) == expected, i
            assert any(bb.survives() for bb in survivor_bases(c, b)) == expected, i

    def test_magic_reset_needs_branching(self, backend_name):
        # X and Z both reach the magic reset, whose kept set {I, X, Z} is not a subgroup
        c = Circuit(2, 0.0, [Layer([Gate("CNOT", (0, 1))]), Layer((), [ResetSpec(1, MAGIC)])])
        b = ErrorConfig.none(c)
        assert any_survivor_fast(c, b, backend_name) == any_survivor_bruteforce(c, b) is True
        with pytest.raises(CapExceeded):
            SurvivalEngine(c, backend_name, branch_cap=0).any_survivor(b.fired)

    def test_dimension_mismatch(self):
        c = gen_idle(2, 2, 0.1)
        with pytest.raises(CircuitError):
            any_survivor_fast(c, ErrorConfig(np.zeros((3, 2), dtype=bool)))


class TestSurvivorBasis:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_rank_never_increases(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        c = gen_random(n, 5, 0.3, rng)
        b = sample_error_config(c, rng)
        bases = [SurvivorBasis.initial(n)]
        for t in range(c.depth - 1, -1, -1):
            nxt = []
            for bb in bases:
                for out in bb.layer(c.layers[t], b.fired[t]):
                    assert out.rank <= bb.rank
                    nxt.append(out)
            bases = nxt

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_span_is_exactly_the_survivors(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        c = gen_random(n, 3, 0.3, rng, reset_states=("zero", "plus", "mixed"))
        b = sample_error_config(c, rng)
        (basis,) = survivor_bases(c, b)
        span = {(0, 0)}
        for s in basis.sources:
            span |= {(x ^ s.x, z ^ s.z) for x, z in span}
        assert len(span) == 2**basis.rank
        for code in range(4**n):
            p = PauliString(n, code & ((1 << n) - 1), code >> n)
            out, _ = propagate_pauli(c, b, p)
            assert (not out.zero) == ((p.x, p.z) in span)

    def test_images_are_homomorphic(self, rng):
        c = gen_random(3, 4, 0.2, rng, reset_states=("zero", "plus"))
        b = sample_error_config(c, rng)
        (basis,) = survivor_bases(c, b)
        gens = basis.generators
        for (s1, i1) in gens:
            for (s2, i2) in gens:
                out, _ = propagate_pauli(c, b, multiply(s1, s2))
                prod = multiply(i1, i2)
                assert (out.x, out.z) == (prod.x, prod.z)


class TestSurvivalProbability:
    def test_noiseless_generic_resets(self, rng):
        c = gen_random(4, 5, 0.0, rng, reset_states=[(0.3, 0.4, 0.5)])
        assert survival_probability(c, 200).p_hat == 1.0

    @pytest.mark.parametrize("gamma,d", [(0.1, 3), (0.3, 2), (0.5, 5)])
    def test_idle_closed_form(self, gamma, d):
        est = survival_probability(gen_idle(1, d, gamma), 20_000, seed=5)
        assert est.ci[0] <= (1 - gamma) ** d <= est.ci[1]

    def test_repetition_matches_exact(self):
        c = gen_repetition_refresh(3, 2, 0.2)
        exact = survival_probability_exact(c)
        est = survival_probability(c, 20_000, seed=3)
        assert est.ci[0] <= exact <= est.ci[1]

    def test_workers_do_not_change_counts(self, rng):
        c = gen_brickwork(12, 10, 0.1, 0.1, "zero", rng)
        one = survival_probability(c, 3000, seed=11, workers=1)
        many = survival_probability(c, 3000, seed=11, workers=5)
        assert one == many

    def test_backends_agree(self, rng):
        from memloss.backend import BACKENDS

        c = gen_brickwork(10, 12, 0.1, 0.2, "magic", rng)
        counts = {name: survival_probability(c, 500, seed=4, backend=name).survivors for name in BACKENDS}
        assert len(set(counts.values())) == 1

    def test_nested_prefixes_monotone(self):
        c = gen_brickwork(10, 30, 0.1, 0.1, "zero", np.random.default_rng(1))
        counts = [survival_probability(c.prefix(d), 2000, seed=8).survivors for d in range(0, 31, 2)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert counts[0] == 2000

    def test_trial_rng_is_order_free(self):
        a = trial_rng(42, 7).random(5)
        trial_rng(42, 3).random(100)
        assert np.array_equal(a, trial_rng(42, 7).random(5))
        assert not np.array_equal(a, trial_rng(42, 8).random(5))

    def test_trials_positive(self):
        with pytest.raises(ValueError):
            survival_probability(gen_idle(1, 1, 0.1), 0)


class TestExact:
    def test_gamma_one(self, rng):
        assert survival_probability_exact(gen_random(3, 2, 1.0, rng)) == 0.0

    def test_idle(self):
        assert survival_probability_exact(gen_idle(1, 2, 0.5)) == pytest.approx(0.25, abs=1e-15)

    @pytest.mark.parametrize("n,d,gamma", [(1, 6, 0.2), (2, 4, 0.3), (3, 3, 0.1)])
    def test_idle_product_form(self, n, d, gamma):
        expected = 1 - (1 - (1 - gamma) ** d) ** n
        assert survival_probability_exact(gen_idle(n, d, gamma)) == pytest.approx(expected, abs=1e-12)

    def test_matches_enumeration(self, rng):
        import itertools

        for _ in range(10):
            c = gen_random(2, 3, 0.3, rng)
            total = 0.0
            for bits in itertools.product((False, True), repeat=6):
                k = sum(bits)
                if any_survivor_bruteforce(c, ErrorConfig(np.array(bits).reshape(3, 2))):
                    total += 0.3**k * 0.7 ** (6 - k)
            assert survival_probability_exact(c) == pytest.approx(total, abs=1e-12)

    def test_matches_monte_carlo(self):
        rng = np.random.default_rng(21)
        c = gen_random(2, 2, 0.3, rng)
        est = survival_probability(c, 100_000, seed=1)
        assert est.ci[0] <= survival_probability_exact(c) <= est.ci[1]

    def test_cap(self):
        with pytest.raises(CapExceeded):
            survival_probability_exact(gen_idle(3, 7, 0.1))


class TestFactProperty:
    @pytest.mark.parametrize("w,d,gamma", [(1, 5, 0.1), (2, 3, 0.3), (3, 2, 0.2)])
    def test_bound_on_idle_chain(self, w, d, gamma):
        c = gen_idle(w, d, gamma)
        s = PauliString.from_label("Z" * w)
        rng = np.random.default_rng(w * 100 + d)
        trials = 20_000
        hits = sum(not propagate_pauli(c, sample_error_config(c, rng), s)[0].zero for _ in range(trials))
        bound = (1 - gamma) ** (w * d)
        sigma = math.sqrt(bound * (1 - bound) / trials)
        assert hits / trials <= bound + 3 * sigma

    def test_min_weight_known_for_swap_ladder(self):
        from memloss.checks import swap_ladder

        c = swap_ladder(3, 6, 0.2)
        _, trace = propagate_pauli(c, ErrorConfig.none(c), PauliString.from_label("XXXIII"))
        assert trace.min_weight == 3 and set(trace.weights) == {3}
