"""Acceptance criteria, each at its stated tolerance and time budget.

Run with ``pytest tests/test_acceptance.py -v -s``; the terminal summary ends
with one ``criterion N: PASS/FAIL`` line per criterion.
"""

import time

import numpy as np
import pytest

from memloss.checks import check_equivalence, run_suite
from memloss.circuit import gen_brickwork
from memloss.cli import main
from memloss.engine import survival_probability
from memloss.harness import (
    SweepConfig,
    estimate_dstar_scaling,
    fit_decay,
    group_rows,
    run_sweep,
)

pytestmark = pytest.mark.acceptance


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def run_check(capsys, suite, *extra):
    code, elapsed = timed(main, ["check", suite, *extra])
    text = capsys.readouterr().out
    print(text)
    return code, text, elapsed


@pytest.mark.criterion(1, "adjoint algebra ground truth")
def test_adjoint_ground_truth(capsys):
    code, text, elapsed = run_check(capsys, "adjoint")
    assert code == 0, text
    assert text.startswith("adjoint: PASS")
    for name in ("depolarize 0.0", "depolarize 0.1", "depolarize 0.5", "depolarize 1.0", "CNOT", "SWAP"):
        assert name in text
    assert elapsed < 1.0, f"{elapsed:.2f}s"


@pytest.mark.criterion(2, "fast survivor decision matches brute force")
def test_oracle_equivalence():
    res, elapsed = timed(check_equivalence, 500, 0)
    print(res.report())
    assert res.passed, res.report()
    assert "500 instances" in res.lines[-1] and res.lines[-1].endswith("0 mismatches")
    assert elapsed < 60, f"{elapsed:.1f}s"


@pytest.mark.criterion(3, "trace distance at most twice survival probability")
def test_lemma1(capsys):
    code, text, elapsed = run_check(capsys, "lemma1", "--instances", "100")
    assert code == 0, text
    assert "100 random circuits" in text
    assert elapsed < 300, f"{elapsed:.1f}s"


@pytest.mark.criterion(4, "weight decay of propagated Paulis")
def test_weight_decay_fact():
    res, elapsed = timed(run_suite, "fact", 100_000, 0)
    print(res.report())
    assert res.passed, res.report()
    assert len(res.lines) == 2 * 3 * 3 * 2
    assert elapsed < 300, f"{elapsed:.1f}s"


# --- criterion 5 -----------------------------------------------------------------

BRICKWORK = SweepConfig(
    family="brickwork",
    n=(8, 16, 32, 64),
    gamma=(0.1,),
    depths=tuple(range(2, 46, 3)),
    trials=10_000,
    seed=0,
    reset_rate=0.1,
    reset_state="zero",
    instances=100,
)
REPETITION = SweepConfig(
    family="repetition",
    n=(5, 9, 17),
    gamma=(0.1,),
    depths=tuple(range(3, 121, 3)),
    trials=10_000,
    seed=0,
)
C5_BUDGET = 30 * 60
_c5_elapsed = []


@pytest.fixture(scope="module")
def brickwork_fits():
    rows, elapsed = timed(run_sweep, BRICKWORK)
    _c5_elapsed.append(elapsed)
    fits = {n: fit_decay(g, epsilon=0.01) for (_, n, _), g in group_rows(rows).items()}
    for n, f in fits.items():
        print(f"brickwork n={n}: slope {f.slope:.4f} r2 {f.r_squared:.4f} d* {f.d_star_hat:.2f}")
    return fits


@pytest.fixture(scope="module")
def repetition_fits():
    rows, elapsed = timed(run_sweep, REPETITION)
    _c5_elapsed.append(elapsed)
    fits = {n: fit_decay(g, epsilon=0.01) for (_, n, _), g in group_rows(rows).items()}
    for n, f in fits.items():
        print(f"repetition n={n}: slope {f.slope:.4f} r2 {f.r_squared:.4f} d* {f.d_star_hat:.2f}")
    return fits


@pytest.mark.criterion(5, "exponential survival decay and polylog d* at desk scale")
@pytest.mark.parametrize("n", BRICKWORK.n)
def test_brickwork_log_linear_tail(brickwork_fits, n):
    fit = brickwork_fits[n]
    assert not fit.saturated
    assert fit.slope < 0
    assert fit.r_squared > 0.9


@pytest.mark.criterion(5, "exponential survival decay and polylog d* at desk scale")
def test_brickwork_dstar_polylog(brickwork_fits):
    rep = estimate_dstar_scaling(brickwork_fits, slack=1.5)
    print(rep)
    assert rep.verdict == "polylog-consistent"


@pytest.mark.criterion(5, "exponential survival decay and polylog d* at desk scale")
@pytest.mark.parametrize("n", REPETITION.n)
def test_repetition_refresh_decays(repetition_fits, n):
    fit = repetition_fits[n]
    assert not fit.saturated
    assert fit.slope < 0
    assert fit.r_squared > 0.9


@pytest.mark.criterion(5, "exponential survival decay and polylog d* at desk scale")
def test_criterion5_budget(brickwork_fits, repetition_fits):
    total = sum(_c5_elapsed)
    print(f"criterion 5 sweeps: {total:.1f}s")
    assert len(_c5_elapsed) == 2
    assert total < C5_BUDGET


# --- criterion 6 -----------------------------------------------------------------

@pytest.mark.criterion(6, "deterministic sweeps and n=256 d=200 throughput")
def test_sweep_byte_identical_across_threads(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        '{"family": "brickwork", "n": [6, 12], "gamma": [0.05, 0.1], "depths": [2, 5, 8, 11],'
        ' "trials": 400, "seed": 7, "reset_rate": 0.1, "reset_state": "magic", "instances": 4}'
    )
    outs = []
    for threads in (1, 8):
        out = tmp_path / f"t{threads}.csv"
        assert main(["sweep", str(cfg), "--out", str(out), "--threads", str(threads)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].count(b"\n") == 1 + 2 * 2 * 4


@pytest.mark.criterion(6, "deterministic sweeps and n=256 d=200 throughput")
def test_survival_throughput():
    c = gen_brickwork(256, 200, 0.1, 0.1, "zero", np.random.default_rng(0))
    est, elapsed = timed(survival_probability, c, 1000, seed=0)
    print(f"n=256 d=200 1e3 trials: {elapsed:.2f}s, p_hat {est.p_hat}")
    assert est.trials == 1000
    assert elapsed < 60, f"{elapsed:.1f}s"


@pytest.mark.criterion(7, "noisy evolution equals enumerated error mixture")
def test_mixture_identity(capsys):
    code, text, elapsed = run_check(capsys, "mixture", "--instances", "20")
    assert code == 0, text
    assert "20 instances" in text
    assert elapsed < 60, f"{elapsed:.1f}s"
