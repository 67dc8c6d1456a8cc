"""Compare the compiled and pure-Python survival kernels.

Error configurations are drawn up front so only the kernel is timed. Both
backends must reach the same decision on every configuration.

    python benchmarks/bench_backends.py --trials 200
"""

import argparse
import time

import numpy as np

from memloss import backend
from memloss.circuit import gen_brickwork
from memloss.engine import SurvivalEngine

CASES = [
    # n, depth, gamma, reset_rate, reset_state
    (16, 12, 0.1, 0.1, "zero"),
    (64, 15, 0.1, 0.1, "zero"),
    (24, 8, 0.1, 0.02, "magic"),
    (256, 200, 0.1, 0.1, "zero"),
]


def bench_case(n, depth, gamma, reset_rate, state, trials, seed=0):
    c = gen_brickwork(n, depth, gamma, reset_rate, state, np.random.default_rng(seed))
    rng = np.random.default_rng(seed + 1)
    configs = [rng.random((depth, n)) < gamma for _ in range(trials)]
    timings, decisions = {}, {}
    for name in backend.BACKENDS:
        engine = SurvivalEngine(c, name)
        t0 = time.perf_counter()
        decisions[name] = [engine.any_survivor(f) for f in configs]
        timings[name] = (time.perf_counter() - t0) / trials
    if len({tuple(d) for d in decisions.values()}) != 1:
        raise RuntimeError(f"backends disagree on n={n} d={depth} {state}")
    return timings, float(np.mean(next(iter(decisions.values()))))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    names = list(backend.BACKENDS)
    if "compiled" not in names:
        print("compiled kernel not built; timing the python backend only")
    head = f"{'n':>5} {'depth':>5} {'reset':>6} {'p_hat':>6} " + " ".join(f"{k + ' ms':>12}" for k in names)
    if len(names) == 2:
        head += f" {'speedup':>8}"
    print(head)
    for n, depth, gamma, rate, state in CASES:
        t, p = bench_case(n, depth, gamma, rate, state, args.trials, args.seed)
        line = f"{n:>5} {depth:>5} {state:>6} {p:>6.3f} " + " ".join(f"{1e3 * t[k]:>12.3f}" for k in names)
        if len(names) == 2:
            line += f" {t['python'] / t['compiled']:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
