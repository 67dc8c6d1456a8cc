"""Depth sweeps, exponential decay fits, d* scaling checks and plots."""

from __future__ import annotations

import csv
import json
import math
import threading
import zlib
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from memloss.circuit import (
    Circuit,
    gen_brickwork,
    gen_idle,
    gen_repetition_refresh,
    resolve_state,
)
from memloss.engine import survival_probability
from memloss.stats import wilson_interval

FAMILIES = ("idle", "brickwork", "repetition")
CSV_COLUMNS = ("family", "n", "gamma", "depth", "trials", "survivors", "p_hat", "ci_lo", "ci_hi", "seed")


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    family: str
    n: tuple[int, ...]
    gamma: tuple[float, ...]
    depths: tuple[int, ...]
    trials: int = 10_000
    seed: int = 0
    confidence: float = 0.99
    reset_rate: float = 0.0
    reset_state: object = "zero"
    instances: int = 1
    out: str | None = None
    plot: str | None = None

    def __post_init__(self):
        for name in ("n", "gamma", "depths"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not isinstance(self.reset_state, str):
            object.__setattr__(self, "reset_state", tuple(self.reset_state))
        problems = self.problems()
        if problems:
            raise ValueError("invalid sweep config: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.family not in FAMILIES:
            out.append(f"unknown family {self.family!r}")
        if any(b <= a for a, b in zip(self.depths, self.depths[1:])):
            out.append("depth grid must be strictly increasing")
        if any(d < 0 for d in self.depths):
            out.append("depths must be non-negative")
        if self.trials < 100:
            out.append("trials must be >= 100")
        if not 1 <= self.instances <= self.trials:
            out.append("instances must lie in [1, trials]")
        if not 0 < self.confidence < 1:
            out.append("confidence must lie in (0, 1)")
        if any(not 0 <= g <= 1 for g in self.gamma):
            out.append("gamma values must lie in [0, 1]")
        return out

    @classmethod
    def from_dict(cls, d: dict) -> SweepConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> SweepConfig:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class SweepRow:
    family: str
    n: int
    gamma: float
    depth: int
    trials: int
    survivors: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    seed: int

    @property
    def key(self):
        return (self.family, self.n, self.gamma, self.depth)


def point_seed(master: int, family: str, n: int, gamma: float) -> int:
    """Seed shared by every depth of one ``(family, n, gamma)`` series."""
    tag = zlib.crc32(f"{family}|{n}|{gamma!r}".encode())
    return int(np.random.SeedSequence([master, tag]).generate_state(1, np.uint64)[0] >> 1)


def family_circuit(cfg: SweepConfig, n: int, gamma: float, depth: int, seed: int, instance: int = 0) -> Circuit:
    """Depth-``depth`` member of a nested family (deeper members extend shallower ones)."""
    if cfg.family == "idle":
        return gen_idle(n, depth, gamma)
    if cfg.family == "brickwork":
        rng = np.random.default_rng([seed, 1, instance])
        return gen_brickwork(n, depth, gamma, cfg.reset_rate, resolve_state(cfg.reset_state), rng)
    if cfg.family == "repetition":
        return gen_repetition_refresh(n, math.ceil(depth / 3), gamma).prefix(depth)
    raise ValueError(f"unknown family {cfg.family!r}")


def instance_trials(trials: int, instances: int) -> list[int]:
    """Split ``trials`` as evenly as possible over circuit instances."""
    base, extra = divmod(trials, instances)
    return [base + (i < extra) for i in range(instances)]


def instance_seed(seed: int, instance: int) -> int:
    """Trial seed for one circuit instance; instance 0 reuses the point seed."""
    if instance == 0:
        return seed
    return int(np.random.SeedSequence([seed, 2, instance]).generate_state(1, np.uint64)[0] >> 1)


def estimate_point(cfg: SweepConfig, circuits: Sequence[Circuit], depth: int, seed: int) -> SweepRow:
    """Pool Monte Carlo counts over circuit instances at one depth."""
    survivors = 0
    for i, (c, t) in enumerate(zip(circuits, instance_trials(cfg.trials, cfg.instances))):
        if t:
            survivors += survival_probability(c.prefix(depth), t, seed=instance_seed(seed, i)).survivors
    c0 = circuits[0]
    lo, hi = wilson_interval(survivors, cfg.trials, cfg.confidence)
    return SweepRow(cfg.family, c0.n, c0.gamma, depth, cfg.trials, survivors, survivors / cfg.trials, lo, hi, seed)


def write_csv(rows: Iterable[SweepRow], path) -> None:
    rows = sorted(rows, key=lambda r: r.key)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([
                r.family, r.n, repr(float(r.gamma)), r.depth, r.trials, r.survivors,
                repr(float(r.p_hat)), repr(float(r.ci_lo)), repr(float(r.ci_hi)), r.seed,
            ])


def read_csv(path) -> list[SweepRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            SweepRow(
                d["family"], int(d["n"]), float(d["gamma"]), int(d["depth"]), int(d["trials"]),
                int(d["survivors"]), float(d["p_hat"]), float(d["ci_lo"]), float(d["ci_hi"]), int(d["seed"]),
            )
            for d in reader
        ]


def run_sweep(cfg: SweepConfig, out=None, threads: int = 1) -> list[SweepRow]:
    """Run every grid point not already present in ``out`` and rewrite ``out``.

    Rows are merged in canonical order, so the file depends only on the
    config, not on ``threads`` or completion order.
    """
    out = out if out is not None else cfg.out
    done: dict = {}
    if out is not None and Path(out).exists():
        done = {r.key: r for r in read_csv(out)}
    work = []
    for n in cfg.n:
        for gamma in cfg.gamma:
            seed = point_seed(cfg.seed, cfg.family, n, float(gamma))
            for depth in cfg.depths:
                if (cfg.family, n, float(gamma), depth) not in done:
                    work.append((n, float(gamma), depth, seed))
    lock = threading.Lock()
    deepest = max(cfg.depths, default=0)
    series: dict = {}

    def circuits(n, gamma, seed):
        # deepest member per instance; shallower depths are prefixes
        with lock:
            key = (n, gamma)
            if key not in series:
                series[key] = [family_circuit(cfg, n, gamma, deepest, seed, i) for i in range(cfg.instances)]
            return series[key]

    def unit(item):
        n, gamma, depth, seed = item
        row = estimate_point(cfg, circuits(n, gamma, seed), depth, seed)
        with lock:
            done[row.key] = row
            if out is not None:
                write_csv(done.values(), out)
        return row

    if threads <= 1:
        for item in work:
            unit(item)
    else:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(unit, work))
    rows = sorted(done.values(), key=lambda r: r.key)
    if out is not None:
        write_csv(rows, out)
    return rows


# --- fits ------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    d_star_hat: float
    saturated: bool = False
    depths: tuple[int, ...] = field(default=())

    @property
    def infinite(self) -> bool:
        return math.isinf(self.d_star_hat)


def fit_decay(
    rows: Sequence[SweepRow],
    epsilon: float = 0.01,
    transient: float = 0.9,
    min_rows: int = 4,
) -> DecayFit:
    """Least-squares line through ``(depth, log p_hat)`` on the post-transient tail.

    The tail starts at the first depth with ``p_hat < transient``; if no depth
    gets there the whole series is used. Rows without survivors are skipped.
    """
    rows = sorted(rows, key=lambda r: r.depth)
    if not rows:
        raise FitError("no rows to fit")
    start = next((i for i, r in enumerate(rows) if r.p_hat < transient), 0)
    tail = rows[start:]
    usable = [r for r in tail if r.survivors > 0 and r.p_hat > 0]
    if not usable:
        first_zero = next(r.depth for r in tail if r.survivors == 0)
        return DecayFit(-math.inf, math.nan, 0.0, float(first_zero), saturated=True)
    if len(usable) < min_rows:
        raise FitError(f"only {len(usable)} usable rows, need {min_rows}")
    d = np.array([r.depth for r in usable], dtype=float)
    y = np.log([r.p_hat for r in usable])
    slope, intercept = np.polyfit(d, y, 1)
    resid = y - (slope * d + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r2 = 1.0 if ss_tot <= 1e-300 else min(1.0, max(0.0, 1 - ss_res / ss_tot))
    if slope < 0:
        d_star = (math.log(epsilon) - intercept) / slope
    else:
        d_star = math.inf
    return DecayFit(float(slope), float(intercept), r2, float(d_star), False, tuple(int(v) for v in d))


@dataclass(frozen=True)
class ScalingReport:
    ns: tuple[int, ...]
    d_stars: tuple[float, ...]
    ratios: tuple[float, ...]
    bounds: tuple[float, ...]
    verdict: str


def estimate_dstar_scaling(fits: dict[int, DecayFit], slack: float = 1.5) -> ScalingReport:
    """Ratio test of fitted d* against squared-logarithmic growth in ``n``.

    Consecutive grid values ``n1 < n2`` pass when
    ``d*(n2) / d*(n1) <= (log n2 / log n1)**2 * slack``. Hidden constants are
    unknown, so this is a consistency check only.
    """
    if len(fits) < 3:
        raise FitError("need fits for at least 3 values of n")
    ns = tuple(sorted(fits))
    if any(fits[n] is None for n in ns):
        raise FitError("missing fit")
    ds = tuple(fits[n].d_star_hat for n in ns)
    if any(not math.isfinite(v) or v <= 0 for v in ds):
        raise FitError("every fit needs a finite positive d*")
    if ns[0] < 2:
        raise FitError("ratio test needs n >= 2")
    ratios, bounds = [], []
    for (n1, d1), (n2, d2) in zip(zip(ns, ds), zip(ns[1:], ds[1:])):
        ratios.append(d2 / d1)
        bounds.append((math.log(n2) / math.log(n1)) ** 2 * slack)
    ok = all(r <= b for r, b in zip(ratios, bounds))
    return ScalingReport(ns, ds, tuple(ratios), tuple(bounds), "polylog-consistent" if ok else "inconsistent")


def group_rows(rows: Iterable[SweepRow]) -> dict:
    groups = defaultdict(list)
    for r in rows:
        groups[(r.family, r.n, r.gamma)].append(r)
    return dict(sorted(groups.items()))


def fit_report(rows: Sequence[SweepRow], epsilon: float = 0.01, slack: float = 1.5) -> dict:
    """Fits per series and a scaling verdict per ``(family, gamma)``; JSON-ready."""
    fits = {}
    series = []
    for (family, n, gamma), group in group_rows(rows).items():
        entry = {"family": family, "n": n, "gamma": gamma}
        try:
            fit = fit_decay(group, epsilon)
            fits[(family, n, gamma)] = fit
            entry.update({k: v for k, v in asdict(fit).items() if k != "depths"})
        except FitError as exc:
            entry["error"] = str(exc)
        series.append(entry)
    scaling = []
    by_fam = defaultdict(dict)
    for (family, n, gamma), fit in fits.items():
        by_fam[(family, gamma)][n] = fit
    for (family, gamma), per_n in sorted(by_fam.items()):
        entry = {"family": family, "gamma": gamma}
        try:
            rep = estimate_dstar_scaling(per_n, slack)
            entry.update(asdict(rep))
        except FitError as exc:
            entry["error"] = str(exc)
        scaling.append(entry)
    return {"epsilon": epsilon, "series": series, "scaling": scaling}


# --- plots ---------------------------------------------------------------------------

def emit_plot(rows: Sequence[SweepRow], kind: str, path, epsilon: float = 0.01) -> None:
    """Write an SVG plot; identical input gives identical bytes."""
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib.figure import Figure

    if not rows:
        raise ValueError("nothing to plot")
    with matplotlib.rc_context({"svg.hashsalt": "memloss", "svg.fonttype": "path"}):
        fig = Figure(figsize=(6, 4))
        ax = fig.add_subplot()
        if kind == "survival-vs-depth":
            for (family, n, gamma), group in group_rows(rows).items():
                group = sorted((r for r in group if r.p_hat > 0), key=lambda r: r.depth)
                if not group:
                    continue
                d = [r.depth for r in group]
                ax.plot(d, [r.p_hat for r in group], marker="o", ms=3, label=f"{family} n={n} $\\gamma$={gamma:g}")
                ax.fill_between(d, [max(r.ci_lo, 1e-12) for r in group], [r.ci_hi for r in group], alpha=0.25)
            ax.set_yscale("log")
            ax.set_xlabel("depth")
            ax.set_ylabel("survival probability")
        elif kind == "dstar-vs-n":
            rep = fit_report(rows, epsilon)
            by = defaultdict(list)
            for s in rep["series"]:
                if "d_star_hat" in s and math.isfinite(s["d_star_hat"]):
                    by[(s["family"], s["gamma"])].append((s["n"], s["d_star_hat"]))
            for (family, gamma), pts in sorted(by.items()):
                pts.sort()
                ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{family} $\\gamma$={gamma:g}")
            ax.set_xscale("log", base=2)
            ax.set_xlabel("n")
            ax.set_ylabel(f"fitted d* ($\\epsilon$={epsilon:g})")
        else:
            raise ValueError(f"unknown plot kind {kind!r}")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
