"""Wall-clock benchmark of plain and coarse-to-fine path recovery."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .driver import FgConfig, track
from .path_solver import SolverConfig, solve_path
from .smoothing import build_system
from .synthgen import SynthSpec, generate, trial_seed

__all__ = ["BenchRow", "run_benchmark", "fit_log_slope", "parse_range"]


@dataclass
class BenchRow:
    method: str
    m: int
    n: int
    c_max: int
    band_k: int
    r: int
    kind: str
    iterations: int
    mean_s: float
    min_s: float
    value: float

    HEADER = ("method", "M", "N", "C", "K", "r", "kind", "iterations",
              "mean_s", "min_s", "value")

    def as_row(self):
        return [self.method, self.m, self.n, self.c_max, self.band_k, self.r, self.kind,
                self.iterations, "%.17g" % self.mean_s, "%.17g" % self.min_s,
                "%.17g" % self.value]


def parse_range(text: str) -> list:
    """``"2:6"`` (inclusive), ``"2:10:2"`` or ``"2,3,7"``."""
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        lo, hi, step = parts
        if step <= 0:
            raise ValueError("range step must be positive")
        return list(range(lo, hi + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


def _time(fn, trials):
    fn()  # warm-up, discarded
    times = []
    out = None
    for _ in range(trials):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, float(np.mean(times)), float(np.min(times))


def run_benchmark(m, n, c_values, k_values, r=3, kind="fourier", trials=1, mu=100.0,
                  compare_plain=False, seed=0, j_up=0, plain_budget=None):
    """Time every ``(C, K)`` combination on one synthetic stack per ``C``.

    Plain runs whose state space exceeds ``plain_budget`` are skipped.
    """
    rows = []
    for ci, c in enumerate(c_values):
        spec = SynthSpec(m=m, n=n, c_truth=c, decimate=1, seed=seed)
        data, _ = generate(spec, rng=np.random.default_rng(trial_seed(seed, ci)))
        for k in k_values:
            system = build_system(n, mu, k)
            cfg = FgConfig(c_max=c, mu=mu, band_k=k, r=r, kind=kind, j_up=j_up)
            res, mean_s, min_s = _time(lambda: track(data, cfg, system), trials)
            rows.append(BenchRow("fg-orka", m, n, c, k, r, kind, len(res.per_level),
                                 mean_s, min_s, res.value))
            if compare_plain:
                scfg = SolverConfig(c, k, mu, budget_bytes=plain_budget)
                try:
                    sol, mean_s, min_s = _time(lambda: solve_path(data, scfg, system), trials)
                except MemoryError:
                    continue
                rows.append(BenchRow("orka", m, n, c, k, r, "none", 1, mean_s, min_s, sol.value))
    return rows


def fit_log_slope(ks, seconds) -> float:
    """Least-squares slope of ``log(seconds)`` against ``K``."""
    ks = np.asarray(ks, dtype=float)
    y = np.log(np.asarray(seconds, dtype=float))
    return float(np.polyfit(ks, y, 1)[0])
