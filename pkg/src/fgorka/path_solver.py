"""Exact shift-path recovery under a banded smoothing inverse.

The path maximizes ``sum_{|j-k|<=K} A^{-1}[j, k] G[j, k](path)`` subject to
``|path[k] - path[k-1]| <= C``.  Every Gram entry depends only on the summed
steps between its two measurements, so the problem is a K-th order chain.
We run dynamic programming backwards over measurements with a state made of
the ``K - 1`` most recent steps; the next step completes a window of ``K``
steps which fixes all Gram terms pairing the new measurement with its ``K``
predecessors.  Forward tracing then picks, at every measurement, the
smallest step code that keeps the optimum, giving the lexicographically
smallest optimal step sequence under the code order ``(|step|, step)``.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

import numba
import numpy as np

from .shiftops import ShiftPath
from .smoothing import SmoothingSystem, build_system, objective_value

__all__ = [
    "SolverConfig",
    "PathSolution",
    "BudgetExceededError",
    "solve_path",
    "enumerate_paths_bruteforce",
    "step_codes",
    "projected_states",
    "default_budget",
]

DEFAULT_BUDGET_BYTES = 3 * 2**30
DIRECT_CORRELATION_MAX_M = 256


class BudgetExceededError(MemoryError):
    """Raised when the dynamic-programming state space would not fit."""

    def __init__(self, states: int, nbytes: int, budget: int):
        self.states = states
        self.nbytes = nbytes
        self.budget = budget
        super().__init__(
            f"projected state space {states} states ({nbytes} bytes) exceeds "
            f"budget of {budget} bytes")


def default_budget() -> int:
    env = os.environ.get("ORKA_BUDGET_BYTES")
    if env:
        return int(env)
    return DEFAULT_BUDGET_BYTES


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one exact path solve.

    ``tie_break`` is fixed to ``"abs-lex"``: among equal scores the step
    sequence that is lexicographically smallest under ``(|step|, step)`` wins.
    """

    c_max: int
    band_k: int
    mu: float
    tie_break: str = "abs-lex"
    budget_bytes: int | None = None

    def __post_init__(self):
        if int(self.c_max) != self.c_max or self.c_max < 0:
            raise ValueError(f"c_max must be a non-negative integer, got {self.c_max}")
        if int(self.band_k) != self.band_k or self.band_k < 1:
            raise ValueError(f"band_k must be a positive integer, got {self.band_k}")
        if not self.mu >= 0:
            raise ValueError(f"mu must be non-negative, got {self.mu}")
        if self.tie_break != "abs-lex":
            raise ValueError(f"unknown tie_break {self.tie_break!r}")

    @property
    def budget(self) -> int:
        return default_budget() if self.budget_bytes is None else int(self.budget_bytes)


@dataclass(frozen=True)
class PathSolution:
    path: ShiftPath
    value: float
    dp_value: float


def step_codes(c_max: int) -> np.ndarray:
    """Step values ordered by ``(|step|, step)``: 0, -1, 1, -2, 2, ..."""
    out = [0]
    for a in range(1, c_max + 1):
        out += [-a, a]
    return np.array(out, dtype=np.int64)


def _digit_steps(c_max: int, d: int) -> np.ndarray:
    codes = step_codes(c_max)
    if d == 1:
        return codes[:, None]
    return np.array(list(itertools.product(codes, repeat=d)), dtype=np.int64)


def _window(n: int, band_k: int) -> int:
    return min(band_k, n - 1)


def projected_states(c_max: int, band_k: int, n: int, d: int = 1) -> int:
    return (2 * c_max + 1) ** (_window(n, band_k) * d)


def _projected_bytes(c_max: int, band_k: int, n: int, d: int) -> int:
    base = (2 * c_max + 1) ** d
    size = base ** (_window(n, band_k) - 1)
    # decisions for every measurement plus four float/int work vectors
    return n * size + 4 * 8 * size


# --------------------------------------------------------------------------
# Gram tables


def _cross_correlations(data: np.ndarray, lag: int, offsets: np.ndarray) -> np.ndarray:
    """``out[c', o] = <D_c, S_o D_{c-lag}>`` for c = lag..N-1.

    ``offsets`` has shape (P, d); returns shape (N - lag, P).
    """
    d = data.ndim - 1
    dims = data.shape[:d]
    a = data[..., lag:]
    b = data[..., :-lag]
    if d == 1 and dims[0] <= DIRECT_CORRELATION_MAX_M:
        out = np.empty((a.shape[-1], len(offsets)))
        for p, (o,) in enumerate(offsets):
            out[:, p] = np.einsum("mc,mc->c", a, np.roll(b, int(o), axis=0))
        return out
    axes = tuple(range(d))
    fa = np.fft.rfftn(a, axes=axes)
    fb = np.fft.rfftn(b, axes=axes)
    corr = np.fft.irfftn(fa * np.conj(fb), s=dims, axes=axes)
    idx = tuple((offsets[:, ax] % dims[ax]) for ax in range(d))
    return corr[idx].T


def _gram_tables(data, system, c_max, window):
    """Weights ``2 A^{-1}[c, c-i] <D_c, S_o D_{c-i}>`` laid out per measurement.

    Returns ``(tables, width)`` with ``tables[c, i-1, lin(o) + center]``.
    """
    d = data.ndim - 1
    n = data.shape[-1]
    width = 2 * window * c_max + 1
    tables = np.zeros((n, window, width ** d))
    for i in range(1, window + 1):
        reach = i * c_max
        grid = np.arange(-reach, reach + 1)
        if d == 1:
            offsets = grid[:, None]
            lin = grid + window * c_max
        else:
            offsets = np.array(list(itertools.product(grid, grid)), dtype=np.int64)
            lin = (offsets[:, 0] + window * c_max) * width + offsets[:, 1] + window * c_max
        corr = _cross_correlations(data, i, offsets)
        coef = 2.0 * system.band_diagonals[i, i:]
        tables[i:, i - 1, :][:, lin] = coef[:, None] * corr
    return tables, width


# --------------------------------------------------------------------------
# dynamic programming kernel


@numba.njit(cache=True)
def _partial_sums(lin, base, km1):
    """Summed step offset of every window of ``km1`` step codes.

    Code 0 is the zero step, so the entry of a short window padded with
    zero codes equals its own partial sum.
    """
    size = base ** km1
    psum = np.zeros(size, dtype=np.int32)
    prev = 1
    for level in range(km1):
        for top in range(1, base):
            for low in range(prev):
                psum[low + prev * top] = psum[low] + lin[top]
        prev *= base
    return psum


@numba.njit(cache=True)
def _window_weights(tab, center, wsmall, psum, base, levels):
    """``wsmall[s]``: weight of the ``levels`` newest pairings of window ``s``."""
    wsmall[0] = 0.0
    prev = 1
    for level in range(levels):
        row = tab[level]
        for top in range(base - 1, -1, -1):
            for low in range(prev):
                s = low + prev * top
                wsmall[s] = wsmall[low] + row[center + psum[s]]
        prev *= base


@numba.njit(cache=True)
def _backward_stage(tab, lin, center, vnext, vout, dec, wsmall, psum, base, km1, w):
    """One backward relaxation for any step alphabet size ``base``.

    ``vout[t] = max_d wv[d + base t mod size] + vnext[..] + last-pair weight``
    where the oldest step of ``t`` only enters through the last pairing.
    """
    size = vnext.shape[0]
    if km1 == 0:
        best = -np.inf
        arg = 0
        for dgt in range(base):
            q = vnext[0] + tab[0, center + lin[dgt]]
            if q > best:
                best = q
                arg = dgt
        vout[0] = best
        dec[0] = arg
        return
    sub = size // base
    _window_weights(tab, center, wsmall, psum, base, km1 - 1)
    near = tab[km1 - 1]
    last = tab[km1]
    n = sub
    r = 0
    for j in range(n):
        b0 = j * base
        for dgt in range(base):
            low = b0 + dgt
            w[dgt] = wsmall[r + dgt] + near[center + psum[low]] + vnext[low]
        r += base
        if r >= sub:
            r = 0
        for top in range(base):
            add = center + lin[top]
            best = w[0] + last[psum[b0] + add]
            arg = 0
            for dgt in range(1, base):
                q = w[dgt] + last[psum[b0 + dgt] + add]
                gt = q > best
                best = q if gt else best
                arg = dgt if gt else arg
            vout[j + n * top] = best
            dec[j + n * top] = arg


@numba.njit(cache=True)
def _backward_stage3(tab, lin, center, vnext, vout, dec, wsmall, psum, km1):
    """:func:`_backward_stage` unrolled for three step codes (``C = 1``, 1-D)."""
    size = vnext.shape[0]
    sub = size // 3
    _window_weights(tab, center, wsmall, psum, 3, km1 - 1)
    near = tab[km1 - 1]
    last = tab[km1]
    a0 = center + lin[0]
    a1 = center + lin[1]
    a2 = center + lin[2]
    n = sub
    r = 0
    for j in range(n):
        b0 = 3 * j
        p0 = psum[b0]
        p1 = psum[b0 + 1]
        p2 = psum[b0 + 2]
        w0 = wsmall[r] + near[center + p0] + vnext[b0]
        w1 = wsmall[r + 1] + near[center + p1] + vnext[b0 + 1]
        w2 = wsmall[r + 2] + near[center + p2] + vnext[b0 + 2]
        r += 3
        if r >= sub:
            r = 0
        for top in range(3):
            add = a0 if top == 0 else (a1 if top == 1 else a2)
            q0 = w0 + last[p0 + add]
            q1 = w1 + last[p1 + add]
            q2 = w2 + last[p2 + add]
            g = q1 > q0
            best = q1 if g else q0
            arg = 1 if g else 0
            g = q2 > best
            best = q2 if g else best
            arg = 2 if g else arg
            vout[j + n * top] = best
            dec[j + n * top] = arg


@numba.njit(cache=True)
def _trace(dec, base, size):
    n = dec.shape[0]
    codes = np.zeros(n, dtype=np.int64)
    t = 0
    for c in range(1, n):
        dgt = dec[c, t]
        codes[c] = dgt
        t = (dgt + base * t) % size
    return codes


def _run_dp(tables, width, c_max, window, d):
    n = tables.shape[0]
    steps = _digit_steps(c_max, d)
    base = steps.shape[0]
    if d == 1:
        lin = steps[:, 0].copy()
        center = window * c_max
    else:
        lin = steps[:, 0] * width + steps[:, 1]
        center = window * c_max * width + window * c_max
    km1 = window - 1
    size = base ** km1
    reach = int(np.abs(lin).max()) * km1
    psum = _partial_sums(lin, base, km1).astype(np.int8 if reach <= 127 else np.int32)
    dec = np.zeros((n, size), dtype=np.uint8 if base <= 256 else np.int32)
    vnext = np.zeros(size)
    vout = np.empty(size)
    # padded so the unrolled reads stay in bounds when km1 == 1
    wsmall = np.zeros(max(size // base, base))
    w = np.empty(base)
    fast = base == 3 and km1 >= 1
    for c in range(n - 1, 0, -1):
        if fast:
            _backward_stage3(tables[c], lin, center, vnext, vout, dec[c], wsmall, psum, km1)
        else:
            _backward_stage(tables[c], lin, center, vnext, vout, dec[c], wsmall, psum,
                            base, km1, w)
        vnext, vout = vout, vnext
    codes = _trace(dec, base, size)
    path_steps = steps[codes]
    path_steps[0] = 0
    return np.cumsum(path_steps, axis=0), float(vnext[0])


def _check(data):
    data = np.asarray(data, dtype=float)
    if data.ndim not in (2, 3):
        raise ValueError(f"data must have shape (M, N) or (M1, M2, N), got {data.shape}")
    if data.shape[-1] < 2:
        raise ValueError("need at least two measurements")
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite entries")
    return data


def _as_path(shifts, d):
    shifts = np.asarray(shifts, dtype=np.int64)
    if d == 1:
        shifts = shifts.reshape(-1)
    return ShiftPath(shifts, 1)


def solve_path(data, config: SolverConfig, system: SmoothingSystem | None = None) -> PathSolution:
    """Exact maximizer of the banded Gram objective, anchored at ``path[0] = 0``.

    Parameters
    ----------
    data : ndarray, shape (M, N) or (M1, M2, N)
    config : SolverConfig
    system : SmoothingSystem, optional
        Reused when given; must match ``N`` and ``config.mu``.

    Returns
    -------
    PathSolution
        ``value`` is ``objective_value(system, data, path, banded=True)``;
        ``dp_value`` is the internal optimum of the chain (the same quantity
        up to the constant diagonal, sign flipped, and summation order).
    """
    data = _check(data)
    d = data.ndim - 1
    n = data.shape[-1]
    if system is None or system.n != n or system.mu != config.mu or system.band_k != config.band_k:
        system = build_system(n, config.mu, config.band_k)
    if config.c_max == 0:
        path = _as_path(np.zeros((n, d), dtype=np.int64), d)
        value = objective_value(system, data, path, banded=True)
        return PathSolution(path, value, -value - _diag_energy(data, system))
    window = _window(n, config.band_k)
    states = projected_states(config.c_max, config.band_k, n, d)
    nbytes = _projected_bytes(config.c_max, config.band_k, n, d)
    if nbytes > config.budget:
        raise BudgetExceededError(states, nbytes, config.budget)
    tables, width = _gram_tables(data, system, config.c_max, window)
    shifts, dp_value = _run_dp(tables, width, config.c_max, window, d)
    path = _as_path(shifts, d)
    value = objective_value(system, data, path, banded=True)
    return PathSolution(path, value, dp_value)


def _diag_energy(data, system):
    flat = data.reshape(-1, data.shape[-1])
    return float(np.sum(system.band_diagonals[0] * np.sum(flat * flat, axis=0)))


BRUTEFORCE_LIMIT = 10**7


def enumerate_paths_bruteforce(data, config: SolverConfig) -> PathSolution:
    """Exhaustive search over all feasible step sequences (testing oracle).

    Candidates are visited in lexicographic order of their step codes and a
    candidate replaces the incumbent only when strictly better, which matches
    the tie-break of :func:`solve_path`.
    """
    data = _check(data)
    d = data.ndim - 1
    n = data.shape[-1]
    system = build_system(n, config.mu, config.band_k)
    steps = _digit_steps(config.c_max, d)
    count = steps.shape[0] ** (n - 1)
    if count > BRUTEFORCE_LIMIT:
        raise ValueError(f"{count} candidate paths exceed the brute-force limit")
    best = None
    best_value = np.inf
    for combo in itertools.product(range(steps.shape[0]), repeat=n - 1):
        shifts = np.concatenate([np.zeros((1, d), dtype=np.int64),
                                 np.cumsum(steps[list(combo)], axis=0)])
        path = _as_path(shifts, d)
        value = objective_value(system, data, path, banded=True)
        if value < best_value:
            best_value = value
            best = path
    return PathSolution(best, best_value, -best_value - _diag_energy(data, system))
