"""Coarse-to-fine gridless tracking.

The full path is recovered digit by digit.  The data is first brought down
``L`` times by a resampling pair and artificially brought up ``J`` times.
The coarsest level is solved with the small per-step bound ``floor(r/2)``.
Every finer level is then pre-aligned with the coarser path scaled by ``r``
and only a correction path with steps in ``[-floor(r/2), floor(r/2)]`` is
solved.  The path of the finest level divided by ``r^J`` lives on a grid of
spacing ``r^-J``.

Sign convention: measurements follow ``D_k ~ S_{path_k}(U)``, so aligning a
level with a coarse path means applying ``S_{-r * coarse}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .path_solver import SolverConfig, solve_path
from .resampling import make_pair
from .shiftops import ShiftPath, shift_apply
from .smoothing import SmoothingSystem, build_system, objective_value, solve_object

__all__ = [
    "FgConfig",
    "LevelRecord",
    "TrackResult",
    "compute_levels",
    "coverage",
    "split_path",
    "digit_decompose",
    "compose_digits",
    "pad_to_multiple",
    "track",
    "track_multi",
    "reconstruct",
]

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# level arithmetic


def _half(r: int) -> int:
    return r // 2


def compute_levels(c_max, r: int, j_up: int = 0, rounding: str = "up") -> int:
    """Number of downsampling levels ``L`` for bound ``c_max``.

    ``L + 1 = log_r(C (r - 1) / floor(r/2) + r^-J)``, rounded to an integer
    and clamped at zero.  The comparison is carried out in exact integer
    arithmetic, so thresholds that are exact powers of ``r`` never suffer
    from floating-point logarithms.
    """
    r, j_up = int(r), int(j_up)
    if r < 2:
        raise ValueError("r must be >= 2")
    if j_up < 0:
        raise ValueError("J must be >= 0")
    if rounding not in ("up", "down"):
        raise ValueError(f"rounding must be 'up' or 'down', got {rounding!r}")
    c = Fraction(c_max)
    if c <= 0:
        raise ValueError("C must be positive")
    h = _half(r)
    # r^(L+1) compared with target = C (r-1)/h + r^-J, scaled by h r^J
    rhs = c * (r - 1) * r**j_up + h

    def lhs(level):
        return Fraction(h * r ** (level + 1 + j_up))

    if rounding == "up":
        level = -1
        while lhs(level) < rhs:
            level += 1
        return max(level, 0)
    level = 0
    if lhs(0) > rhs:
        return 0
    while lhs(level + 1) <= rhs:
        level += 1
    return level


def coverage(r: int, levels: int, j_up: int = 0) -> Fraction:
    """Largest per-step bound reachable with ``levels + j_up + 1`` digits."""
    h = _half(r)
    return Fraction(h) * (Fraction(r) ** (levels + 1) - Fraction(r) ** (-j_up)) / (r - 1)


# --------------------------------------------------------------------------
# digits


def _round_half_even(num: np.ndarray, den: int) -> np.ndarray:
    """Nearest integer of ``num / den`` with ties to even, integer arithmetic."""
    num = np.asarray(num, dtype=np.int64)
    q, rem = np.divmod(num, den)
    twice = 2 * rem
    up = (twice > den) | ((twice == den) & (q % 2 == 1))
    return q + up


def split_path(path, r: int):
    """Split an integral path into ``r * coarse + diff``.

    Coarse steps are the nearest integers of ``step / r`` so the remainder
    steps lie in ``[-floor(r/2), floor(r/2)]``.  Both parts start at zero.
    """
    shifts = np.asarray(path.shifts if isinstance(path, ShiftPath) else path, dtype=np.int64)
    shifts = shifts - shifts[0]
    steps = np.diff(shifts, axis=0)
    coarse_steps = _round_half_even(steps, r)
    zero = np.zeros((1,) + shifts.shape[1:], dtype=np.int64)
    coarse = np.concatenate([zero, np.cumsum(coarse_steps, axis=0)])
    return coarse, shifts - r * coarse


def digit_decompose(path, r: int, n_digits: int) -> np.ndarray:
    """Digit paths ``d_0..d_{n-1}`` with ``path = sum_i r^i d_i``.

    Extraction runs top-down: the top digit takes the nearest integer of the
    remaining steps over ``r^(n-1)``, the next one of the remainder over
    ``r^(n-2)``, and so on.  For odd ``r`` and representable paths this is the
    balanced base-``r`` expansion of every step.
    """
    shifts = np.asarray(path.shifts if isinstance(path, ShiftPath) else path, dtype=np.int64)
    shifts = shifts - shifts[0]
    rest = np.diff(shifts, axis=0)
    digits = np.zeros((n_digits,) + shifts.shape, dtype=np.int64)
    for i in range(n_digits - 1, -1, -1):
        scale = r**i
        step = _round_half_even(rest, scale) if i else rest.copy()
        rest = rest - scale * step
        digits[i, 1:] = np.cumsum(step, axis=0)
    return digits


def compose_digits(digits: np.ndarray, r: int) -> np.ndarray:
    out = np.zeros(digits.shape[1:], dtype=np.int64)
    for i in range(digits.shape[0] - 1, -1, -1):
        out = r * out + digits[i]
    return out


# --------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class FgConfig:
    """Parameters of a coarse-to-fine run.

    Attributes
    ----------
    c_max : int
        Per-step bound of the full path at the original resolution.
    mu : float
        Smoothing weight.
    band_k : int
        Half-width of the banded inverse.
    r : int
        Resampling factor.
    kind : str
        ``"wavelet"``, ``"fourier"`` or ``"optimal"``.
    j_up : int
        Number of artificial upsampling levels.
    l_rounding : str
        ``"up"`` or ``"down"``.
    filter_order : int
        Wavelet tap count.
    """

    c_max: int
    mu: float
    band_k: int
    r: int = 2
    kind: str = "fourier"
    j_up: int = 0
    l_rounding: str = "up"
    filter_order: int = 4
    budget_bytes: int | None = None

    def __post_init__(self):
        if int(self.c_max) != self.c_max or self.c_max < 1:
            raise ValueError(f"c_max must be a positive integer, got {self.c_max}")
        if self.r < 2:
            raise ValueError("r must be >= 2")
        if self.kind not in ("wavelet", "fourier", "optimal"):
            raise ValueError(f"unknown resampling kind {self.kind!r}")
        if self.kind == "wavelet" and self.r != 2:
            raise ValueError("wavelet resampling needs r = 2")
        if self.j_up < 0:
            raise ValueError("j_up must be >= 0")
        if self.l_rounding not in ("up", "down"):
            raise ValueError("l_rounding must be 'up' or 'down'")
        if self.band_k < 1:
            raise ValueError("band_k must be >= 1")
        if not self.mu >= 0:
            raise ValueError("mu must be non-negative")

    @property
    def levels(self) -> int:
        return compute_levels(self.c_max, self.r, self.j_up, self.l_rounding)

    def coarse_bound(self) -> int:
        """Per-step bound of the coarsest solve.

        ``floor(r/2)`` (capped at ``C``), unless the level count was clamped at
        zero and the digits cannot reach ``C``; then the true ``C`` is used.
        """
        if self.levels == 0 and coverage(self.r, 0, self.j_up) < self.c_max:
            return int(self.c_max)
        return min(int(self.c_max), _half(self.r))


@dataclass
class LevelRecord:
    """Outcome of one solve; ``level`` counts down from ``L`` to ``-J``."""

    level: int
    path: np.ndarray
    digit: np.ndarray
    objective: float
    projection_residual: float | None

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "path": self.path.tolist(),
            "digit": self.digit.tolist(),
            "objective": self.objective,
            "projection_residual": self.projection_residual,
        }


@dataclass
class TrackResult:
    """Recovered path on the ``r^-J`` grid, object stack and per-level records.

    ``object`` has ``r^J`` times the padded length per spatial axis and is
    expressed in the object frame, i.e. ``D ~ S_{path}(object)`` at the finest
    level.  ``pad`` lists the zeros appended per axis.
    """

    path: ShiftPath
    object: np.ndarray
    value: float
    per_level: list = field(default_factory=list)
    levels: int = 0
    j_up: int = 0
    r: int = 2
    pad: tuple = ()

    def path_at(self, level: int) -> ShiftPath:
        """Path of ``level`` (``-J <= level <= L``) on the original-resolution scale."""
        for rec in self.per_level:
            if rec.level == level:
                if level >= 0:
                    return ShiftPath(rec.path * self.r**level, 1)
                return ShiftPath(rec.path, self.r ** (-level))
        raise KeyError(level)

    def digits(self) -> np.ndarray:
        """Digit paths ordered from the finest level upwards."""
        return np.stack([rec.digit for rec in reversed(self.per_level)])


# --------------------------------------------------------------------------
# pipeline


def pad_to_multiple(data: np.ndarray, multiple: int):
    """Zero-pad every spatial axis at its high end to a multiple of ``multiple``."""
    d = data.ndim - 1
    pads = tuple((-data.shape[ax]) % multiple for ax in range(d))
    if any(pads):
        width = [(0, p) for p in pads] + [(0, 0)]
        data = np.pad(data, width)
    return data, pads


def _level_pairs(kind, r, data, filter_order, cache):
    d = data.ndim - 1
    pairs = []
    for ax in range(d):
        m = data.shape[ax]
        if kind == "optimal":
            rows = np.moveaxis(data, ax, 0).reshape(m, -1)
            pairs.append(make_pair("optimal", m, r, data=rows))
            continue
        key = (kind, m, r, filter_order)
        if key not in cache:
            cache[key] = make_pair(kind, m, r, filter_order=filter_order)
        pairs.append(cache[key])
    return pairs


def _up_pairs(kind, r, data, filter_order, cache):
    # the adaptive design targets downsampling; upsampling reuses Fourier
    up_kind = "fourier" if kind == "optimal" else kind
    d = data.ndim - 1
    pairs = []
    for ax in range(d):
        m = data.shape[ax] * r
        key = (up_kind, m, r, filter_order)
        if key not in cache:
            cache[key] = make_pair(up_kind, m, r, filter_order=filter_order)
        pairs.append(cache[key])
    return pairs


def _down(pairs, data):
    out = data
    for ax, p in enumerate(pairs):
        out = p.down(out, axis=ax)
    return out


def _up(pairs, data):
    out = data
    for ax, p in enumerate(pairs):
        out = p.up(out, axis=ax)
    return out


def _residual(pairs, data) -> float:
    return float(np.linalg.norm(data - _up(pairs, _down(pairs, data))))


def _as_shift(arr, d):
    return arr.reshape(-1) if d == 1 else arr


def track(data, config: FgConfig, system: SmoothingSystem | None = None) -> TrackResult:
    """Run the coarse-to-fine tracker.

    Parameters
    ----------
    data : ndarray, shape (M, N) or (M1, M2, N)
    config : FgConfig
    system : SmoothingSystem, optional
        Reused when it matches ``N``, ``mu`` and ``band_k``.

    Returns
    -------
    TrackResult
    """
    data = np.asarray(data, dtype=float)
    if data.ndim not in (2, 3):
        raise ValueError(f"data must have shape (M, N) or (M1, M2, N), got {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite entries")
    n = data.shape[-1]
    d = data.ndim - 1
    r = config.r
    levels = config.levels
    data, pads = pad_to_multiple(data, r**levels)
    if system is None or system.n != n or system.mu != config.mu or system.band_k != config.band_k:
        system = build_system(n, config.mu, config.band_k)

    cache: dict = {}
    ladder = {0: data}
    residuals: dict = {}
    for k in range(1, levels + 1):
        pairs = _level_pairs(config.kind, r, ladder[k - 1], config.filter_order, cache)
        ladder[k] = _down(pairs, ladder[k - 1])
        residuals[k - 1] = _residual(pairs, ladder[k - 1])
    for k in range(-1, -config.j_up - 1, -1):
        pairs = _up_pairs(config.kind, r, ladder[k + 1], config.filter_order, cache)
        ladder[k] = _up(pairs, ladder[k + 1])
        residuals[k] = _residual(pairs, ladder[k])

    h = _half(r)
    coarse_c = config.coarse_bound()
    records = []
    sol = solve_path(ladder[levels], SolverConfig(coarse_c, config.band_k, config.mu,
                                                  budget_bytes=config.budget_bytes), system)
    current = np.asarray(sol.path.shifts).reshape(n, d)
    records.append(LevelRecord(levels, _as_shift(current.copy(), d), _as_shift(current.copy(), d), sol.value,
                               residuals.get(levels)))
    log.debug("level %d solved, objective %.6g", levels, sol.value)
    diff_cfg = SolverConfig(h, config.band_k, config.mu, budget_bytes=config.budget_bytes)
    for k in range(levels - 1, -config.j_up - 1, -1):
        pre = r * current
        aligned = shift_apply(ladder[k], _as_shift(-pre, d))
        sol = solve_path(aligned, diff_cfg, system)
        diff = np.asarray(sol.path.shifts).reshape(n, d)
        current = pre + diff
        records.append(LevelRecord(k, _as_shift(current.copy(), d), _as_shift(diff, d), sol.value, residuals.get(k)))
        log.debug("level %d solved, objective %.6g", k, sol.value)

    finest = ladder[-config.j_up]
    final = ShiftPath(_as_shift(current, d), 1)
    # solving on the full path equals solving on the pre-aligned level and
    # shifting back, since every shift is a permutation
    u = solve_object(system, finest, final)
    value = objective_value(system, finest, final, banded=True)
    return TrackResult(
        path=ShiftPath(_as_shift(current, d), r**config.j_up),
        object=u,
        value=value,
        per_level=records,
        levels=levels,
        j_up=config.j_up,
        r=r,
        pad=pads,
    )


def reconstruct(result: TrackResult, kind: str = "fourier", filter_order: int = 4) -> np.ndarray:
    """``S_path(U)`` brought back to the original (padded) resolution.

    ``kind`` must match the run; the adaptive kind upsampled with Fourier.
    """
    u = result.object
    d = u.ndim - 1
    out = shift_apply(u, ShiftPath(result.path.shifts, 1))
    up_kind = "fourier" if kind == "optimal" else kind
    for _ in range(result.j_up):
        pairs = [make_pair(up_kind, out.shape[ax], result.r, filter_order=filter_order)
                 for ax in range(d)]
        out = _down(pairs, out)
    return out


def track_multi(data, config: FgConfig, count: int, per_object_mu=None) -> list:
    """Extract ``count`` objects one after another by peeling.

    Each round tracks the current residual and subtracts ``S_path(U)``
    brought back to the original grid.  ``per_object_mu`` optionally gives a
    smoothing weight per round.
    """
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    if per_object_mu is not None and len(per_object_mu) != count:
        raise ValueError("per_object_mu needs one entry per object")
    data = np.asarray(data, dtype=float)
    shape = data.shape
    residual = data.copy()
    results = []
    for i in range(count):
        cfg = config
        if per_object_mu is not None:
            cfg = FgConfig(**{**config.__dict__, "mu": float(per_object_mu[i])})
        res = track(residual, cfg)
        comp = reconstruct(res, cfg.kind, cfg.filter_order)
        comp = comp[tuple(slice(0, s) for s in shape[:-1])]
        residual = residual - comp
        results.append(res)
        log.debug("object %d extracted, residual norm %.6g", i, np.linalg.norm(residual))
    return results
