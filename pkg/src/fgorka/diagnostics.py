"""One-level error measurements for the coarse-to-fine tracker.

Replacing a path ``lam = r * lam_c + diff`` on data ``D`` by ``lam_c`` on the
downsampled data changes the Gram objective ``<A^-1, G>``.  The change is
split in two: a grid part (``lam`` versus ``r * lam_c`` on ``D``) and a
scaling part (``r * lam_c`` on ``D`` versus ``lam_c`` on ``R^T D``).  This
module evaluates all three objective values and the a-priori bounds for
each part.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .resampling import downsample_stack, projection_residual
from .shiftops import as_path
from .smoothing import SmoothingSystem, gram_matrix

__all__ = [
    "LevelErrorReport",
    "grid_error_weight",
    "grid_error_bound",
    "level_discrepancy",
    "fit_bound_constant",
    "triangle_holds",
]


def grid_error_weight(j: int, k: int, l: int, m: int, r: int) -> float:
    """Frequency weight of the sub-grid error between measurements ``j`` and ``k``.

    ``exp(-|j-k|) sin^2(pi l |j-k| floor(r/2) / M)`` while the sine argument
    stays within a quarter period, ``exp(-|j-k|)`` beyond, mirrored for
    ``l > M/2``.
    """
    if not 0 <= l < m:
        raise ValueError(f"l must satisfy 0 <= l < M, got {l}")
    if 2 * l > m:
        l = m - l
    gap = abs(j - k)
    h = r // 2
    decay = np.exp(-gap)
    if 2 * l * gap * h <= m:
        return float(decay * np.sin(np.pi * l * gap * h / m) ** 2)
    return float(decay)


def _weight_table(n: int, m: int, r: int) -> np.ndarray:
    """``W[g, l] = grid_error_weight`` for gap ``g`` and bin ``l``."""
    gap = np.arange(n)[:, None]
    l = np.arange(m)[None, :]
    l = np.minimum(l, m - l)
    h = r // 2
    decay = np.exp(-gap.astype(float))
    inside = 2 * l * gap * h <= m
    arg = np.pi * l * gap * h / m
    return np.where(inside, decay * np.sin(arg) ** 2, decay * np.ones_like(arg))


def grid_error_bound(data, r: int) -> float:
    """``sum_{j,k} 4 sum_l |F(D_k)_l|^2 L(j,k,l)`` with a unitary transform."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("grid bound is defined for (M, N) stacks")
    m, n = data.shape
    power = np.abs(np.fft.fft(data, axis=0, norm="ortho")) ** 2
    table = _weight_table(n, m, r)
    # per column k: sum_g count_k(g) * sum_l W[g, l] |F D_k|_l^2
    per_gap = table @ power
    total = 0.0
    idx = np.arange(n)
    for k in range(n):
        gaps = np.abs(idx - k)
        total += float(np.sum(per_gap[gaps, k]))
    return 4.0 * total


@dataclass
class LevelErrorReport:
    """Observed one-level discrepancy, its two parts and the bound terms.

    ``full_value``, ``grid_value`` and ``coarse_value`` are the Gram
    objectives on the fine path, the scaled coarse path, and the coarse path
    on downsampled data.
    """

    level: int
    full_value: float
    grid_value: float
    coarse_value: float
    observed_discrepancy: float
    diff_term: float
    scale_term: float
    grid_error_bound: float
    projection_term: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _inner(system: SmoothingSystem, data, shifts) -> float:
    return float(np.sum(system.inverse() * gram_matrix(data, shifts)))


def level_discrepancy(data, pair, system: SmoothingSystem, path_fine, path_coarse,
                      level: int = 0) -> LevelErrorReport:
    """Measure the one-level objective change for ``path_fine = r path_coarse + diff``.

    Parameters
    ----------
    data : ndarray, shape (M, N)
    pair : ResamplingPair
    system : SmoothingSystem
        Needs its dense inverse.
    path_fine, path_coarse : ShiftPath or int arrays
    level : int
        Label copied into the report.
    """
    data = np.asarray(data, dtype=float)
    fine = np.asarray(as_path(path_fine).shifts)
    coarse = np.asarray(as_path(path_coarse).shifts)
    if fine.shape != coarse.shape or fine.shape[0] != data.shape[-1]:
        raise ValueError("paths must both have one entry per measurement")
    r = pair.r
    diff = fine - r * coarse
    if diff.shape[0] > 1 and np.abs(np.diff(diff, axis=0)).max() > r // 2:
        raise ValueError("path pair infeasible: correction steps exceed floor(r/2)")
    a = _inner(system, data, fine)
    b = _inner(system, data, r * coarse)
    c = _inner(system, downsample_stack(pair, data), coarse)
    bound = grid_error_bound(data, r) if data.ndim == 2 else float("nan")
    proj = float(np.linalg.norm(system.inverse())) * projection_residual(pair, data)
    return LevelErrorReport(
        level=level,
        full_value=a,
        grid_value=b,
        coarse_value=c,
        observed_discrepancy=abs(a - c),
        diff_term=abs(a - b),
        scale_term=abs(b - c),
        grid_error_bound=bound,
        projection_term=proj,
    )


def triangle_holds(report: LevelErrorReport) -> bool:
    """Exact check of ``|a - c| <= |a - b| + |b - c|`` on the stored values."""
    a, b, c = (Fraction(v) for v in (report.full_value, report.grid_value, report.coarse_value))
    return abs(a - c) <= abs(a - b) + abs(b - c)


def fit_bound_constant(reports) -> float:
    """Smallest ``c`` with ``observed <= c * grid_bound + projection`` on all reports."""
    best = 0.0
    for rep in reports:
        excess = rep.observed_discrepancy - rep.projection_term
        if excess <= 0:
            continue
        if rep.grid_error_bound <= 0:
            return float("inf")
        best = max(best, excess / rep.grid_error_bound)
    return best
