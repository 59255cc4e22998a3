"""Shift-path error and sweep aggregation."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from fractions import Fraction
from math import lcm

import numpy as np

from .shiftops import ShiftPath, as_path

__all__ = ["shift_error", "shift_error_exact", "expected_rounding_error",
           "sweep_aggregate", "sweep_table_csv"]


def shift_error_exact(recovered, truth) -> Fraction:
    """``N^-1 || t - x - mean(t - x) ||_1`` as an exact fraction."""
    a = as_path(recovered)
    b = as_path(truth)
    if a.shifts.shape != b.shifts.shape:
        raise ValueError(f"path shapes differ: {a.shifts.shape} vs {b.shifts.shape}")
    den = lcm(a.denominator, b.denominator)
    diff = b.rescale(den).shifts - a.rescale(den).shifts
    n = diff.shape[0]
    cols = diff.reshape(n, -1)
    total = Fraction(0)
    # 2-D paths add the per-axis errors
    for ax in range(cols.shape[1]):
        col = [int(v) for v in cols[:, ax]]
        s = sum(col)
        total += Fraction(sum(abs(n * v - s) for v in col), n * n * den)
    return total


def shift_error(recovered, truth) -> float:
    """Mean-centred l1 path error divided by the number of measurements."""
    return float(shift_error_exact(recovered, truth))


def expected_rounding_error(c_truth: int, decimate: int) -> Fraction:
    """Mean of ``|k/q - round(k/q)|`` over steps ``k`` uniform in ``-c..c``."""
    total = Fraction(0)
    for k in range(-c_truth, c_truth + 1):
        x = Fraction(k, decimate)
        total += abs(x - round(x))
    return total / (2 * c_truth + 1)


def sweep_aggregate(results):
    """Best method per ``(psnr, cut)`` cell.

    Parameters
    ----------
    results : iterable of (method, psnr, cut, error)

    Returns
    -------
    dict
        ``(psnr, cut) -> (best_method, {method: mean_error})``.  Ties go to the
        alphabetically first method.
    """
    cells = defaultdict(lambda: defaultdict(list))
    for method, psnr, cut, err in results:
        cells[(psnr, cut)][str(method)].append(float(err))
    out = {}
    for key, per_method in cells.items():
        means = {m: float(np.mean(v)) for m, v in per_method.items() if v}
        if not means:
            out[key] = (None, {})
            continue
        best = min(sorted(means), key=lambda m: means[m])
        out[key] = (best, means)
    return out


def sweep_table_csv(aggregate) -> str:
    """One CSV row per cell: psnr, cut, best method, then mean errors."""
    methods = sorted({m for _, means in aggregate.values() for m in means})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["psnr", "cut", "best"] + [f"mean_{m}" for m in methods])
    for key in sorted(aggregate, key=lambda k: (float(k[0]), k[1])):
        best, means = aggregate[key]
        row = [key[0], key[1], best if best is not None else "missing"]
        row += ["%.17g" % means[m] if m in means else "" for m in methods]
        writer.writerow(row)
    return buf.getvalue()
