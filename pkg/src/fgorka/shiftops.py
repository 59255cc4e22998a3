"""Cyclic column shift operators.

A shift path assigns one integer offset per measurement (or one offset per
spatial axis for frame stacks).  Positive offsets rotate downward, i.e. index
``j`` moves to ``j + shift (mod M)``; this is ``np.roll`` along the spatial
axes and is shared by every module in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

__all__ = ["ShiftPath", "shift_apply", "shift_compose", "as_path"]


@dataclass(frozen=True)
class ShiftPath:
    """Integer shift path on a grid refined by ``denominator``.

    ``shifts`` has shape ``(N,)`` for 1-D measurements or ``(N, 2)`` for frame
    stacks.  The physical shift is ``shifts / denominator``.  Values are stored
    unreduced so that step constraints stay checkable after composition.
    """

    shifts: np.ndarray
    denominator: int = 1

    def __post_init__(self):
        s = np.asarray(self.shifts)
        if s.dtype.kind == "f":
            if not np.all(np.isfinite(s)) or np.any(s != np.round(s)):
                raise ValueError("shift entries must be integers")
        elif s.dtype.kind not in "iu":
            raise ValueError(f"unsupported shift dtype {s.dtype}")
        if s.ndim not in (1, 2) or (s.ndim == 2 and s.shape[1] not in (1, 2)):
            raise ValueError(f"shifts must have shape (N,) or (N, d), got {s.shape}")
        if int(self.denominator) < 1:
            raise ValueError("denominator must be a positive integer")
        s = s.astype(np.int64)
        s.setflags(write=False)
        object.__setattr__(self, "shifts", s)
        object.__setattr__(self, "denominator", int(self.denominator))

    def __len__(self):
        return self.shifts.shape[0]

    @property
    def ndim_shift(self) -> int:
        return 1 if self.shifts.ndim == 1 else self.shifts.shape[1]

    def steps(self) -> np.ndarray:
        """Consecutive differences ``shifts[k] - shifts[k-1]``."""
        return np.diff(self.shifts, axis=0)

    def max_step(self) -> int:
        if len(self) < 2:
            return 0
        return int(np.abs(self.steps()).max())

    def is_feasible(self, c_max) -> bool:
        """True when every step is at most ``c_max`` (in physical units)."""
        return self.max_step() <= c_max * self.denominator

    def rescale(self, denominator: int) -> "ShiftPath":
        """Express the same physical path on a finer common grid."""
        denominator = int(denominator)
        if denominator % self.denominator:
            raise ValueError(
                f"cannot rescale denominator {self.denominator} to {denominator}")
        return ShiftPath(self.shifts * (denominator // self.denominator), denominator)

    def as_float(self) -> np.ndarray:
        return self.shifts / float(self.denominator)

    def anchored(self) -> "ShiftPath":
        """Same path translated so that the first measurement has shift zero."""
        return ShiftPath(self.shifts - self.shifts[0], self.denominator)

    def __eq__(self, other):
        if not isinstance(other, ShiftPath):
            return NotImplemented
        return (self.denominator == other.denominator
                and self.shifts.shape == other.shifts.shape
                and bool(np.all(self.shifts == other.shifts)))

    def __hash__(self):
        return hash((self.shifts.tobytes(), self.shifts.shape, self.denominator))


def as_path(path, denominator: int = 1) -> ShiftPath:
    if isinstance(path, ShiftPath):
        return path
    return ShiftPath(np.asarray(path), denominator)


def _spatial_ndim(data: np.ndarray) -> int:
    if data.ndim not in (2, 3):
        raise ValueError(f"data must have shape (M, N) or (M1, M2, N), got {data.shape}")
    return data.ndim - 1


def shift_apply(data, path) -> np.ndarray:
    """Rotate every measurement of ``data`` by its entry of ``path``.

    Parameters
    ----------
    data : ndarray, shape (M, N) or (M1, M2, N)
    path : ShiftPath or int array
        Must have denominator 1.  For frame stacks the path has shape (N, 2)
        and frame ``k`` is rotated by ``path[k, 0]`` along axis 0 and
        ``path[k, 1]`` along axis 1.

    Returns
    -------
    ndarray of the same shape as ``data``.
    """
    data = np.asarray(data)
    path = as_path(path)
    if path.denominator != 1:
        raise ValueError("shift_apply needs an integral path (denominator 1)")
    d = _spatial_ndim(data)
    n = data.shape[-1]
    shifts = path.shifts
    if shifts.shape[0] != n:
        raise ValueError(f"path length {shifts.shape[0]} does not match N={n}")
    if shifts.ndim == 1:
        shifts = shifts[:, None]
    if shifts.shape[1] != d:
        raise ValueError(f"path has {shifts.shape[1]} shift axes, data has {d}")

    dims = data.shape[:d]
    reduced = shifts % np.asarray(dims, dtype=np.int64)
    if d == 1:
        m = dims[0]
        rows = (np.arange(m)[:, None] - reduced[:, 0][None, :]) % m
        return np.take_along_axis(data, rows, axis=0)
    m1, m2 = dims
    rows = (np.arange(m1)[:, None] - reduced[:, 0][None, :]) % m1
    cols = (np.arange(m2)[:, None] - reduced[:, 1][None, :]) % m2
    return data[rows[:, None, :], cols[None, :, :], np.arange(n)[None, None, :]]


def shift_compose(a, b) -> ShiftPath:
    """Sum of two paths on their common denominator.

    ``shift_apply(D, shift_compose(a, b)) == shift_apply(shift_apply(D, b), a)``
    for integral paths.
    """
    a = as_path(a)
    b = as_path(b)
    if a.shifts.shape != b.shifts.shape:
        raise ValueError(f"path shapes differ: {a.shifts.shape} vs {b.shifts.shape}")
    den = a.denominator * b.denominator // gcd(a.denominator, b.denominator)
    return ShiftPath(a.rescale(den).shifts + b.rescale(den).shifts, den)
