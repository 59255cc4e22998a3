"""Input checks shared by the estimator classes."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

__all__ = ["check_stack", "check_matching_shape"]


def check_stack(X, name: str = "X") -> np.ndarray:
    """Finite float stack of shape (M, N) or (M1, M2, N) with N >= 2."""
    arr = check_array(X, dtype=np.float64, allow_nd=True, ensure_all_finite=True,
                      ensure_2d=True, input_name=name)
    if arr.ndim not in (2, 3):
        raise ValueError(f"{name} must have shape (M, N) or (M1, M2, N), got {arr.shape}")
    if arr.shape[-1] < 2:
        raise ValueError(f"{name} needs at least two measurements, got {arr.shape[-1]}")
    return arr


def check_matching_shape(X, shape, name: str = "X") -> np.ndarray:
    arr = check_stack(X, name)
    if arr.shape != tuple(shape):
        raise ValueError(f"{name} has shape {arr.shape}, fitted on {tuple(shape)}")
    return arr
