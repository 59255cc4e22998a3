"""Estimator-style wrappers around the tracking pipeline.

The stack ``X`` plays the role of the sample matrix: rows (or the two
leading axes for frames) are spatial samples, the last axis indexes
measurements.  Hyper-parameters live in ``__init__`` and fitted state ends
with an underscore, so ``get_params``/``set_params``/``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matching_shape, check_stack
from .driver import FgConfig, reconstruct, track, track_multi
from .path_solver import SolverConfig, solve_path
from .resampling import make_pair
from .shiftops import shift_apply
from .smoothing import build_system, solve_object

__all__ = ["Orka", "FgOrka", "Resampler", "MultiObjectTracker"]


class Orka(BaseEstimator):
    """Exact path recovery on the data grid.

    Parameters
    ----------
    c_max : int
        Per-step shift bound.
    band_k : int
        Half-width of the banded inverse.
    mu : float
        Smoothing weight.

    Attributes
    ----------
    path_ : ShiftPath
    object_ : ndarray
        Object stack in the object frame.
    value_ : float
        Banded objective of ``path_``.
    """

    def __init__(self, c_max=1, band_k=5, mu=100.0):
        self.c_max = c_max
        self.band_k = band_k
        self.mu = mu

    def fit(self, X, y=None):
        X = check_stack(X)
        system = build_system(X.shape[-1], self.mu, self.band_k)
        sol = solve_path(X, SolverConfig(int(self.c_max), int(self.band_k), float(self.mu)), system)
        self.path_ = sol.path
        self.value_ = sol.value
        self.object_ = solve_object(system, X, sol.path)
        self.shape_ = X.shape
        return self

    def transform(self, X):
        """Measurements rotated into the object frame."""
        check_is_fitted(self, "path_")
        X = check_matching_shape(X, self.shape_)
        return shift_apply(X, -np.asarray(self.path_.shifts))

    def predict(self, X=None):
        """Model of the measurements, ``S_path(U)``."""
        check_is_fitted(self, "path_")
        return shift_apply(self.object_, self.path_)


class FgOrka(BaseEstimator):
    """Coarse-to-fine gridless tracker.

    Parameters mirror :class:`fgorka.driver.FgConfig`.

    Attributes
    ----------
    path_ : ShiftPath
        Path with denominator ``r**j_up``.
    object_ : ndarray
        Object stack at ``r**j_up`` times the padded resolution.
    value_ : float
    per_level_ : list of LevelRecord
    levels_ : int
    pad_ : tuple
    """

    def __init__(self, c_max=1, mu=100.0, band_k=5, r=2, kind="fourier", j_up=0,
                 l_rounding="up", filter_order=4):
        self.c_max = c_max
        self.mu = mu
        self.band_k = band_k
        self.r = r
        self.kind = kind
        self.j_up = j_up
        self.l_rounding = l_rounding
        self.filter_order = filter_order

    def _config(self) -> FgConfig:
        return FgConfig(c_max=int(self.c_max), mu=float(self.mu), band_k=int(self.band_k),
                        r=int(self.r), kind=self.kind, j_up=int(self.j_up),
                        l_rounding=self.l_rounding, filter_order=self.filter_order)

    def fit(self, X, y=None):
        X = check_stack(X)
        res = track(X, self._config())
        self.result_ = res
        self.path_ = res.path
        self.object_ = res.object
        self.value_ = res.value
        self.per_level_ = res.per_level
        self.levels_ = res.levels
        self.pad_ = res.pad
        self.shape_ = X.shape
        return self

    def transform(self, X):
        """Upsampled measurements rotated into the object frame."""
        check_is_fitted(self, "path_")
        X = check_matching_shape(X, self.shape_)
        d = X.ndim - 1
        padded = np.pad(X, [(0, p) for p in self.pad_] + [(0, 0)])
        up_kind = "fourier" if self.kind == "optimal" else self.kind
        out = padded
        for _ in range(int(self.j_up)):
            for ax in range(d):
                pair = make_pair(up_kind, out.shape[ax] * int(self.r), int(self.r),
                                 filter_order=self.filter_order)
                out = pair.up(out, axis=ax)
        return shift_apply(out, -np.asarray(self.path_.shifts))

    def predict(self, X=None):
        """Model of the measurements on the original grid (padding removed)."""
        check_is_fitted(self, "path_")
        full = reconstruct(self.result_, self.kind, self.filter_order)
        return full[tuple(slice(0, s) for s in self.shape_[:-1])]


class Resampler(TransformerMixin, BaseEstimator):
    """Resampling pair as a transformer: ``transform`` downsamples, the inverse upsamples.

    The pair is built per spatial axis at ``fit``; the adaptive kind learns
    its generator from the fitted stack.
    """

    def __init__(self, kind="fourier", r=2, filter_order=4):
        self.kind = kind
        self.r = r
        self.filter_order = filter_order

    def fit(self, X, y=None):
        X = check_stack(X)
        d = X.ndim - 1
        pairs = []
        for ax in range(d):
            m = X.shape[ax]
            rows = np.moveaxis(X, ax, 0).reshape(m, -1)
            pairs.append(make_pair(self.kind, m, int(self.r), data=rows,
                                   filter_order=self.filter_order))
        self.pairs_ = pairs
        self.spatial_shape_ = X.shape[:-1]
        return self

    def transform(self, X):
        check_is_fitted(self, "pairs_")
        X = check_stack(X)
        if X.shape[:-1] != self.spatial_shape_:
            raise ValueError(f"spatial shape {X.shape[:-1]} differs from fitted {self.spatial_shape_}")
        out = X
        for ax, p in enumerate(self.pairs_):
            out = p.down(out, axis=ax)
        return out

    def inverse_transform(self, X):
        check_is_fitted(self, "pairs_")
        X = np.asarray(X, dtype=float)
        out = X
        for ax, p in enumerate(self.pairs_):
            out = p.up(out, axis=ax)
        return out

    def projection_residual(self, X) -> float:
        X = check_stack(X)
        return float(np.linalg.norm(X - self.inverse_transform(self.transform(X))))


class MultiObjectTracker(BaseEstimator):
    """Peel ``n_objects`` components off the stack one after another.

    ``per_object_mu`` overrides ``mu`` per round when given.
    """

    def __init__(self, n_objects=2, c_max=1, mu=100.0, band_k=5, r=2, kind="fourier",
                 j_up=0, l_rounding="up", per_object_mu=None):
        self.n_objects = n_objects
        self.c_max = c_max
        self.mu = mu
        self.band_k = band_k
        self.r = r
        self.kind = kind
        self.j_up = j_up
        self.l_rounding = l_rounding
        self.per_object_mu = per_object_mu

    def fit(self, X, y=None):
        X = check_stack(X)
        cfg = FgConfig(c_max=int(self.c_max), mu=float(self.mu), band_k=int(self.band_k),
                       r=int(self.r), kind=self.kind, j_up=int(self.j_up),
                       l_rounding=self.l_rounding)
        self.results_ = track_multi(X, cfg, int(self.n_objects), self.per_object_mu)
        self.paths_ = [res.path for res in self.results_]
        self.shape_ = X.shape
        return self

    def predict(self, X=None):
        """Sum of all extracted components on the original grid."""
        check_is_fitted(self, "results_")
        crop = tuple(slice(0, s) for s in self.shape_[:-1])
        total = np.zeros(self.shape_)
        for res in self.results_:
            total += reconstruct(res, self.kind)[crop]
        return total

