"""The quadratic smoothing system behind the object update.

For a fixed shift path the object stack solves a convex quadratic whose
normal matrix is ``A = I + mu * L`` with ``L`` the path-graph Laplacian over
the measurement index.  The optimal value of the tracking objective is
``||D||_F^2 - <A^{-1}, G>`` with ``G`` the Gram matrix of the aligned
measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .shiftops import as_path, shift_apply

__all__ = [
    "SmoothingSystem",
    "build_system",
    "gram_matrix",
    "objective_value",
    "solve_object",
    "direct_objective",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 4096


def _tridiagonal_bands(n: int, mu: float) -> np.ndarray:
    """``A`` in LAPACK banded storage (upper, main, lower)."""
    ab = np.zeros((3, n))
    diag = np.full(n, 1.0 + 2.0 * mu)
    diag[0] = diag[-1] = 1.0 + mu
    ab[0, 1:] = -mu
    ab[1] = diag
    ab[2, :-1] = -mu
    return ab


def _solve(ab: np.ndarray, rhs: np.ndarray, mu: float) -> np.ndarray:
    x = solve_banded((1, 1), ab, rhs)
    # refinement with the residual rhs - x - mu L x; L x from neighbour
    # differences stays accurate when mu is large and columns are nearly flat
    for _ in range(3):
        x = x + solve_banded((1, 1), ab, rhs - x - mu * _laplacian(x))
    return x


def _laplacian(x: np.ndarray) -> np.ndarray:
    d = np.diff(x, axis=0)
    out = np.zeros_like(x)
    out[:-1] -= d
    out[1:] += d
    return out


@dataclass(frozen=True)
class SmoothingSystem:
    """``A = I + mu L`` together with its inverse and its K-band truncation.

    ``a_inverse`` is materialized only for ``n <= DENSE_LIMIT``; for larger
    systems only the band ``|j - k| <= band_k`` is kept in ``band_diagonals``.
    """

    n: int
    mu: float
    band_k: int
    a_inverse: np.ndarray | None = field(repr=False)
    band_diagonals: np.ndarray = field(repr=False)

    @property
    def matrix(self) -> np.ndarray:
        ab = _tridiagonal_bands(self.n, self.mu)
        return (np.diag(ab[1]) + np.diag(ab[0, 1:], 1) + np.diag(ab[2, :-1], -1))

    @property
    def a_inverse_banded(self) -> np.ndarray:
        """Dense ``n x n`` matrix equal to ``A^{-1}`` inside the band, zero outside."""
        out = np.zeros((self.n, self.n))
        for i in range(min(self.band_k, self.n - 1) + 1):
            vals = self.band_diagonals[i, i:]
            idx = np.arange(i, self.n)
            out[idx, idx - i] = vals
            out[idx - i, idx] = vals
        return out

    def inverse(self, banded: bool = False) -> np.ndarray:
        if banded:
            return self.a_inverse_banded
        if self.a_inverse is None:
            raise MemoryError(f"dense inverse not materialized for n={self.n}")
        return self.a_inverse

    def lower_band(self, k: int, i: int) -> float:
        """``A^{-1}[k, k - i]`` for ``0 <= i <= band_k``."""
        return float(self.band_diagonals[i, k])

    def with_band(self, band_k: int) -> "SmoothingSystem":
        return build_system(self.n, self.mu, band_k)


def build_system(n: int, mu: float, band_k: int = 1) -> SmoothingSystem:
    """Assemble ``A = I + mu L`` and invert it by tridiagonal solves.

    Parameters
    ----------
    n : int
        Number of measurements, at least 2.
    mu : float
        Non-negative smoothing weight.
    band_k : int
        Half-width kept by the banded truncation.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need at least two measurements")
    mu = float(mu)
    if not np.isfinite(mu) or mu < 0:
        raise ValueError(f"mu must be finite and non-negative, got {mu}")
    band_k = int(band_k)
    if band_k < 1:
        raise ValueError("band_k must be >= 1")
    ab = _tridiagonal_bands(n, mu)
    kk = min(band_k, n - 1)
    # band_diagonals[i, k] = A^{-1}[k, k - i]
    band = np.zeros((kk + 1, n))
    if n <= DENSE_LIMIT:
        inv = _solve(ab, np.eye(n), mu)
        inv = 0.5 * (inv + inv.T)
        for i in range(kk + 1):
            band[i, i:] = np.diagonal(inv, -i)
        inv.setflags(write=False)
    else:
        inv = None
        chunk = 512
        for start in range(0, n, chunk):
            stop = min(n, start + chunk)
            rhs = np.zeros((n, stop - start))
            rhs[np.arange(start, stop), np.arange(stop - start)] = 1.0
            cols = _solve(ab, rhs, mu)
            for i in range(kk + 1):
                rows = np.arange(max(start, i), stop)
                # entry (row, row - i) lives in column row - i; use symmetry
                band[i, rows] = cols[rows - i, rows - start]
    band.setflags(write=False)
    return SmoothingSystem(n=n, mu=mu, band_k=band_k, a_inverse=inv, band_diagonals=band)


def _flatten(data: np.ndarray) -> np.ndarray:
    return data.reshape(-1, data.shape[-1])


def gram_matrix(data, path) -> np.ndarray:
    """``G[j, k] = <S_{-l_j} D_j, S_{-l_k} D_k>`` for an integral path."""
    neg = _negate(path)
    # relative to the first shift, so a global offset changes nothing bitwise
    aligned = _flatten(shift_apply(data, neg - neg[0]))
    return aligned.T @ aligned


def _negate(path):
    path = as_path(path)
    if path.denominator != 1:
        raise ValueError("objective needs an integral path")
    return -path.shifts


def objective_value(system: SmoothingSystem, data, path, banded: bool = False) -> float:
    """Closed-form minimum over the object stack, up to the constant ``||D||_F^2``.

    Returns ``-<A^{-1}, G(path)>`` (or the K-banded inverse when ``banded``).
    """
    data = np.asarray(data, dtype=float)
    if data.shape[-1] != system.n:
        raise ValueError(f"data has N={data.shape[-1]}, system has n={system.n}")
    g = gram_matrix(data, path)
    return -float(np.sum(system.inverse(banded) * g))


def solve_object(system: SmoothingSystem, data, path) -> np.ndarray:
    """Optimal object stack ``U = S_{-path}(D) A^{-1}`` for a fixed path.

    Each spatial row is solved against the tridiagonal ``A``; the dense inverse
    is never used.
    """
    data = np.asarray(data, dtype=float)
    if data.shape[-1] != system.n:
        raise ValueError(f"data has N={data.shape[-1]}, system has n={system.n}")
    aligned = shift_apply(data, _negate(path))
    flat = _flatten(aligned)
    ab = _tridiagonal_bands(system.n, system.mu)
    u = _solve(ab, flat.T, system.mu).T
    return u.reshape(data.shape)


def direct_objective(data, path, u, mu: float) -> float:
    """Tracking objective evaluated term by term for a given object stack."""
    data = np.asarray(data, dtype=float)
    u = np.asarray(u, dtype=float)
    fit = data - shift_apply(u, path)
    smooth = np.diff(_flatten(u), axis=1)
    return float(np.sum(fit * fit) + mu * np.sum(smooth * smooth))
