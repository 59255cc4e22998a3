"""Shift-invariant resampling pairs.

Every pair is a matrix ``R`` of shape ``(M, M/r)`` whose ``k``-th column is a
generator vector ``rho`` rotated by ``r k``.  With ``R^T R = I`` the
upsampler ``y -> R y`` preserves angles, the downsampler is ``x -> R^T x``, and
``R R^T`` is an orthogonal projection.  Both operators commute with shifts at
ratio ``r``.  Three generators are provided: a periodized orthogonal wavelet
scaling filter, a Fourier low-pass and a data-adaptive one that minimizes the
projection residual of a given stack.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ResamplingPair",
    "WAVELET_FILTERS",
    "make_wavelet_pair",
    "make_fourier_pair",
    "make_optimal_pair",
    "make_pair",
    "fourier_down",
    "fourier_up",
    "downsample_stack",
    "upsample_stack",
    "projection_residual",
    "resampling_matrix",
]

_S3 = np.sqrt(3.0)
_S10 = np.sqrt(10.0)
_Q10 = np.sqrt(5.0 + 2.0 * _S10)
WAVELET_FILTERS = {
    2: np.array([1.0, 1.0]) / np.sqrt(2.0),
    4: np.array([1 + _S3, 3 + _S3, 3 - _S3, 1 - _S3]) / (4 * np.sqrt(2.0)),
    6: np.array([1 + _S10 + _Q10, 5 + _S10 + 3 * _Q10, 10 - 2 * _S10 + 2 * _Q10,
                 10 - 2 * _S10 - 2 * _Q10, 5 + _S10 - 3 * _Q10, 1 + _S10 - _Q10])
    / (16 * np.sqrt(2.0)),
}


@dataclass(frozen=True)
class ResamplingPair:
    """Downsample/upsample pair on signals of length ``m`` with factor ``r``."""

    m: int
    r: int
    rho: np.ndarray = field(repr=False)
    kind: str = "fourier"

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.shape != (self.m,):
            raise ValueError(f"rho must have length {self.m}")
        if self.r < 2 or self.m % self.r:
            raise ValueError(f"factor r={self.r} must be >= 2 and divide m={self.m}")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        spec = np.fft.fft(rho)
        spec.setflags(write=False)
        object.__setattr__(self, "_rho_hat", spec)

    @property
    def coarse(self) -> int:
        return self.m // self.r

    def matrix(self) -> np.ndarray:
        return resampling_matrix(self.rho, self.r)

    def down(self, x, axis: int = 0) -> np.ndarray:
        """``R^T x`` along ``axis``."""
        x = np.moveaxis(np.asarray(x, dtype=float), axis, 0)
        if x.shape[0] != self.m:
            raise ValueError(f"expected length {self.m} along axis {axis}, got {x.shape[0]}")
        spec = np.fft.fft(x, axis=0) * np.conj(self._rho_hat).reshape((-1,) + (1,) * (x.ndim - 1))
        corr = np.fft.ifft(spec, axis=0).real
        return np.moveaxis(corr[:: self.r], 0, axis)

    def up(self, y, axis: int = 0) -> np.ndarray:
        """``R y`` along ``axis``."""
        y = np.moveaxis(np.asarray(y, dtype=float), axis, 0)
        if y.shape[0] != self.coarse:
            raise ValueError(
                f"expected length {self.coarse} along axis {axis}, got {y.shape[0]}")
        z = np.zeros((self.m,) + y.shape[1:])
        z[:: self.r] = y
        spec = np.fft.fft(z, axis=0) * self._rho_hat.reshape((-1,) + (1,) * (y.ndim - 1))
        return np.moveaxis(np.fft.ifft(spec, axis=0).real, 0, axis)

    def project(self, x, axis: int = 0) -> np.ndarray:
        return self.up(self.down(x, axis), axis)


def resampling_matrix(rho, r: int) -> np.ndarray:
    """Explicit ``R[j, k] = rho[(j - r k) mod M]``."""
    rho = np.asarray(rho, dtype=float)
    m = rho.shape[0]
    j = np.arange(m)[:, None]
    k = np.arange(m // r)[None, :]
    return rho[(j - r * k) % m]


# --------------------------------------------------------------------------
# wavelet


def make_wavelet_pair(m: int, filter_order=4) -> ResamplingPair:
    """Periodized orthogonal scaling filter, ``r = 2``.

    ``filter_order`` is the tap count of a Daubechies filter (2 is Haar, 4 and
    6 are db2 and db3) or an explicit filter array, which must be orthonormal
    under even translations.
    """
    m = int(m)
    if m % 2:
        raise ValueError(f"wavelet resampling needs an even length, got {m}")
    if isinstance(filter_order, (int, np.integer)):
        if int(filter_order) not in WAVELET_FILTERS:
            raise ValueError(f"no orthogonal Daubechies filter with {filter_order} taps")
        h = WAVELET_FILTERS[int(filter_order)]
    else:
        h = np.asarray(filter_order, dtype=float)
    rho = np.zeros(m)
    np.add.at(rho, np.arange(h.shape[0]) % m, h)
    gram = resampling_matrix(rho, 2)
    if not np.allclose(gram.T @ gram, np.eye(m // 2), atol=1e-10):
        raise ValueError("filter is not orthogonal under even translations")
    return ResamplingPair(m, 2, rho, "wavelet")


# --------------------------------------------------------------------------
# fourier


def _kept_bins(m: int, r: int):
    """Fine-grid bins kept by the low-pass and the coarse slots they map to."""
    c = m // r
    if c % 2:
        lo = np.arange((c + 1) // 2)
        hi = np.arange(c // 2)
        fine = np.concatenate([lo, m - c // 2 + hi])
        coarse = np.concatenate([lo, (c + 1) // 2 + hi])
        return fine, coarse, None
    lo = np.arange(c // 2)
    hi = np.arange(c // 2 - 1)
    fine = np.concatenate([lo, m - c // 2 + 1 + hi])
    coarse = np.concatenate([lo, c // 2 + 1 + hi])
    return fine, coarse, (c // 2, m - c // 2)


def fourier_down(x, r: int, axis: int = 0) -> np.ndarray:
    """Unitary transform, drop the middle bins, inverse transform of length ``M/r``.

    For an even coarse length the two Nyquist candidates are merged into one
    bin with weight ``1/sqrt(2)`` each.
    """
    x = np.moveaxis(np.asarray(x, dtype=float), axis, 0)
    m = x.shape[0]
    if m % r:
        raise ValueError(f"r={r} does not divide M={m}")
    c = m // r
    xf = np.fft.fft(x, axis=0, norm="ortho")
    yf = np.zeros((c,) + x.shape[1:], dtype=complex)
    fine, coarse, nyq = _kept_bins(m, r)
    yf[coarse] = xf[fine]
    if nyq is not None:
        yf[c // 2] = (xf[nyq[0]] + xf[nyq[1]]) / np.sqrt(2.0)
    y = np.fft.ifft(yf, axis=0, norm="ortho").real
    return np.moveaxis(y, 0, axis)


def fourier_up(y, r: int, axis: int = 0) -> np.ndarray:
    """Adjoint of :func:`fourier_down`: zero-fill the removed bins."""
    y = np.moveaxis(np.asarray(y, dtype=float), axis, 0)
    c = y.shape[0]
    m = c * r
    yf = np.fft.fft(y, axis=0, norm="ortho")
    xf = np.zeros((m,) + y.shape[1:], dtype=complex)
    fine, coarse, nyq = _kept_bins(m, r)
    xf[fine] = yf[coarse]
    if nyq is not None:
        xf[nyq[0]] = yf[c // 2] / np.sqrt(2.0)
        xf[nyq[1]] = yf[c // 2] / np.sqrt(2.0)
    x = np.fft.ifft(xf, axis=0, norm="ortho").real
    return np.moveaxis(x, 0, axis)


def make_fourier_pair(m: int, r: int) -> ResamplingPair:
    """Fourier low-pass pair for any factor dividing ``m``."""
    m, r = int(m), int(r)
    if r < 2 or m % r:
        raise ValueError(f"r={r} must be >= 2 and divide M={m}")
    e0 = np.zeros(m // r)
    e0[0] = 1.0
    return ResamplingPair(m, r, fourier_up(e0, r), "fourier")


# --------------------------------------------------------------------------
# data-adaptive


def _leading_eigenvectors(h: np.ndarray) -> np.ndarray:
    """Leading eigenvector of each Hermitian ``r x r`` block in ``h``."""
    _, vecs = np.linalg.eigh(h)
    u = vecs[..., -1]
    # fix the phase: largest-magnitude entry real positive, lowest index on ties
    pivot = np.argmax(np.abs(u) >= np.abs(u).max(axis=-1, keepdims=True) * (1 - 1e-12), axis=-1)
    ph = u[np.arange(u.shape[0]), pivot]
    ph = np.where(np.abs(ph) > 0, ph / np.abs(ph), 1.0)
    return u / ph[:, None]


def _self_conjugate(u: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Rotate ``u`` so that ``conj(u[perm]) == u``, staying in its eigenspace."""
    mirror = np.conj(u[perm])
    w1 = u + mirror
    w2 = 1j * u + np.conj(1j * u[perm])
    w = w1 if np.linalg.norm(w1) >= np.linalg.norm(w2) else w2
    w = w / np.linalg.norm(w)
    k = int(np.argmax(np.abs(w) >= np.abs(w).max() * (1 - 1e-12)))
    if w[k].real < 0:
        w = -w
    return w


def make_optimal_pair(m: int, r: int, data) -> ResamplingPair:
    """Generator minimizing ``||D - R R^T D||_F`` over all shift-invariant pairs.

    Each group of ``r`` frequency bins ``k, k + M/r, ...`` receives the leading
    eigenvector of ``B_k B_k^*`` with ``B_k`` the stacked data spectra of those
    bins.  Groups paired by conjugate symmetry are solved once and mirrored
    so that ``rho`` is real.
    """
    m, r = int(m), int(r)
    if r not in (2, 3):
        raise ValueError(f"optimal resampling supports r in (2, 3), got {r}")
    if m % r:
        raise ValueError(f"r={r} does not divide M={m}")
    data = np.asarray(data, dtype=float)
    if data.shape[0] != m:
        raise ValueError(f"data has {data.shape[0]} rows, expected {m}")
    flat = data.reshape(m, -1)
    c = m // r
    spec = np.fft.fft(flat, axis=0)
    groups = np.arange(c // 2 + 1)
    idx = groups[:, None] + c * np.arange(r)[None, :]
    b = spec[idx]
    h = b @ np.conj(np.swapaxes(b, 1, 2))
    try:
        u = _leading_eigenvectors(h)
    except np.linalg.LinAlgError as exc:
        warnings.warn(f"eigensolver failed ({exc}); using the Fourier pair instead")
        return make_fourier_pair(m, r)
    # unitary normalization: R^T R = I needs a group norm of sqrt(r / M)
    alpha = np.sqrt(r / m)
    rho_hat = np.zeros(m, dtype=complex)
    lanes = np.arange(r)
    for k in groups:
        vec = u[k]
        mirror_group = (c - k) % c
        if mirror_group == k:
            # bins k + l c and M - k - l c fall in the same group
            perm = (-(k + lanes * c)) % m
            perm = (perm - k) // c
            vec = _self_conjugate(vec, perm)
        rho_hat[k + lanes * c] = alpha * vec
        if mirror_group != k:
            rho_hat[(-(k + lanes * c)) % m] = alpha * np.conj(vec)
    rho = np.fft.ifft(rho_hat, norm="ortho")
    if np.abs(rho.imag).max() > 1e-12:
        raise RuntimeError("generator is not real; conjugate symmetry broken")
    return ResamplingPair(m, r, rho.real, "optimal")


def make_pair(kind: str, m: int, r: int, data=None, filter_order=4) -> ResamplingPair:
    """Factory over the three kinds."""
    if kind == "wavelet":
        if r != 2:
            raise ValueError("wavelet resampling is fixed to r = 2")
        return make_wavelet_pair(m, filter_order)
    if kind == "fourier":
        return make_fourier_pair(m, r)
    if kind == "optimal":
        if data is None:
            raise ValueError("optimal resampling needs data")
        return make_optimal_pair(m, r, data)
    raise ValueError(f"unknown resampling kind {kind!r}")


# --------------------------------------------------------------------------
# stack application


def _pairs_for(pair, d):
    if isinstance(pair, ResamplingPair):
        return (pair,) * d
    pairs = tuple(pair)
    if len(pairs) != d:
        raise ValueError(f"need {d} pairs, got {len(pairs)}")
    return pairs


def downsample_stack(pair, data) -> np.ndarray:
    """Columnwise ``R^T`` for ``(M, N)`` stacks, per spatial axis for frames.

    ``pair`` is one pair (reused on every spatial axis) or a sequence with one
    pair per axis.
    """
    data = np.asarray(data, dtype=float)
    d = data.ndim - 1
    out = data
    for ax, p in enumerate(_pairs_for(pair, d)):
        out = p.down(out, axis=ax)
    return out


def upsample_stack(pair, data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    d = data.ndim - 1
    out = data
    for ax, p in enumerate(_pairs_for(pair, d)):
        out = p.up(out, axis=ax)
    return out


def projection_residual(pair, data) -> float:
    """``||D - R R^T D||_F``."""
    data = np.asarray(data, dtype=float)
    return float(np.linalg.norm(data - upsample_stack(pair, downsample_stack(pair, data))))
