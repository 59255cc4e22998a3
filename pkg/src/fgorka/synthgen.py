"""Synthetic pulse data with a planted shift path."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .shiftops import ShiftPath, shift_apply

__all__ = [
    "SynthSpec",
    "default_kernel",
    "generate",
    "add_noise",
    "highpass",
    "measured_psnr",
    "trial_seed",
]


def default_kernel() -> np.ndarray:
    """``g_k = exp(-(0.4 (k - 6))^2)`` for ``k = 1..11``."""
    k = np.arange(1, 12)
    return np.exp(-((0.4 * (k - 6)) ** 2))


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic stack.

    ``m`` is the length after decimation.  ``kernel=None`` selects
    :func:`default_kernel`.  ``noise_psnr=None`` adds no noise and
    ``highpass_cut=0`` skips filtering.
    """

    m: int = 100
    n: int = 100
    c_truth: int = 4
    decimate: int = 5
    seed: int = 0
    noise_psnr: float | None = None
    highpass_cut: int = 0
    kernel: tuple | None = None

    def to_text(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            if value is None:
                continue
            if key == "kernel":
                value = ",".join(repr(float(v)) for v in value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SynthSpec":
        types = {f.name: f for f in fields(cls)}
        kwargs = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ValueError(f"unknown key {key!r}")
            if key == "kernel":
                kwargs[key] = tuple(float(v) for v in value.split(","))
            elif key == "noise_psnr":
                kwargs[key] = None if value.lower() in ("none", "") else float(value)
            else:
                kwargs[key] = int(value)
        return cls(**kwargs)


def trial_seed(seed: int, trial: int) -> np.random.SeedSequence:
    """Independent stream for trial ``trial`` of a seeded experiment."""
    return np.random.SeedSequence([int(seed), int(trial)])


def _circular_convolve(signal: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    padded = np.zeros(signal.shape[0])
    padded[: kernel.shape[0]] = kernel
    return np.fft.irfft(np.fft.rfft(signal) * np.fft.rfft(padded), n=signal.shape[0])


def generate(spec: SynthSpec, rng=None):
    """Draw a planted-path stack.

    A standard-normal signal of length ``m * decimate`` is circularly
    convolved with the kernel, column ``k`` is rotated by the planted fine
    path, and every ``decimate``-th row is kept.  Noise and high-pass
    filtering follow when requested.

    Returns
    -------
    data : ndarray, shape (m, n)
    truth : ShiftPath
        Planted path with denominator ``decimate``.
    """
    if spec.m < 1 or spec.n < 2:
        raise ValueError("need m >= 1 and n >= 2")
    if spec.decimate < 1:
        raise ValueError("decimate must be >= 1")
    if spec.c_truth < 0:
        raise ValueError("c_truth must be >= 0")
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    kernel = default_kernel() if spec.kernel is None else np.asarray(spec.kernel, dtype=float)
    fine_m = spec.m * spec.decimate
    if kernel.shape[0] > fine_m:
        raise ValueError("kernel longer than the signal")
    signal = _circular_convolve(rng.standard_normal(fine_m), kernel)
    steps = rng.integers(-spec.c_truth, spec.c_truth + 1, size=spec.n - 1)
    planted = np.concatenate([[0], np.cumsum(steps)]).astype(np.int64)
    stack = shift_apply(np.repeat(signal[:, None], spec.n, axis=1), planted)
    data = stack[:: spec.decimate]
    if spec.noise_psnr is not None:
        data = add_noise(data, spec.noise_psnr, rng=rng)
    if spec.highpass_cut:
        data = highpass(data, spec.highpass_cut)
    return data, ShiftPath(planted, spec.decimate)


def add_noise(data, psnr, seed=None, rng=None) -> np.ndarray:
    """Add white Gaussian noise at ``20 log10(max|D| / rms(noise)) = psnr``.

    The drawn noise is rescaled to the exact target rms, so the realized PSNR
    matches ``psnr`` up to rounding.
    """
    data = np.asarray(data, dtype=float)
    psnr = float(psnr)
    if np.isposinf(psnr):
        return data.copy()
    if not np.isfinite(psnr):
        raise ValueError("psnr must be finite or +inf")
    if rng is None:
        rng = np.random.default_rng(seed)
    noise = rng.standard_normal(data.shape)
    target = np.max(np.abs(data)) / 10 ** (psnr / 20)
    rms = np.sqrt(np.mean(noise * noise))
    return data + noise * (target / rms)


def measured_psnr(clean, noisy) -> float:
    clean = np.asarray(clean, dtype=float)
    noise = np.asarray(noisy, dtype=float) - clean
    return float(20 * np.log10(np.max(np.abs(clean)) / np.sqrt(np.mean(noise * noise))))


def highpass(data, cut: int) -> np.ndarray:
    """Zero the ``cut`` lowest frequency bins (and their mirrors) per column."""
    data = np.asarray(data, dtype=float)
    m = data.shape[0]
    cut = int(cut)
    if cut < 0 or cut >= m / 2:
        raise ValueError(f"cut must satisfy 0 <= cut < M/2, got {cut}")
    if cut == 0:
        return data.copy()
    spec = np.fft.fft(data, axis=0)
    spec[:cut] = 0
    spec[m - cut + 1:] = 0
    return np.fft.ifft(spec, axis=0).real
