import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgorka.synthgen import (SynthSpec, add_noise, default_kernel, generate, highpass,
                             measured_psnr, trial_seed)


def test_default_kernel():
    k = default_kernel()
    assert k.shape == (11,)
    assert k[5] == 1.0
    assert k[0] == pytest.approx(np.exp(-(0.4 * 5) ** 2), rel=1e-15)
    assert np.array_equal(k, k[::-1])


def test_zero_bound_gives_identical_columns():
    data, truth = generate(SynthSpec(m=30, n=6, c_truth=0, seed=1, decimate=1))
    assert np.all(truth.shifts == 0)
    assert np.all(data == data[:, :1])


def test_decimated_scale():
    data, truth = generate(SynthSpec())
    assert data.shape == (100, 100)
    assert truth.denominator == 5
    assert np.abs(np.diff(truth.shifts)).max() <= 4


def test_decimation_keeps_every_fifth_row():
    spec = SynthSpec(m=20, n=5, c_truth=3, decimate=5, seed=7)
    fine, truth_fine = generate(SynthSpec(m=100, n=5, c_truth=3, decimate=1, seed=7))
    data, truth = generate(spec)
    assert np.array_equal(data, fine[::5])
    assert np.array_equal(truth.shifts, truth_fine.shifts)


def test_columns_are_rotated_pulse_train():
    data, truth = generate(SynthSpec(m=40, n=8, c_truth=3, decimate=1, seed=2))
    for k in range(8):
        assert np.array_equal(np.roll(data[:, 0], truth.shifts[k]), data[:, k])


def test_reproducible():
    spec = SynthSpec(m=40, n=10, c_truth=2, seed=9, noise_psnr=10.0, highpass_cut=3)
    a, pa = generate(spec)
    b, pb = generate(spec)
    assert np.array_equal(a, b) and pa == pb
    c, _ = generate(SynthSpec(m=40, n=10, c_truth=2, seed=10))
    assert not np.array_equal(a, c)


def test_trial_seeds_independent():
    a = np.random.default_rng(trial_seed(0, 1)).standard_normal(4)
    b = np.random.default_rng(trial_seed(0, 2)).standard_normal(4)
    c = np.random.default_rng(trial_seed(0, 1)).standard_normal(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_spec_text_roundtrip():
    spec = SynthSpec(m=64, n=12, c_truth=3, decimate=2, seed=4, noise_psnr=12.5, highpass_cut=2)
    assert SynthSpec.from_text(spec.to_text()) == spec
    parsed = SynthSpec.from_text("# comment\nm = 10\nn=4\n\nseed=3\n")
    assert (parsed.m, parsed.n, parsed.seed) == (10, 4, 3)
    with pytest.raises(ValueError):
        SynthSpec.from_text("colour=blue\n")


def test_generate_errors():
    with pytest.raises(ValueError):
        generate(SynthSpec(m=5, n=3, decimate=1))
    with pytest.raises(ValueError):
        generate(SynthSpec(n=1))


def test_noise_hits_target_psnr():
    rng = np.random.default_rng(0)
    clean = rng.standard_normal((50, 20))
    for trial in range(100):
        target = float(rng.uniform(-5, 40))
        noisy = add_noise(clean, target, seed=trial)
        assert abs(measured_psnr(clean, noisy) - target) <= 0.1


def test_infinite_psnr_is_identity(rng):
    clean = rng.standard_normal((10, 3))
    out = add_noise(clean, float("inf"))
    assert np.array_equal(out, clean) and out is not clean
    with pytest.raises(ValueError):
        add_noise(clean, float("nan"))


def test_noise_seeds_differ_with_same_level(rng):
    clean = rng.standard_normal((80, 20))
    a = add_noise(clean, 10.0, seed=1) - clean
    b = add_noise(clean, 10.0, seed=2) - clean
    assert not np.array_equal(a, b)
    ra, rb = np.sqrt(np.mean(a**2)), np.sqrt(np.mean(b**2))
    assert abs(ra - rb) <= 0.05 * ra


def test_highpass_examples(rng):
    data = rng.standard_normal((20, 4))
    assert np.allclose(highpass(data, 0), data, atol=1e-15)
    assert np.abs(highpass(np.full((20, 3), 2.0), 1)).max() <= 1e-14
    with pytest.raises(ValueError):
        highpass(data, 10)
    with pytest.raises(ValueError):
        highpass(data, -1)


@given(st.integers(0, 2**31 - 1), st.integers(6, 40), st.data())
def test_highpass_parseval(seed, m, draw):
    cut = draw.draw(st.integers(0, (m - 1) // 2))
    data = np.random.default_rng(seed).standard_normal((m, 3))
    out = highpass(data, cut)
    spec = np.fft.fft(data, axis=0)
    removed = np.sum(np.abs(spec[:cut]) ** 2)
    if cut > 1:
        removed += np.sum(np.abs(spec[m - cut + 1:]) ** 2)
    assert np.sum(out**2) == pytest.approx(np.sum(data**2) - removed / m, rel=1e-10, abs=1e-12)
    # surviving bins untouched
    kept = np.fft.fft(out, axis=0)[cut:m - cut + 1]
    assert np.allclose(kept, spec[cut:m - cut + 1], atol=1e-9)


@given(st.integers(0, 2**31 - 1), st.integers(0, 6))
def test_planted_steps_within_bound(seed, c):
    _, truth = generate(SynthSpec(m=20, n=15, c_truth=c, decimate=1, seed=seed))
    assert truth.shifts[0] == 0
    assert np.abs(np.diff(truth.shifts)).max(initial=0) <= c
