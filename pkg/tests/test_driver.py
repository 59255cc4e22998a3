from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgorka.driver import (FgConfig, compose_digits, compute_levels, coverage, digit_decompose,
                           pad_to_multiple, reconstruct, split_path, track, track_multi)
from fgorka.metrics import shift_error
from fgorka.path_solver import SolverConfig, solve_path
from fgorka.shiftops import ShiftPath, shift_apply
from fgorka.synthgen import SynthSpec, default_kernel, generate


def _balanced_digits(value, r, count):
    # bottom-up base conversion with digits in [-(r-1)/2, (r-1)/2]
    h = (r - 1) // 2
    out = []
    for _ in range(count):
        d = (value + h) % r - h
        out.append(d)
        value = (value - d) // r
    assert value == 0
    return out


def test_level_examples():
    assert compute_levels(13, 3, 0) == 2
    assert compute_levels(5, 2, 0, "up") == 2
    assert compute_levels(5, 2, 0, "down") == 1
    assert compute_levels(1, 3, 0) == 0
    assert compute_levels(1, 2, 0) == 0


def test_level_errors():
    with pytest.raises(ValueError):
        compute_levels(0, 2)
    with pytest.raises(ValueError):
        compute_levels(3, 1)
    with pytest.raises(ValueError):
        compute_levels(3, 2, -1)
    with pytest.raises(ValueError):
        compute_levels(3, 2, 0, "nearest")


@given(st.integers(1, 500), st.integers(2, 9), st.integers(0, 6))
def test_rounding_up_covers_bound(c, r, j):
    level = compute_levels(c, r, j, "up")
    assert coverage(r, level, j) >= c
    if level > 0:
        # minimal: one level fewer does not suffice
        assert coverage(r, level - 1, j) < c


@given(st.integers(1, 500), st.integers(2, 9), st.integers(0, 6))
def test_rounding_down_never_exceeds_up(c, r, j):
    down = compute_levels(c, r, j, "down")
    up = compute_levels(c, r, j, "up")
    assert down <= up <= down + 1


def test_coverage_closed_form():
    assert coverage(3, 2, 0) == 13
    assert coverage(2, 2, 0) == 7
    assert coverage(2, 0, 1) == Fraction(3, 2)


@given(st.lists(st.integers(-40, 40), min_size=2, max_size=12), st.sampled_from([2, 3, 4, 5]))
def test_split_path(shifts, r):
    coarse, diff = split_path(np.array(shifts), r)
    base = np.array(shifts) - shifts[0]
    assert np.array_equal(r * coarse + diff, base)
    assert np.abs(np.diff(diff)).max(initial=0) <= r // 2


@given(st.lists(st.integers(-13, 13), min_size=1, max_size=10))
def test_ternary_digits_match_base_conversion(steps):
    shifts = np.concatenate([[0], np.cumsum(steps)])
    digits = digit_decompose(shifts, 3, 3)
    assert np.array_equal(compose_digits(digits, 3), shifts)
    for i, s in enumerate(steps):
        assert [int(digits[j, i + 1] - digits[j, i]) for j in range(3)] == _balanced_digits(s, 3, 3)


def test_binary_digits_are_not_unique():
    # 5 = 1 + 0*2 + 1*4 = -1 + 1*2 + 1*4, both with digits in {-1, 0, 1}
    a = np.array([[0, 1], [0, 0], [0, 1]])
    b = np.array([[0, -1], [0, 1], [0, 1]])
    assert compose_digits(a, 2).tolist() == compose_digits(b, 2).tolist() == [0, 5]
    ours = digit_decompose(np.array([0, 5]), 2, 3)
    assert compose_digits(ours, 2).tolist() == [0, 5]
    assert np.abs(np.diff(ours, axis=1)).max() <= 1


def test_pad_to_multiple(rng):
    data = rng.standard_normal((10, 7, 3))
    padded, pads = pad_to_multiple(data, 4)
    assert padded.shape == (12, 8, 3) and pads == (2, 1)
    assert np.array_equal(padded[:10, :7], data)
    assert not padded[10:].any() and not padded[:, 7:].any()
    same, none = pad_to_multiple(rng.standard_normal((8, 3)), 4)
    assert none == (0,) and same.shape == (8, 3)


def test_config_validation():
    with pytest.raises(ValueError):
        FgConfig(0, 1.0, 2)
    with pytest.raises(ValueError):
        FgConfig(2, 1.0, 2, r=3, kind="wavelet")
    with pytest.raises(ValueError):
        FgConfig(2, 1.0, 2, kind="nearest")
    with pytest.raises(ValueError):
        FgConfig(2, -1.0, 2)
    with pytest.raises(ValueError):
        FgConfig(2, 1.0, 2, l_rounding="mid")


def test_coarse_bound_rules():
    assert FgConfig(13, 1.0, 2, r=3).coarse_bound() == 1
    assert FgConfig(1, 1.0, 2, r=2).coarse_bound() == 1
    # clamped level count that under-covers falls back to the true bound
    cfg = FgConfig(2, 1.0, 2, r=3, l_rounding="down")
    assert cfg.levels == 0 and cfg.coarse_bound() == 2


def test_zero_levels_reproduce_plain_solver(rng):
    data = rng.standard_normal((24, 10))
    cfg = FgConfig(1, 10.0, 3, r=2)
    assert cfg.levels == 0
    res = track(data, cfg)
    sol = solve_path(data, SolverConfig(1, 3, 10.0))
    assert np.array_equal(res.path.shifts, sol.path.shifts)
    assert res.value == sol.value


@pytest.mark.parametrize("kind", ["fourier", "wavelet", "optimal"])
@pytest.mark.parametrize("seed", range(3))
def test_planted_integer_path_recovered(kind, seed):
    spec = SynthSpec(m=96, n=30, c_truth=4, decimate=1, seed=seed)
    data, truth = generate(spec)
    res = track(data, FgConfig(4, 100.0, 5, r=2, kind=kind))
    assert res.levels == 2
    assert shift_error(res.path, truth) == 0


@pytest.mark.parametrize("kind", ["fourier", "optimal"])
def test_odd_factor_keeps_coarse_rounding(kind):
    # the coarse level follows positions rather than balanced step digits,
    # and correction steps bounded by floor(r/2) cannot repair every step
    data, truth = generate(SynthSpec(m=96, n=30, c_truth=4, decimate=1, seed=0))
    res = track(data, FgConfig(4, 100.0, 5, r=3, kind=kind))
    top = res.per_level[0].path
    assert np.abs(3 * top - (truth.shifts - truth.shifts[0])).max() <= 3
    assert 0 < shift_error(res.path, truth) < 0.5


def test_level_records_obey_digit_rules():
    data, _ = generate(SynthSpec(m=90, n=25, c_truth=6, decimate=1, seed=2))
    res = track(data, FgConfig(6, 100.0, 4, r=3, j_up=1))
    assert [rec.level for rec in res.per_level] == list(range(res.levels, -2, -1))
    for rec in res.per_level[1:]:
        assert np.abs(np.diff(rec.digit)).max() <= 1
    digits = res.digits()
    assert digits.shape == (res.levels + 2, 25)
    assert np.array_equal(compose_digits(digits, 3), res.path.shifts)
    # final steps stay within the covered bound
    assert np.abs(np.diff(res.path.shifts)).max() <= 3 * coverage(3, res.levels, 1)


def test_upsampled_object_shape_and_denominator(rng):
    data = rng.standard_normal((20, 6))
    res = track(data, FgConfig(1, 10.0, 2, r=2, j_up=2))
    assert res.path.denominator == 4
    assert res.object.shape == (80, 6)
    assert reconstruct(res).shape == (20, 6)


def test_padding_recorded(rng):
    data = rng.standard_normal((25, 6))
    res = track(data, FgConfig(5, 10.0, 2, r=2))
    assert res.levels == 2 and res.pad == (3,)
    assert res.object.shape == (28, 6)


def test_runs_are_nested_in_j():
    data, _ = generate(SynthSpec(m=40, n=12, c_truth=4, decimate=5, seed=3))
    full = track(data, FgConfig(1, 100.0, 4, r=2, j_up=3))
    for j in range(3):
        res = track(data, FgConfig(1, 100.0, 4, r=2, j_up=j))
        assert res.path == full.path_at(-j)


def test_reconstruction_matches_data_when_unsmoothed(rng):
    data = rng.standard_normal((16, 5))
    res = track(data, FgConfig(1, 0.0, 2, r=2))
    assert np.allclose(reconstruct(res), data, atol=1e-12)


def test_two_dimensional_tracking(rng):
    kernel = default_kernel()
    blob = np.outer(kernel, kernel)
    frame = np.zeros((24, 24))
    frame[:11, :11] = blob
    truth = np.array([[0, 0], [2, -1], [3, -3], [5, -2], [4, 0], [6, 1]])
    data = shift_apply(np.repeat(frame[..., None], 6, axis=2), truth)
    res = track(data, FgConfig(2, 10.0, 3, r=2))
    assert res.levels == 1
    assert np.array_equal(res.path.shifts, truth)


def _pulse(m, start):
    col = np.zeros(m)
    col[start:start + 11] = default_kernel()
    return col


def _bounded_walk(rng, n, c, limit):
    out = [0]
    for _ in range(n - 1):
        step = int(rng.integers(-c, c + 1))
        if abs(out[-1] + step) > limit:
            step = -step
        out.append(out[-1] + step)
    return np.array(out)


def _two_pulses(seed, n=20, m=128, weight=0.4):
    rng = np.random.default_rng(seed)
    p1 = _bounded_walk(rng, n, 2, 8)
    p2 = _bounded_walk(rng, n, 2, 8)
    a = shift_apply(np.repeat(_pulse(m, 20)[:, None], n, axis=1), p1)
    b = shift_apply(np.repeat(weight * _pulse(m, 84)[:, None], n, axis=1), p2)
    return a + b, p1, p2


def test_multi_object_peeling():
    data, p1, p2 = _two_pulses(0)
    results = track_multi(data, FgConfig(2, 1e4, 8, r=2), 2)
    assert shift_error(results[0].path, ShiftPath(p1)) == 0
    assert shift_error(results[1].path, ShiftPath(p2)) == 0
    norms = [np.linalg.norm(data)]
    residual = data
    for res in results:
        residual = residual - reconstruct(res)
        norms.append(np.linalg.norm(residual))
    assert all(x > y for x, y in zip(norms, norms[1:]))


@pytest.mark.parametrize("seed", range(4))
def test_dominant_object_found_first(seed):
    data, p1, _ = _two_pulses(seed)
    first = track_multi(data, FgConfig(2, 1e4, 8, r=2), 1)[0]
    assert shift_error(first.path, ShiftPath(p1)) == 0


def test_multi_single_round_equals_track(rng):
    data = rng.standard_normal((16, 6))
    cfg = FgConfig(2, 10.0, 2)
    one = track_multi(data, cfg, 1)[0]
    ref = track(data, cfg)
    assert one.path == ref.path and one.value == ref.value


def test_multi_per_object_mu(rng):
    data = rng.standard_normal((16, 6))
    res = track_multi(data, FgConfig(1, 10.0, 2), 2, per_object_mu=[1e6, 5.0])
    assert len(res) == 2
    with pytest.raises(ValueError):
        track_multi(data, FgConfig(1, 10.0, 2), 2, per_object_mu=[1.0])
    with pytest.raises(ValueError):
        track_multi(data, FgConfig(1, 10.0, 2), 0)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        track(np.zeros(5), FgConfig(1, 1.0, 2))
    bad = np.zeros((8, 4))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        track(bad, FgConfig(1, 1.0, 2))
