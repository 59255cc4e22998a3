from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgorka.metrics import (expected_rounding_error, shift_error, shift_error_exact,
                            sweep_aggregate, sweep_table_csv)
from fgorka.shiftops import ShiftPath

paths = st.lists(st.integers(-50, 50), min_size=2, max_size=12)


def test_constant_offset_is_free():
    assert shift_error([1, 2, 3], [4, 5, 6]) == 0


def test_single_entry_off_by_one():
    for n in (2, 5, 17):
        truth = np.zeros(n, dtype=int)
        rec = truth.copy()
        rec[3 % n] = 1
        assert shift_error_exact(rec, truth) == Fraction(2 * (n - 1), n * n)


def test_common_denominator():
    assert shift_error_exact(ShiftPath([0, 1], 2), ShiftPath([0, 1], 1)) == Fraction(1, 4)
    assert shift_error_exact(ShiftPath([0, 2, 4], 4), [0, 0, 1]) == Fraction(2, 9)


def test_rounding_constant():
    assert expected_rounding_error(4, 5) == Fraction(4, 15)
    # direct average over the uniform steps
    oracle = sum(abs(Fraction(k, 5) - round(Fraction(k, 5))) for k in range(-4, 5)) / 9
    assert oracle == Fraction(4, 15)


def test_two_dimensional_error_sums_axes():
    rec = ShiftPath([[0, 0], [1, 0]])
    truth = ShiftPath([[0, 0], [0, 1]])
    assert shift_error_exact(rec, truth) == 2 * shift_error_exact([0, 1], [0, 0])


def test_length_mismatch():
    with pytest.raises(ValueError):
        shift_error([0, 1], [0, 1, 2])


@given(paths, st.integers(-9, 9), st.integers(-9, 9))
def test_invariances(p, a, b):
    p = np.array(p)
    q = p[::-1].copy()
    base = shift_error_exact(p, q)
    assert shift_error_exact(p + a, q + a) == base
    assert shift_error_exact(p + a, q + b) == base
    assert shift_error_exact(p, p) == 0
    assert shift_error_exact(q, p) == base
    assert base >= 0


@given(paths, st.data())
def test_triangle(p, data):
    n = len(p)
    q = data.draw(st.lists(st.integers(-50, 50), min_size=n, max_size=n))
    s = data.draw(st.lists(st.integers(-50, 50), min_size=n, max_size=n))
    assert shift_error_exact(p, s) <= shift_error_exact(p, q) + shift_error_exact(q, s)


def test_aggregate_single_method():
    rows = [("fourier", p, 0, 0.1 * p) for p in (0, 10, 20)]
    agg = sweep_aggregate(rows)
    assert all(best == "fourier" for best, _ in agg.values())


def test_aggregate_ties_go_to_first_name():
    agg = sweep_aggregate([("wavelet", 10, 0, 0.5), ("optimal", 10, 0, 0.5)])
    assert agg[(10, 0)][0] == "optimal"


@given(st.lists(st.tuples(st.sampled_from(["a", "b", "c"]), st.sampled_from([0, 5, 10]),
                          st.sampled_from([0, 160]), st.floats(0, 5)), min_size=1, max_size=40))
def test_aggregate_matches_argmin(rows):
    agg = sweep_aggregate(rows)
    for (psnr, cut), (best, means) in agg.items():
        errs = {}
        for m, p, c, e in rows:
            if (p, c) == (psnr, cut):
                errs.setdefault(m, []).append(e)
        oracle = {m: float(np.mean(v)) for m, v in errs.items()}
        assert means == pytest.approx(oracle)
        low = min(oracle.values())
        assert best == min(m for m, v in oracle.items() if v == means[best])
        assert means[best] == pytest.approx(low)


def test_table_csv():
    agg = sweep_aggregate([("a", 10, 0, 1.0), ("b", 10, 0, 0.5), ("a", 5, 0, 0.25)])
    lines = sweep_table_csv(agg).strip().splitlines()
    assert lines[0] == "psnr,cut,best,mean_a,mean_b"
    assert lines[1] == "5,0,a,0.25,"
    assert lines[2] == "10,0,b,1,0.5"
