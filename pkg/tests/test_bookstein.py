import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manifold_means.bookstein import (
    bookstein_coords,
    centered_w,
    paired_shape_change_test,
    tetrad_from_coords,
)
from manifold_means.errors import DegenerateTetradError
from manifold_means.stat_kernel import resample_plan
from manifold_means.synthetic import REFERENCE_V, exchangeable_tetrad_pairs, random_rotation

REF = np.array([[0, 0, 0], [2, 0, 0], [1, 1, 0], [1, 0, 1]], dtype=float)


def test_reference_tetrad():
    assert np.allclose(bookstein_coords(REF), [0, 0.5, 0, 0, 0.5], atol=1e-15)


def test_centered_w_cases(rng):
    t = np.array([[1, 2, 3], [-1, -2, -3], [0, 0, 0], [0, 0, 0]], dtype=float)
    w = centered_w(t)
    assert np.allclose(w[:, 1:], 0)
    w = centered_w(REF)
    assert np.allclose(w[:, 0], [1, 0, 0])
    t = rng.standard_normal((4, 3))
    w = centered_w(t)
    for r in range(3):
        for i in range(3):
            assert w[r, i] == pytest.approx(t[i + 1, r] - (t[0, r] + t[1, r]) / 2, abs=1e-14)


def test_literal_component_formulas(rng):
    t = rng.standard_normal((4, 3))
    w = centered_w(t)
    a = 2 * (w[0, 0] ** 2 + w[1, 0] ** 2 + w[2, 0] ** 2)
    b = ((w[1, 0] * w[2, 1] - w[2, 0] * w[1, 1]) ** 2 + (w[2, 0] * w[0, 1] - w[0, 0] * w[2, 1]) ** 2
         + (w[0, 0] * w[1, 1] - w[1, 0] * w[0, 1]) ** 2)
    v1 = (w[0, 0] * w[0, 1] + w[1, 0] * w[1, 1] + w[2, 0] * w[2, 1]) / a
    v3 = (w[0, 0] * w[0, 2] + w[1, 0] * w[1, 2] + w[2, 0] * w[2, 2]) / a
    assert bookstein_coords(t)[[0, 2]] == pytest.approx([v1, v3], rel=1e-12)
    assert bookstein_coords(t)[1] == pytest.approx(np.sqrt(b) / a, rel=1e-12)


def test_coordinate_inverse(rng):
    for _ in range(10):
        v = REFERENCE_V + 0.1 * rng.standard_normal(5)
        v[1] = abs(v[1])
        assert np.allclose(bookstein_coords(tetrad_from_coords(v)), v, atol=1e-12)


def test_degenerate_tetrads():
    t = REF.copy()
    t[2] = [3, 0, 0]
    with pytest.raises(DegenerateTetradError):
        bookstein_coords(t)
    t = REF.copy()
    t[1] = t[0]
    with pytest.raises(DegenerateTetradError):
        bookstein_coords(t)
    batch = np.stack([REF, REF])
    batch[1, 2] = [0.5, 0, 0]
    with pytest.raises(DegenerateTetradError) as info:
        bookstein_coords(batch)
    assert info.value.line == 2


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_similarity_invariance(seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal((4, 3))
    v = bookstein_coords(t)
    R = random_rotation(rng, 3)
    s = rng.uniform(0.1, 10)
    c = rng.standard_normal(3) * 5
    assert np.max(np.abs(bookstein_coords(s * t @ R.T + c) - v)) <= 1e-9 * max(1.0, np.max(np.abs(v)))
    assert v[1] >= 0


def test_reflection_flips_v5(rng):
    t = rng.standard_normal((4, 3))
    v = bookstein_coords(t)
    vr = bookstein_coords(t * [1, 1, -1])
    assert vr[4] == pytest.approx(-v[4])
    assert np.allclose(vr[:4], v[:4])


def test_identical_visits(rng):
    b, _ = exchangeable_tetrad_pairs(rng, 15)
    res = paired_shape_change_test(b, b, resample_plan(1, 200, 15))
    assert res.statistic == 0.0 and res.p_boot == 1.0
    for lo, hi in res.per_coordinate_intervals:
        assert lo <= 0 <= hi
    assert "Bonferroni" in res.bonferroni_note


def test_planted_shift_in_first_coordinate(rng):
    sigma = 0.02
    shift = np.array([5 * sigma, 0, 0, 0, 0])
    b, a = exchangeable_tetrad_pairs(rng, 30, sigma_eye=sigma, shift=shift)
    # Bonferroni level so the four null intervals jointly cover 0 at 95%
    res = paired_shape_change_test(b, a, resample_plan(2, 1000, 30), level=1 - 0.05 / 5)
    lo, hi = res.per_coordinate_intervals[0]
    assert hi < 0  # gamma = before - after
    for lo, hi in res.per_coordinate_intervals[1:]:
        assert lo <= 0 <= hi


def test_length_mismatch(rng):
    b, a = exchangeable_tetrad_pairs(rng, 10)
    with pytest.raises(ValueError):
        paired_shape_change_test(b, a[:9], resample_plan(0, 100, 10))
