import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from guided_ssrt.maxima import (Peak, RefineParams, canonical, dedup_pi, local_maxima, pad_theta,
                                scale_space_refine, threshold_peaks, track_persistence)
from guided_ssrt.transform import Sinogram, SinogramGrid


def _sino(values, wrap=False):
    n, m = values.shape
    if wrap:
        th = np.arange(n) * 180.0 / n
    else:
        th = np.arange(n, dtype=float) * 0.5  # covers only [0, n/2) degrees
    half = (m - 1) / 2.0
    return Sinogram(SinogramGrid(th, -half, half), values)


def _bump(shape, t0, r0, s=3.0, amp=1.0):
    t, r = np.mgrid[:shape[0], :shape[1]]
    return amp * np.exp(-((t - t0) ** 2 + (r - r0) ** 2) / (2 * s * s))


def test_quadratic_peak_subgrid_exact():
    t, r = np.mgrid[:40, :41]
    vals = 1000 - (t - 17.3) ** 2 - 2 * (r - 22.8) ** 2
    s = _sino(vals)
    peaks = local_maxima(s)
    assert len(peaks) == 1
    p = peaks[0]
    assert p.index == (17, 23)
    assert p.theta == pytest.approx(17.3 * 0.5)
    assert p.rho == pytest.approx(22.8 - 20)


def test_planted_bump():
    s = _sino(_bump((60, 61), 30.4, 25.7))
    (p,) = local_maxima(s)
    assert abs(p.theta - 30.4 * 0.5) < 0.05
    assert abs(p.rho - (25.7 - 30)) < 0.1


def test_constant_has_no_maxima():
    assert local_maxima(_sino(np.full((20, 21), 3.0))) == []
    assert local_maxima(_sino(np.full((20, 21), 3.0), wrap=True)) == []


def test_plateau_yields_one():
    v = np.zeros((20, 21))
    v[10, 10] = v[10, 11] = 5.0
    assert len(local_maxima(_sino(v))) == 1


def test_two_bumps():
    v = _bump((60, 61), 15, 15) + _bump((60, 61), 45, 45, amp=0.5)
    peaks = local_maxima(_sino(v))
    assert sorted(p.index for p in peaks) == [(15, 15), (45, 45)]


def test_neighborhood_validation():
    with pytest.raises(ValueError):
        local_maxima(_sino(np.zeros((5, 5))), neighborhood=4)


def test_pad_theta_flips_rho():
    v = np.arange(12.0).reshape(3, 4)
    p = pad_theta(v, 1, True)
    np.testing.assert_array_equal(p[0], v[2, ::-1])
    np.testing.assert_array_equal(p[-1], v[0, ::-1])
    np.testing.assert_array_equal(p[1:-1], v)
    q = pad_theta(v, 2, False, -1.0)
    assert (q[:2] == -1).all()


def test_seam_peak_found_once():
    # a bump straddling theta = 0 / 180 appears at rho on one side and -rho on the other
    n, m = 180, 81
    t, r = np.mgrid[:n, :m]
    rr = np.arange(m) - 40
    v = np.exp(-((t - 0.0) ** 2) / 8 - (rr[None, :] - 12) ** 2 / 8)
    v += np.exp(-((t - 180.0) ** 2) / 8 - (rr[None, :] + 12) ** 2 / 8)
    peaks = local_maxima(_sino(v, wrap=True))
    assert len(peaks) == 1
    assert peaks[0].index == (0, 52)


def test_threshold():
    ps = [Peak(0, 0, v) for v in (1.0, 5.0, 10.0)]
    assert [p.value for p in threshold_peaks(ps, 10.0, 0.5)] == [5.0, 10.0]
    with pytest.raises(ValueError):
        threshold_peaks(ps, 0.0, 0.5)


def test_persistence_orders_bumps():
    v = _bump((80, 81), 25, 25, s=6) + _bump((80, 81), 25, 40, s=1.0, amp=0.3)
    s = _sino(v)
    peaks = local_maxima(s, 3)
    out = track_persistence(s, peaks, RefineParams(smooth_sigma=(1, 1), max_iterations=40))
    per = {p.index: p.persistence for p in out}
    assert per[(25, 25)] == 40
    assert per[(25, 40)] < 40
    kept = scale_space_refine(s, peaks, RefineParams(smooth_sigma=(1, 1), max_iterations=40,
                                                     min_persistence=40))
    assert [p.index for p in kept] == [(25, 25)]


def test_merge_ends_weaker_track():
    # two close bumps coalesce; the weaker one dies
    v = _bump((60, 61), 30, 27, s=2) + _bump((60, 61), 30, 34, s=2, amp=0.8)
    s = _sino(v)
    peaks = local_maxima(s, 3)
    assert len(peaks) == 2
    out = track_persistence(s, peaks, RefineParams(smooth_sigma=(1, 1), max_iterations=30))
    per = {p.index[1]: p.persistence for p in out}
    assert per[27] == 30 and per[34] < 30


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([0.5, 2.0, 4.0]))
def test_refine_scale_invariant_and_subset(seed, c):
    rng = np.random.default_rng(seed)
    v = sum(_bump((50, 51), *rng.uniform(5, 45, 2), s=rng.uniform(1, 4), amp=rng.uniform(0.2, 1))
            for _ in range(4))
    s = _sino(v)
    params = RefineParams(max_iterations=15, min_persistence=5)
    peaks = local_maxima(s, 3)
    a = scale_space_refine(s, peaks, params)
    b = scale_space_refine(s.scaled(c), local_maxima(s.scaled(c), 3), params)
    assert [(p.index, p.persistence) for p in a] == [(p.index, p.persistence) for p in b]
    assert {p.index for p in a} <= {p.index for p in peaks}


def test_tracking_needs_index():
    s = _sino(np.zeros((5, 5)))
    with pytest.raises(ValueError):
        track_persistence(s, [Peak(0, 0, 1)], RefineParams())


@pytest.mark.parametrize("rho, theta, expect", [
    (5.0, 10.0, (5.0, 10.0)),
    (5.0, 190.0, (-5.0, 10.0)),
    (5.0, -10.0, (-5.0, 170.0)),
    (5.0, 360.0, (5.0, 0.0)),
])
def test_canonical(rho, theta, expect):
    assert canonical(rho, theta) == pytest.approx(expect)


def test_dedup_cases():
    a = Peak(5.0, 179.6, 2.0)
    b = Peak(-5.2, 0.1, 1.0)      # same line across the seam
    c = Peak(5.0, 10.0, 3.0)
    d = Peak(5.5, 10.6, 1.0)      # near duplicate of c
    e = Peak(-5.0, 10.0, 1.0)     # different line
    out = dedup_pi([a, b, c, d, e])
    assert len(out) == 3
    assert all(0 <= p.theta < 180 for p in out)
    assert dedup_pi(out) == out
