import math

import numpy as np
import pytest

from guided_ssrt.guided import (AFTER_POWER, BEFORE_POWER, GuidanceParams, gamma_map,
                                guidance_weights, guided_image, guided_radon, guided_ssrt,
                                projection_direction)
from guided_ssrt.hessian import OrientationField, orientation_fields
from guided_ssrt.image import GroundTruthLine, SyntheticSpec, synth_bars
from guided_ssrt.transform import SinogramGrid, SsrtParams, radon, ssrt_direct


def _uniform_field(shape, angle_deg, valid=True):
    a = math.radians(angle_deg)
    return OrientationField(np.full(shape, math.cos(a)), np.full(shape, math.sin(a)),
                            np.full(shape, valid))


def test_projection_direction_is_unit():
    for th in (0, 33, 90, 179):
        px, py = projection_direction(th)
        assert math.hypot(px, py) == pytest.approx(1.0)
        # orthogonal to the rho axis direction
        assert px * math.cos(math.radians(th)) + py * math.sin(math.radians(th)) == pytest.approx(0)


@pytest.mark.parametrize("offset, M", [(0, 100), (90, 3), (45, 100), (30, 2), (60, 7)])
def test_gamma_closed_form(offset, M):
    theta = 20.0
    f = _uniform_field((3, 3), theta + 90 + offset)
    g = gamma_map(f, theta, M)
    assert g[0, 0] == pytest.approx(abs(math.cos(math.radians(offset))) ** M, rel=1e-9, abs=1e-30)


def test_gamma_45_degrees():
    g = gamma_map(_uniform_field((2, 2), 45), 0.0, 100)
    assert g[0, 0] == pytest.approx(2.0 ** -50, rel=1e-9)


def test_gamma_invalid_is_zero():
    g = gamma_map(_uniform_field((2, 2), 90, valid=False), 0.0, 100)
    assert (g == 0).all()


def test_aligned_field_reproduces_radon(rng):
    img = rng.random((25, 25))
    theta = 35.0
    grid = SinogramGrid(np.array([theta]), -25, 25)
    field = _uniform_field(img.shape, theta + 90)
    g = guided_radon(img, [field], grid, GuidanceParams(100, (1,)))
    np.testing.assert_allclose(g.values, radon(img, grid).values, rtol=1e-12, atol=1e-12)


def test_guided_matches_guided_image(rng):
    img = rng.random((30, 30)) * 100
    fields = orientation_fields(img, (1.5, 3))
    grid = SinogramGrid.for_image(img.shape, 0, 20)
    p = GuidanceParams(8, (1.5, 3))
    g = guided_radon(img, fields, grid, p)
    for i, th in enumerate(grid.theta_values):
        row = radon(guided_image(img, fields, th, p), SinogramGrid(np.array([th]), grid.rho_min,
                                                                  grid.rho_max)).values[0]
        np.testing.assert_allclose(g.values[i], row, rtol=1e-9, atol=1e-9)


def test_guided_ssrt_vs_direct(rng):
    img = rng.random((20, 20))
    fields = orientation_fields(img, (2,))
    p = GuidanceParams(4, (2,))
    grid = SinogramGrid.for_image(img.shape, 2, 45, 0.1)
    fast = guided_ssrt(img, fields, grid, SsrtParams(2), p).values
    for i, th in enumerate(grid.theta_values):
        fh = guided_image(img, fields, th, p)
        slow = ssrt_direct(fh, grid.rho_values, np.full(grid.n_rho, th), 2)
        assert np.abs(fast[i] - slow).max() <= 1e-3 * np.abs(slow).max()


def _two_bars():
    bars = (GroundTruthLine.from_center((0, -30), 90, 9, 70),   # horizontal
            GroundTruthLine.from_center((0, 30), 0, 9, 70))      # vertical
    img, _ = synth_bars(SyntheticSpec((121, 121), bars))
    return img


def test_cross_orientation_suppression():
    img = _two_bars()
    fields = orientation_fields(img, (3, 8))
    w = guidance_weights(fields, 90.0, GuidanceParams(100, (3, 8)))
    f = img.pixels
    horiz = (f * w)[:60].sum()
    vert = (f * w)[60:].sum()
    assert horiz > 1e3 * vert


def test_monotone_in_exponent():
    img = _two_bars()
    fields = orientation_fields(img, (3,))
    grid = SinogramGrid.for_image(img.shape, 0, 10)
    masses = [guided_radon(img, fields, grid, GuidanceParams(m, (3,))).values.sum()
              for m in (1, 4, 16, 100)]
    assert all(a >= b for a, b in zip(masses, masses[1:]))


def test_average_after_dominates_before():
    img = _two_bars()
    fields = orientation_fields(img, (2, 6))
    for th in (0.0, 37.0, 90.0):
        after = guidance_weights(fields, th, GuidanceParams(10, (2, 6), average=AFTER_POWER))
        before = guidance_weights(fields, th, GuidanceParams(10, (2, 6), average=BEFORE_POWER))
        assert (after >= before - 1e-15).all()


def test_params_validation():
    with pytest.raises(ValueError):
        GuidanceParams(0)
    with pytest.raises(ValueError):
        GuidanceParams(10, ())
    with pytest.raises(ValueError):
        GuidanceParams(10, average="median")


def test_field_shape_mismatch(rng):
    img = rng.random((10, 10))
    grid = SinogramGrid.for_image(img.shape, 0, 30)
    with pytest.raises(ValueError):
        guided_radon(img, [_uniform_field((9, 10), 0)], grid, GuidanceParams())
    with pytest.raises(ValueError):
        guided_radon(img, [], grid, GuidanceParams())
