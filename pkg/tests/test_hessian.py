import math

import numpy as np
import pytest
from scipy import ndimage

from guided_ssrt.hessian import (BRIGHT, DARK, derivative_kernels, eigenvalues_2x2, hessian_field,
                                 max_eigenvector, orientation_field, orientation_fields,
                                 average_gamma_scales, write_debug_maps)
from guided_ssrt.image import GroundTruthLine, SyntheticSpec, pixel_coords, synth_bars


def _xy(h, w):
    xs, ys = pixel_coords(h, w)
    return np.meshgrid(xs, ys)


@pytest.mark.parametrize("sigma", [0.8, 2.0, 5.0])
def test_kernel_moments(sigma):
    g0, g1, g2 = derivative_kernels(sigma)
    r = (len(g0) - 1) // 2
    u = np.arange(-r, r + 1, dtype=float)
    assert g0.sum() == pytest.approx(1.0)
    # correlation-form kernels: sum g1 * u = 1, sum g2 * u^2 / 2 = 1
    assert (g1 * u).sum() == pytest.approx(1.0)
    assert g1.sum() == pytest.approx(0.0, abs=1e-12)
    assert (g2 * u * u).sum() / 2 == pytest.approx(1.0)
    assert g2.sum() == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("sigma", [2.0, 5.0])
def test_quadratic_exact(sigma):
    X, Y = _xy(101, 101)
    hf = hessian_field(X ** 2 + 3 * X * Y - Y ** 2, sigma)
    c = slice(40, 61)
    s2 = sigma ** 2
    np.testing.assert_allclose(hf.h11[c, c], 2 * s2, rtol=1e-9)
    np.testing.assert_allclose(hf.h12[c, c], 3 * s2, rtol=1e-9)
    np.testing.assert_allclose(hf.h22[c, c], -2 * s2, rtol=1e-9)


def test_constant_is_flat():
    hf = hessian_field(np.full((30, 30), 7.0), 2.0)
    for a in (hf.h11, hf.h12, hf.h22, hf.lambda1, hf.lambda2):
        assert np.abs(a).max() < 1e-10
    of = orientation_field(hf)
    assert not of.valid.any()


def test_gaussian_blob_analytic():
    # a Gaussian blob of variance s^2 smoothed at sigma is a blob of variance s^2 + sigma^2
    s, sigma = 6.0, 3.0
    X, Y = _xy(121, 121)
    f = np.exp(-(X ** 2 + Y ** 2) / (2 * s * s))
    v = s * s + sigma * sigma
    amp = s * s / v
    g = amp * np.exp(-(X ** 2 + Y ** 2) / (2 * v))
    gxx = g * (X ** 2 / v - 1) / v
    gxy = g * X * Y / v ** 2
    hf = hessian_field(f, sigma)
    peak = np.abs(gxx).max()
    assert np.abs(hf.h11 / sigma ** 2 - gxx).max() < 5e-3 * peak
    assert np.abs(hf.h12 / sigma ** 2 - gxy).max() < 5e-3 * peak


def test_eigen_invariants(rng):
    h11, h12, h22 = rng.normal(size=(3, 500))
    l1, l2 = eigenvalues_2x2(h11, h12, h22)
    np.testing.assert_allclose(l1 + l2, h11 + h22, atol=1e-12)
    np.testing.assert_allclose(l1 * l2, h11 * h22 - h12 ** 2, atol=1e-10)
    assert (np.abs(l2) >= np.abs(l1) - 1e-15).all()


def test_eigenvector_residual(rng):
    f = rng.random((40, 40))
    hf = hessian_field(f, 1.5)
    vx, vy, ok = max_eigenvector(hf)
    lam = hf.lambda_max
    rx = hf.h11 * vx + hf.h12 * vy - lam * vx
    ry = hf.h12 * vx + hf.h22 * vy - lam * vy
    scale = np.abs(hf.lambda1) + np.abs(hf.lambda2)
    assert (np.hypot(rx, ry)[ok] <= 1e-9 * scale[ok] + 1e-15).all()
    np.testing.assert_allclose(np.hypot(vx, vy)[ok], 1.0)


def _bar_image(direction_deg, width=15, size=121):
    bar = GroundTruthLine.from_center((0, 0), (direction_deg - 90) % 180, width, 90)
    img, _ = synth_bars(SyntheticSpec((size, size), (bar,)))
    return img


@pytest.mark.parametrize("phi", [0.0, 40.0, 90.0, 135.0])
def test_orientation_along_bar(phi):
    img = _bar_image(phi)
    of = orientation_field(hessian_field(img, 4.0))
    c = slice(55, 66)
    ang = of.angle_deg()[c, c]
    assert of.valid[c, c].all()
    err = np.abs((ang - phi + 90) % 180 - 90)
    assert np.median(err) < 1.0


def test_mask_matches_polarity():
    img = _bar_image(30)
    hf = hessian_field(img, 4.0)
    bright = orientation_field(hf, BRIGHT)
    dark = orientation_field(hf, DARK)
    assert (hf.lambda_max[bright.valid] < 0).all()
    assert (hf.lambda_max[dark.valid] > 0).all()
    assert not (bright.valid & dark.valid).any()
    inv = orientation_field(hessian_field(255 - img.pixels, 4.0), DARK)
    np.testing.assert_array_equal(inv.valid, bright.valid)
    with pytest.raises(ValueError):
        orientation_field(hf, "grey")


def test_rotation_equivariance(rng):
    f = ndimage.gaussian_filter(rng.random((60, 60)), 2)
    hf = hessian_field(f, 2.0)
    hr = hessian_field(np.rot90(f).copy(), 2.0)
    # rot90 swaps the axes; diagonal entries swap, h12 flips sign
    np.testing.assert_allclose(np.rot90(hf.h11), hr.h22, atol=1e-12)
    np.testing.assert_allclose(np.rot90(hf.h22), hr.h11, atol=1e-12)
    np.testing.assert_allclose(np.rot90(hf.h12), -hr.h12, atol=1e-12)


def test_linearity(rng):
    a, b = rng.random((2, 30, 30))
    ha, hb, hs = (hessian_field(x, 2.0) for x in (a, b, 2 * a + b))
    np.testing.assert_allclose(hs.h11, 2 * ha.h11 + hb.h11, atol=1e-12)
    np.testing.assert_allclose(hs.h12, 2 * ha.h12 + hb.h12, atol=1e-12)


def test_average_gamma_scales():
    img = _bar_image(0)
    fields = orientation_fields(img, (2, 5))
    avg = average_gamma_scales(fields, 90.0, 10)
    assert avg.shape == img.shape and avg.max() <= 1.0 + 1e-12
    with pytest.raises(ValueError):
        average_gamma_scales([], 0.0, 10)


def test_debug_maps(tmp_path):
    img = _bar_image(20, size=41)
    hf = hessian_field(img, 2.0)
    paths = write_debug_maps(str(tmp_path / "dbg"), hf, orientation_field(hf))
    assert paths and all(__import__("os").path.exists(p) for p in paths)
