"""Orientation-guided Radon and SSRT.

For each projection angle the image is reweighted by how well the local
ridge direction agrees with the integration direction, raised to a large
power, before being projected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _accel
from .hessian import BRIGHT, DARK, OrientationField
from .image import ImageGrid, as_image
from .transform import Sinogram, SinogramGrid, SsrtParams, _check_cover, _trig, ssrt_from_radon

AFTER_POWER = "after"
BEFORE_POWER = "before"
_MODES = {AFTER_POWER: _accel.AVERAGE_AFTER_POWER, BEFORE_POWER: _accel.AVERAGE_BEFORE_POWER}


@dataclass(frozen=True)
class GuidanceParams:
    m_exponent: float = 100.0
    hessian_scales: tuple[float, ...] = (3.0, 8.0)
    polarity: str = BRIGHT
    average: str = AFTER_POWER  # average Gamma**M over scales, or Gamma then **M

    def __post_init__(self):
        object.__setattr__(self, "hessian_scales", tuple(float(s) for s in self.hessian_scales))
        if self.m_exponent < 1:
            raise ValueError(f"M must be >= 1, got {self.m_exponent}")
        if not self.hessian_scales or any(s <= 0 for s in self.hessian_scales):
            raise ValueError("need at least one positive Hessian scale")
        if self.polarity not in (BRIGHT, DARK):
            raise ValueError(f"polarity must be 'bright' or 'dark', got {self.polarity!r}")
        if self.average not in _MODES:
            raise ValueError(f"average must be one of {sorted(_MODES)}, got {self.average!r}")


def projection_direction(theta: float) -> tuple[float, float]:
    """Unit vector along the lines integrated at rho-axis angle ``theta``."""
    t = math.radians(theta)
    return -math.sin(t), math.cos(t)


def gamma_map(field: OrientationField, theta: float, M: float) -> np.ndarray:
    """``|n_perp . p_theta| ** M``, zero where the field is invalid."""
    px, py = projection_direction(theta)
    gam = np.minimum(np.abs(px * field.nx_perp + py * field.ny_perp), 1.0)
    return np.where(field.valid, gam ** M, 0.0)


def _check_fields(img_shape, fields: Sequence[OrientationField]):
    if not fields:
        raise ValueError("at least one orientation field is required")
    for f in fields:
        if f.shape != tuple(img_shape):
            raise ValueError(f"orientation field shape {f.shape} != image shape {tuple(img_shape)}")


def guidance_weights(fields: Sequence[OrientationField], theta: float,
                     params: GuidanceParams) -> np.ndarray:
    px, py = projection_direction(theta)
    nx = np.stack([f.nx_perp for f in fields])
    ny = np.stack([f.ny_perp for f in fields])
    valid = np.stack([f.valid for f in fields])
    return _accel.guided_weights_numpy(nx, ny, valid, px, py, params.m_exponent,
                                       _MODES[params.average])


def guided_image(img: ImageGrid, fields: Sequence[OrientationField], theta: float,
                 params: GuidanceParams) -> ImageGrid:
    """The image reweighted for projection angle ``theta``."""
    img = as_image(img)
    _check_fields(img.shape, fields)
    return ImageGrid(img.pixels * guidance_weights(fields, theta, params))


def guided_radon(img: ImageGrid, fields: Sequence[OrientationField], grid: SinogramGrid,
                 params: GuidanceParams, use_numba: bool | None = None) -> Sinogram:
    img = as_image(img)
    _check_fields(img.shape, fields)
    _check_cover(img, grid)
    xs, ys = img.coords()
    c, s = _trig(grid)
    nx = np.stack([f.nx_perp for f in fields])
    ny = np.stack([f.ny_perp for f in fields])
    valid = np.stack([f.valid for f in fields])
    vals = _accel.guided_radon_kernel(img.pixels, nx, ny, valid, xs, ys, c, s,
                                      params.m_exponent, _MODES[params.average],
                                      grid.rho_min, grid.rho_step, grid.n_rho,
                                      use_numba=use_numba)
    return Sinogram(grid, vals)


def guided_ssrt(img: ImageGrid, fields: Sequence[OrientationField], grid: SinogramGrid,
                ssrt_params: SsrtParams, guidance_params: GuidanceParams,
                use_numba: bool | None = None) -> Sinogram:
    return ssrt_from_radon(guided_radon(img, fields, grid, guidance_params, use_numba),
                           ssrt_params)
