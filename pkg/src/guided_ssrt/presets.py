"""Synthetic test scenes and their matching detection settings."""
from __future__ import annotations

import math

from .image import GroundTruthLine, SyntheticSpec
from .pipeline import DetectConfig

# (center_x, center_y, theta_deg, width, length) in the centred, y-down frame
TABLE1_BARS = (
    (-95.0, -110.0, 10.0, 15.0, 200.0),
    (105.0, -95.0, 45.0, 37.0, 220.0),
    (-60.0, 135.0, 120.0, 27.0, 230.0),
    (145.0, 120.0, 140.0, 23.0, 180.0),
    (-205.0, 20.0, 0.0, 15.0, 300.0),
)

TABLE2_ORIENTATIONS = (0.0, 30.0, 60.0, 90.0, 120.0, 150.0)
TABLE2_WIDTHS = (7.0, 13.0, 19.0)


def _bars(rows) -> tuple[GroundTruthLine, ...]:
    return tuple(GroundTruthLine.from_center((cx, cy), th, w, ln) for cx, cy, th, w, ln in rows)


def table1_spec(noise: float = 0.0, seed: int = 0) -> SyntheticSpec:
    """Five bars of widths 15, 37, 27, 23, 15 at normals 10, 45, 120, 140, 0 degrees."""
    return SyntheticSpec((501, 501), _bars(TABLE1_BARS), noise_sigma=noise, rng_seed=seed)


def table1_config() -> DetectConfig:
    return DetectConfig(sigma=10.0, hessian_scales=(6.0, 16.0), m_exponent=100.0)


def table2_layout() -> list[tuple[float, float, float, float, float]]:
    """35 bars in six cells, one orientation per cell, widths cycling 7/13/19.

    Cells form a 3 x 2 grid over a 501 x 501 image. Within a cell the bars
    are parallel, 100 px long and separated by 12 px gaps; the last cell
    holds five bars.
    """
    rows = []
    gap = 12.0
    length = 100.0
    cell_w, cell_h = 501.0 / 3.0, 501.0 / 2.0
    for c, theta in enumerate(TABLE2_ORIENTATIONS):
        col, row = c % 3, c // 3
        cx0 = -250.5 + cell_w * (col + 0.5)
        cy0 = -250.5 + cell_h * (row + 0.5)
        count = 6 if c < 5 else 5
        widths = [TABLE2_WIDTHS[(c + k) % 3] for k in range(count)]
        span = sum(widths) + gap * (count - 1)
        t = math.radians(theta)
        nx, ny = math.cos(t), math.sin(t)
        off = -span / 2.0
        for w in widths:
            d = off + w / 2.0
            rows.append((cx0 + d * nx, cy0 + d * ny, theta, w, length))
            off += w + gap
    return rows


def table2_spec(noise: float = 0.0, seed: int = 0) -> SyntheticSpec:
    return SyntheticSpec((501, 501), _bars(table2_layout()), noise_sigma=noise, rng_seed=seed)


def table2_config() -> DetectConfig:
    return DetectConfig(sigma=5.0, hessian_scales=(3.0, 8.0), m_exponent=100.0)


# short thick bar with a longer, thinner bar continuing it at a 20 degree bend
COLLINEAR_BARS = (
    (-110.0, 0.0, 90.0, 31.0, 100.0),
    (72.2, -44.5, 70.0, 15.0, 260.0),
)


def collinear_spec(noise: float = 0.0, seed: int = 0, include_long: bool = True) -> SyntheticSpec:
    """A short thick vertical bar and a longer thin bar bent 20 degrees off its axis."""
    bars = COLLINEAR_BARS if include_long else COLLINEAR_BARS[:1]
    return SyntheticSpec((501, 501), _bars(bars), noise_sigma=noise, rng_seed=seed)


def collinear_config() -> DetectConfig:
    return DetectConfig(sigma=10.0, hessian_scales=(6.0, 16.0))


def single_bar_spec(noise: float = 0.0, seed: int = 0, theta: float = 30.0, width: float = 23.0,
                    length: float = 250.0, size: int = 401, center=(20.0, -15.0)) -> SyntheticSpec:
    return SyntheticSpec((size, size), _bars([(center[0], center[1], theta, width, length)]),
                         noise_sigma=noise, rng_seed=seed)


def single_config() -> DetectConfig:
    return DetectConfig(sigma=10.0, hessian_scales=(13.28,))


PRESETS = {
    "table1": (table1_spec, table1_config),
    "table2": (table2_spec, table2_config),
    "collinear": (collinear_spec, collinear_config),
    "single": (single_bar_spec, single_config),
}
