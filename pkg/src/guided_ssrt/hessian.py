"""Scale-normalised Hessian, its 2x2 eigen-analysis, and the masked field of
unit vectors running along bright ridges."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .image import ImageGrid, as_image

BRIGHT = "bright"
DARK = "dark"

# eigenvector denominators below this fraction of |l1|+|l2| are treated as degenerate
DEGENERATE_RTOL = 1e-12
# |lambda_max| below this fraction of its image maximum is treated as flat
FLAT_RTOL = 1e-9


def derivative_kernels(sigma: float, truncation: float = 4.0):
    """Sampled Gaussian and its first two derivatives as correlation kernels.

    The kernels are corrected on their truncated support so that they are
    exact on polynomials up to degree two: the smoothing kernel has unit sum,
    the first-derivative kernel maps ``x`` to 1 and the second-derivative
    kernel sums to zero and maps ``x**2`` to 2.
    """
    if not sigma > 0:
        raise ValueError(f"sigma_h must be positive, got {sigma}")
    radius = max(1, int(math.ceil(truncation * sigma)))
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (k / sigma) ** 2)
    g0 = g / g.sum()
    g1 = k * g0
    g1 /= np.sum(k * g1)
    g2 = (k ** 2 / sigma ** 2 - 1.0) * g0
    g2 -= (g2.sum() / g0.sum()) * g0
    g2 *= 2.0 / np.sum(k ** 2 * g2)
    return g0, g1, g2


@dataclass(frozen=True)
class HessianField:
    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    sigma_h: float

    @property
    def lambda_max(self) -> np.ndarray:
        # lambda2 carries the larger magnitude by construction
        return self.lambda2


def eigenvalues_2x2(h11, h12, h22):
    """Eigenvalues ordered so that ``|lambda2| >= |lambda1|``."""
    half_tr = 0.5 * (h11 + h22)
    disc = np.sqrt((0.5 * (h11 - h22)) ** 2 + h12 ** 2)
    la = half_tr + disc
    lb = half_tr - disc
    a_big = np.abs(la) >= np.abs(lb)
    lam2 = np.where(a_big, la, lb)
    lam1 = np.where(a_big, lb, la)
    return lam1, lam2


def hessian_field(img: ImageGrid, sigma_h: float, truncation: float = 4.0) -> HessianField:
    """``sigma_h**2`` times the Gaussian second derivatives of the image.

    Filtering is separable with edge replication at the borders; x runs
    along columns and y along rows.
    """
    g0, g1, g2 = derivative_kernels(sigma_h, truncation)
    f = as_image(img).pixels
    s2 = sigma_h ** 2

    def sep(kx, ky):
        tmp = ndimage.correlate1d(f, kx, axis=1, mode="nearest")
        return s2 * ndimage.correlate1d(tmp, ky, axis=0, mode="nearest")

    h11 = sep(g2, g0)
    h22 = sep(g0, g2)
    h12 = sep(g1, g1)
    lam1, lam2 = eigenvalues_2x2(h11, h12, h22)
    return HessianField(h11, h12, h22, lam1, lam2, float(sigma_h))


@dataclass(frozen=True)
class OrientationField:
    """Unit vectors along the structure where the ridge mask holds, zero elsewhere."""

    nx_perp: np.ndarray
    ny_perp: np.ndarray
    valid: np.ndarray

    @property
    def shape(self):
        return self.valid.shape

    def angle_deg(self) -> np.ndarray:
        """Direction of ``n_perp`` folded into [0, 180); NaN where invalid."""
        ang = np.degrees(np.arctan2(self.ny_perp, self.nx_perp)) % 180.0
        return np.where(self.valid, ang, np.nan)


def max_eigenvector(hf: HessianField):
    """Unit eigenvector of ``lambda_max`` and a flag for non-degenerate pixels.

    Uses whichever of the two equivalent component forms ``(h12, l - h11)``
    and ``(l - h22, h12)`` is better conditioned.
    """
    lam = hf.lambda_max
    ax, ay = hf.h12, lam - hf.h11
    bx, by = lam - hf.h22, hf.h12
    na = np.hypot(ax, ay)
    nb = np.hypot(bx, by)
    use_a = na >= nb
    vx = np.where(use_a, ax, bx)
    vy = np.where(use_a, ay, by)
    norm = np.maximum(na, nb)
    scale = np.abs(hf.lambda1) + np.abs(hf.lambda2)
    ok = norm > DEGENERATE_RTOL * scale
    safe = np.where(ok, norm, 1.0)
    return np.where(ok, vx / safe, 0.0), np.where(ok, vy / safe, 0.0), ok


def orientation_field(hf: HessianField, polarity: str = BRIGHT) -> OrientationField:
    if polarity not in (BRIGHT, DARK):
        raise ValueError(f"polarity must be 'bright' or 'dark', got {polarity!r}")
    nx, ny, ok = max_eigenvector(hf)
    lam = hf.lambda_max
    ridge = -lam > 0 if polarity == BRIGHT else lam > 0
    peak = float(np.max(np.abs(lam))) if lam.size else 0.0
    valid = ok & ridge & (np.abs(lam) >= FLAT_RTOL * peak) & (peak > 0)
    return OrientationField(np.where(valid, -ny, 0.0), np.where(valid, nx, 0.0), valid)


def orientation_fields(img: ImageGrid, scales: Sequence[float], polarity: str = BRIGHT,
                       truncation: float = 4.0) -> list[OrientationField]:
    return [orientation_field(hessian_field(img, s, truncation), polarity) for s in scales]


def average_gamma_scales(fields: Sequence[OrientationField], theta: float, M: float) -> np.ndarray:
    """Mean over Hessian scales of the per-scale orientation weight ``Gamma**M``."""
    from .guided import gamma_map

    if not fields:
        raise ValueError("at least one orientation field is required")
    shape = fields[0].shape
    if any(f.shape != shape for f in fields):
        raise ValueError("orientation fields must share one image size")
    return np.mean([gamma_map(f, theta, M) for f in fields], axis=0)


def write_debug_maps(prefix: str, hf: HessianField, of: OrientationField) -> list[str]:
    """Dump ``lambda_max`` and orientation angle maps as PGM and CSV files."""
    from .image import save_pgm

    written = []
    lam = -hf.lambda_max
    span = np.max(np.abs(lam)) or 1.0
    save_pgm(f"{prefix}_lambda_max.pgm", 127.5 + 127.5 * lam / span)
    np.savetxt(f"{prefix}_lambda_max.csv", hf.lambda_max, delimiter=",", fmt="%.9g")
    ang = of.angle_deg()
    save_pgm(f"{prefix}_angle.pgm", np.nan_to_num(ang * (255.0 / 180.0), nan=0.0))
    np.savetxt(f"{prefix}_angle.csv", ang, delimiter=",", fmt="%.6g")
    written += [f"{prefix}_lambda_max.pgm", f"{prefix}_lambda_max.csv",
                f"{prefix}_angle.pgm", f"{prefix}_angle.csv"]
    return written
