"""Radon transform, fast SSRT by 1-D convolution along rho, and the direct
double-sum SSRT used as a reference."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _accel
from .image import ImageGrid, as_image

SINOGRAM_MAGIC = b"SSRT"
SINOGRAM_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")  # 32 bytes


@dataclass(frozen=True)
class SinogramGrid:
    """Sampling of the ``(theta, rho)`` plane."""

    theta_values: np.ndarray
    rho_min: float
    rho_max: float
    rho_step: float = 1.0

    def __post_init__(self):
        th = np.array(self.theta_values, dtype=np.float64).ravel()
        if th.size == 0:
            raise ValueError("theta_values must not be empty")
        if np.any(np.diff(th) <= 0) or th[0] < 0 or th[-1] >= 180:
            raise ValueError("theta_values must be strictly increasing within [0, 180)")
        if not self.rho_step > 0:
            raise ValueError("rho_step must be positive")
        if self.rho_max < self.rho_min:
            raise ValueError("rho_max must be >= rho_min")
        th.setflags(write=False)
        object.__setattr__(self, "theta_values", th)

    @classmethod
    def for_image(cls, shape, sigma: float = 0.0, theta_step: float = 1.0,
                  rho_step: float = 1.0, truncation: float = 4.0) -> "SinogramGrid":
        """Default grid: symmetric rho range covering the half diagonal plus
        the kernel support ``truncation * sigma``."""
        h, w = shape
        half = 0.5 * math.hypot(w - 1, h - 1) + truncation * sigma
        n = math.ceil(half / rho_step - 1e-9)
        thetas = np.arange(0.0, 180.0 - 1e-9, theta_step)
        return cls(thetas, -n * rho_step, n * rho_step, rho_step)

    @property
    def n_theta(self) -> int:
        return self.theta_values.size

    @property
    def n_rho(self) -> int:
        return int(math.floor((self.rho_max - self.rho_min) / self.rho_step + 1e-9)) + 1

    @property
    def rho_values(self) -> np.ndarray:
        return self.rho_min + self.rho_step * np.arange(self.n_rho)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_theta, self.n_rho

    def is_symmetric(self) -> bool:
        return math.isclose(self.rho_min, -(self.rho_min + (self.n_rho - 1) * self.rho_step),
                            abs_tol=1e-9 * self.rho_step)

    def theta_step(self) -> float | None:
        """Uniform theta step if the grid tiles [0, 180) periodically, else None."""
        th = self.theta_values
        if th.size < 2:
            return None
        step = 180.0 / th.size
        if np.allclose(th, th[0] + step * np.arange(th.size), atol=1e-9):
            return step
        return None

    def wraps(self) -> bool:
        """True when rows at theta and theta+180 can be identified by flipping rho."""
        return self.theta_step() is not None and self.is_symmetric()

    def covers(self, shape) -> bool:
        h, w = shape
        a, b = (w - 1) / 2.0, (h - 1) / 2.0
        cx = np.array([-a, a, -a, a])
        cy = np.array([-b, -b, b, b])
        t = np.deg2rad(self.theta_values)[:, None]
        proj = np.cos(t) * cx + np.sin(t) * cy
        hi = self.rho_min + (self.n_rho - 1) * self.rho_step
        tol = 1e-9 * max(1.0, abs(hi))
        return bool(proj.min() >= self.rho_min - tol and proj.max() <= hi + tol)


@dataclass(frozen=True)
class SsrtParams:
    sigma: float
    kernel_truncation: float = 4.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"SSRT sigma must be positive, got {self.sigma}")


@dataclass
class Sinogram:
    grid: SinogramGrid
    values: np.ndarray  # (n_theta, n_rho)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")

    def scaled(self, c: float) -> "Sinogram":
        return Sinogram(self.grid, self.values * c)


def _trig(grid: SinogramGrid):
    t = np.deg2rad(grid.theta_values)
    return np.ascontiguousarray(np.cos(t)), np.ascontiguousarray(np.sin(t))


def _check_cover(img: ImageGrid, grid: SinogramGrid):
    if not grid.covers(img.shape):
        raise ValueError("sinogram rho range does not cover the image at every angle")


def radon(img: ImageGrid, grid: SinogramGrid, use_numba: bool | None = None) -> Sinogram:
    """Radon transform by linear pixel splatting onto the rho axis.

    Every pixel centre is projected at each angle and its value is shared
    between the two nearest rho nodes, so each row carries the full image
    mass: ``sum(row) * rho_step == sum(f)``.
    """
    img = as_image(img)
    _check_cover(img, grid)
    xs, ys = img.coords()
    c, s = _trig(grid)
    vals = _accel.radon_kernel(img.pixels, xs, ys, c, s, grid.rho_min, grid.rho_step,
                               grid.n_rho, use_numba=use_numba)
    return Sinogram(grid, vals)


def gaussian_kernel_1d(sigma: float, truncation: float = 4.0, step: float = 1.0) -> np.ndarray:
    """Sampled ``N(0, sigma^2)`` on ``step`` spacing within ``+-truncation*sigma``,
    normalised to unit sum."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    radius = int(math.floor(truncation * sigma / step + 1e-9))
    k = np.arange(-radius, radius + 1) * step
    g = np.exp(-0.5 * (k / sigma) ** 2)
    return g / g.sum()


def ssrt_from_radon(sino: Sinogram, params: SsrtParams) -> Sinogram:
    """SSRT as the Radon rows convolved along rho with the 1-D Gaussian."""
    kern = gaussian_kernel_1d(params.sigma, params.kernel_truncation, sino.grid.rho_step)
    if kern.size == 1:
        return Sinogram(sino.grid, sino.values.copy())
    vals = ndimage.convolve1d(sino.values, kern, axis=1, mode="constant", cval=0.0)
    return Sinogram(sino.grid, vals)


def ssrt(img: ImageGrid, grid: SinogramGrid, params: SsrtParams,
         use_numba: bool | None = None) -> Sinogram:
    return ssrt_from_radon(radon(img, grid, use_numba=use_numba), params)


def ssrt_direct(img: ImageGrid, rho, theta, sigma: float):
    """Riemann sum of the SSRT integral over pixel centres at one node.

    ``rho`` and ``theta`` (degrees) may be arrays of equal shape; evaluation
    is brute force, O(W*H) per node.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rho_a = np.asarray(rho, dtype=np.float64)
    th_a = np.deg2rad(np.asarray(theta, dtype=np.float64))
    rho_b, th_b = np.broadcast_arrays(rho_a, th_a)
    img = as_image(img)
    xs, ys = img.coords()
    X, Y = np.meshgrid(xs, ys)
    f = img.pixels.ravel()
    X = X.ravel()
    Y = Y.ravel()
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * sigma)
    out = np.empty(rho_b.shape)
    flat_r = rho_b.ravel()
    flat_t = th_b.ravel()
    res = out.reshape(-1)
    for i in range(flat_r.size):
        d = X * math.cos(flat_t[i]) + Y * math.sin(flat_t[i]) - flat_r[i]
        res[i] = norm * np.dot(f, np.exp(-0.5 * (d / sigma) ** 2))
    if out.ndim == 0:
        return float(out)
    return out


def ssrt_direct_sinogram(img: ImageGrid, grid: SinogramGrid, sigma: float,
                         theta_index=None, chunk: int = 1 << 22) -> np.ndarray:
    """Direct SSRT on every node of ``grid`` (or only the listed theta rows)."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    img = as_image(img)
    xs, ys = img.coords()
    X, Y = np.meshgrid(xs, ys)
    f = img.pixels.ravel()
    X = X.ravel()
    Y = Y.ravel()
    rhos = grid.rho_values
    rows = range(grid.n_theta) if theta_index is None else list(theta_index)
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * sigma)
    out = np.zeros((len(rows), rhos.size))
    per = max(1, chunk // max(1, f.size))
    for r, ti in enumerate(rows):
        t = math.radians(grid.theta_values[ti])
        proj = X * math.cos(t) + Y * math.sin(t)
        for a in range(0, rhos.size, per):
            d = proj[None, :] - rhos[a:a + per, None]
            out[r, a:a + per] = norm * (np.exp(-0.5 * (d / sigma) ** 2) @ f)
    return out


# ---------------------------------------------------------------------------
# dumps
# ---------------------------------------------------------------------------

def write_sinogram_csv(path, sino: Sinogram) -> None:
    th = np.repeat(sino.grid.theta_values, sino.grid.n_rho)
    rh = np.tile(sino.grid.rho_values, sino.grid.n_theta)
    table = np.column_stack([th, rh, sino.values.ravel()])
    np.savetxt(path, table, delimiter=",", header="theta_deg,rho,value", comments="",
               fmt="%.17g")


def write_sinogram_bin(path, sino: Sinogram) -> None:
    """Raw dump: 32-byte little-endian header then float64 values, row-major.

    Header layout: magic ``b"SSRT"``, uint32 version, uint32 n_theta,
    uint32 n_rho, float64 rho_min, float64 rho_step. Rows are assumed to be
    equally spaced over [0, 180).
    """
    g = sino.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SINOGRAM_MAGIC, SINOGRAM_VERSION, g.n_theta, g.n_rho,
                              g.rho_min, g.rho_step))
        fh.write(np.ascontiguousarray(sino.values, dtype="<f8").tobytes())


def read_sinogram_bin(path) -> Sinogram:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated sinogram header")
        magic, version, n_t, n_r, rho_min, rho_step = _HEADER.unpack(head)
        if magic != SINOGRAM_MAGIC:
            raise ValueError(f"{path}: bad sinogram magic {magic!r}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n_t * n_r:
        raise ValueError(f"{path}: expected {n_t * n_r} values, found {data.size}")
    grid = SinogramGrid(np.arange(n_t) * (180.0 / n_t), rho_min,
                        rho_min + (n_r - 1) * rho_step, rho_step)
    return Sinogram(grid, data.reshape(n_t, n_r).astype(np.float64))
