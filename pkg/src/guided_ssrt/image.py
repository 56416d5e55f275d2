"""Image representation, file I/O, synthetic bar images and noise.

Coordinate frame used throughout the package: the origin sits at the image
centre, ``x`` grows to the right (columns), ``y`` grows downward (rows), and
a line is ``x*cos(theta) + y*sin(theta) = rho`` with ``theta`` in degrees,
measured from the x-axis toward the y-axis.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

COORD_CONVENTION = (
    "origin=center; x right (columns); y down (rows); "
    "theta ccw from x toward y, degrees; line x*cos(theta)+y*sin(theta)=rho"
)

LUMA = np.array([0.299, 0.587, 0.114])


class ImageFormatError(ValueError):
    """Raised for malformed or unsupported image files."""


@dataclass(frozen=True)
class ImageGrid:
    """A real-valued grayscale image ``f(x, y)``."""

    pixels: np.ndarray
    coord_convention: str = field(default=COORD_CONVENTION, repr=False)

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"pixels must be a non-empty 2-D array, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixels must be finite")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-centre coordinates ``(xs, ys)`` for columns and rows."""
        return pixel_coords(self.height, self.width)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width - 1, self.height - 1)

    def scaled(self, c: float) -> "ImageGrid":
        return ImageGrid(self.pixels * c)


def as_image(img) -> "ImageGrid":
    """Wrap a bare 2-D array; ImageGrid instances pass through."""
    return img if isinstance(img, ImageGrid) else ImageGrid(np.asarray(img, dtype=np.float64))


def pixel_coords(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    xs = np.arange(width, dtype=np.float64) - (width - 1) / 2.0
    ys = np.arange(height, dtype=np.float64) - (height - 1) / 2.0
    return xs, ys


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def _read_pgm(data: bytes, path) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"{path}: unsupported PNM magic {magic!r} (need P2 or P5)")
    # header tokens: width height maxval, '#' comments allowed
    tokens = []
    pos = 2
    n = len(data)
    while len(tokens) < 3:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageFormatError(f"{path}: non-numeric PGM header field") from None
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid PGM size {width}x{height}")
    if not 0 < maxval < 256:
        raise ImageFormatError(f"{path}: unsupported PGM maxval {maxval} (bit depth must be 8)")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte before the raster
        raster = np.frombuffer(data, dtype=np.uint8, count=-1, offset=pos)
        if raster.size < count:
            raise ImageFormatError(f"{path}: truncated PGM raster")
        values = raster[:count].astype(np.float64)
    else:
        body = data[pos:].split()
        if len(body) < count:
            raise ImageFormatError(f"{path}: truncated PGM raster")
        try:
            values = np.array([int(v) for v in body[:count]], dtype=np.float64)
        except ValueError:
            raise ImageFormatError(f"{path}: non-numeric PGM sample") from None
    values = values.reshape(height, width)
    if maxval != 255:
        values = values * (255.0 / maxval)
    return values


def _read_png(path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I", "I;16", "I;16B", "I;16L", "F"):
                raise ImageFormatError(f"{path}: unsupported PNG bit depth (mode {mode}); need 8-bit")
            if mode == "1":
                mode_img = im.convert("L")
            elif mode in ("L", "RGB"):
                mode_img = im
            elif mode == "LA":
                mode_img = im.getchannel(0)
            elif mode in ("RGBA", "P", "PA"):
                mode_img = im.convert("RGB")
            else:
                raise ImageFormatError(f"{path}: unsupported PNG color mode {mode}")
            arr = np.asarray(mode_img, dtype=np.float64)
    except ImageFormatError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise ImageFormatError(f"{path}: malformed PNG ({exc})") from exc
    if arr.ndim == 3:
        arr = arr[..., :3] @ LUMA
    return arr


def load_image(path) -> ImageGrid:
    """Load a PGM (P2/P5) or PNG file as an :class:`ImageGrid`.

    RGB content is reduced to luma ``0.299 R + 0.587 G + 0.114 B`` without
    rounding.
    """
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head[:2] in (b"P2", b"P5"):
        with open(path, "rb") as fh:
            return ImageGrid(_read_pgm(fh.read(), path))
    if head.startswith(b"\x89PNG\r\n\x1a\n"):
        return ImageGrid(_read_png(path))
    if head[:1] == b"P" and head[1:2].isdigit():
        raise ImageFormatError(f"{path}: unsupported PNM variant {head[:2]!r}")
    raise ImageFormatError(f"{path}: unrecognised image format (expected PGM or PNG)")


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(pixels), 0, 255).astype(np.uint8)


def save_pgm(path, img: ImageGrid | np.ndarray, plain: bool = False) -> None:
    px = img.pixels if isinstance(img, ImageGrid) else np.asarray(img)
    data = to_uint8(px)
    h, w = data.shape
    with open(path, "wb") as fh:
        if plain:
            fh.write(f"P2\n{w} {h}\n255\n".encode())
            for row in data:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode())
        else:
            fh.write(f"P5\n{w} {h}\n255\n".encode())
            fh.write(data.tobytes())


def save_png(path, pixels: np.ndarray) -> None:
    from PIL import Image

    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    Image.fromarray(arr).save(path, format="PNG")


def save_image(path, img: ImageGrid) -> None:
    """Write ``img`` as PNG or PGM depending on the file extension."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".pgm", ".pnm"):
        save_pgm(path, img)
    else:
        save_png(path, img.pixels)


# ---------------------------------------------------------------------------
# synthetic bars
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundTruthLine:
    """Centerline ``(rho, theta)`` of a finite bar plus its geometry."""

    rho: float
    theta: float
    width: float
    length: float
    center: tuple[float, float]

    def __post_init__(self):
        if not 0.0 <= self.theta < 180.0:
            raise ValueError(f"theta must lie in [0, 180), got {self.theta}")
        if not self.width > 0 or not self.length > 0:
            raise ValueError("bar width and length must be positive")

    @classmethod
    def from_center(cls, center: Sequence[float], theta: float, width: float,
                    length: float) -> "GroundTruthLine":
        """Bar through ``center`` whose line normal has angle ``theta``."""
        theta = float(theta) % 180.0
        t = math.radians(theta)
        cx, cy = float(center[0]), float(center[1])
        rho = cx * math.cos(t) + cy * math.sin(t)
        return cls(rho, theta, float(width), float(length), (cx, cy))

    def to_json(self) -> dict:
        return {"rho": self.rho, "theta_deg": self.theta, "width": self.width,
                "length": self.length, "center": list(self.center)}


@dataclass(frozen=True)
class SyntheticSpec:
    image_size: tuple[int, int]  # (width, height)
    bars: tuple[GroundTruthLine, ...] = ()
    foreground: float = 255.0
    background: float = 0.0
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bars", tuple(self.bars))
        w, h = self.image_size
        if int(w) != w or int(h) != h or w < 1 or h < 1:
            raise ValueError(f"image_size must be two positive integers, got {self.image_size}")
        object.__setattr__(self, "image_size", (int(w), int(h)))
        if self.foreground <= self.background:
            raise ValueError("foreground intensity must exceed background intensity")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


def default_length(width: int, height: int) -> float:
    return 0.6 * math.hypot(width, height)


def bar_coverage(bar: GroundTruthLine, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Fractional coverage in [0, 1] of each pixel centre by ``bar``.

    Centres deeper than 0.5 px inside the rectangle get 1, centres more than
    0.5 px outside get 0, with a linear ramp in between.
    """
    t = math.radians(bar.theta)
    nx, ny = math.cos(t), math.sin(t)
    X = xs[None, :] - bar.center[0]
    Y = ys[:, None] - bar.center[1]
    across = np.abs(X * nx + Y * ny) - bar.width / 2.0
    along = np.abs(-X * ny + Y * nx) - bar.length / 2.0
    return np.clip(0.5 - np.maximum(across, along), 0.0, 1.0)


def synth_bars(spec: SyntheticSpec) -> tuple[ImageGrid, list[GroundTruthLine]]:
    """Render the bars of ``spec`` and return the image with its ground truth.

    Noise in ``spec.noise_sigma`` is added with ``spec.rng_seed``.
    """
    w, h = (int(v) for v in spec.image_size)
    if w < 1 or h < 1:
        raise ValueError(f"image size must be positive, got {spec.image_size}")
    for bar in spec.bars:
        vals = (bar.rho, bar.theta, bar.width, bar.length, *bar.center)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("bar parameters must be finite")
    xs, ys = pixel_coords(h, w)
    cover = np.zeros((h, w))
    for bar in spec.bars:
        np.maximum(cover, bar_coverage(bar, xs, ys), out=cover)
    img = ImageGrid(spec.background + (spec.foreground - spec.background) * cover)
    if spec.noise_sigma > 0:
        img = add_awgn(img, spec.noise_sigma, spec.rng_seed)
    return img, list(spec.bars)


def add_awgn(img: ImageGrid, zeta: float, seed: int) -> ImageGrid:
    """Add unclamped white Gaussian noise of standard deviation ``zeta``."""
    if zeta < 0:
        raise ValueError(f"noise standard deviation must be >= 0, got {zeta}")
    if zeta == 0:
        return ImageGrid(img.pixels.copy())
    rng = np.random.default_rng(seed)
    return ImageGrid(img.pixels + rng.normal(0.0, zeta, size=img.shape))


# ---------------------------------------------------------------------------
# truth sidecar and overlays
# ---------------------------------------------------------------------------

def write_truth(path, lines: Sequence[GroundTruthLine]) -> None:
    with open(path, "w") as fh:
        json.dump({"lines": [ln.to_json() for ln in lines]}, fh, indent=2)


def read_truth(path) -> list[GroundTruthLine]:
    with open(path) as fh:
        doc = json.load(fh)
    out = []
    for d in doc["lines"]:
        theta = float(d["theta_deg"])
        rho = float(d["rho"])
        if "center" in d:
            center = tuple(float(v) for v in d["center"])
        else:
            t = math.radians(theta)
            center = (rho * math.cos(t), rho * math.sin(t))
        out.append(GroundTruthLine(rho, theta, float(d.get("width", 1.0)),
                                   float(d.get("length", 1.0)), center))
    return out


def overlay_lines(img: ImageGrid, lines, color=(255, 0, 0), halfwidth: float = 0.5) -> np.ndarray:
    """Draw each ``(rho, theta)`` line over the grayscale image as RGB uint8."""
    gray = to_uint8(img.pixels)
    rgb = np.repeat(gray[..., None], 3, axis=2)
    xs, ys = img.coords()
    for rho, theta in lines:
        t = math.radians(theta)
        dist = np.abs(xs[None, :] * math.cos(t) + ys[:, None] * math.sin(t) - rho)
        rgb[dist <= halfwidth] = color
    return rgb
