"""End-to-end detection, configuration files and evaluation against truth."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .guided import AFTER_POWER, GuidanceParams, guided_ssrt
from .hessian import BRIGHT, DARK, orientation_fields
from .image import GroundTruthLine, ImageGrid, as_image
from .maxima import (Peak, RefineParams, dedup_pi, local_maxima, threshold_peaks,
                     track_persistence)
from .transform import Sinogram, SinogramGrid, SsrtParams, ssrt


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DetectConfig:
    sigma: float = 5.0
    kernel_truncation: float = 4.0
    hessian_scales: tuple[float, ...] = (3.0, 8.0)
    m_exponent: float = 100.0
    theta_step: float = 1.0
    rho_step: float = 1.0
    threshold_ratio: float = 0.2
    smooth_sigma_theta: float = 0.5
    smooth_sigma_rho: float = 0.5
    max_iterations: int = 30
    min_persistence: int = 10
    neighborhood: int = 7
    track_window_theta: int = 0  # 0 -> ceil(3 * smooth_sigma_theta)
    track_window_rho: int = 0  # 0 -> ceil(3 * smooth_sigma_rho)
    polarity: str = BRIGHT
    gamma_average: str = AFTER_POWER
    guided: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hessian_scales", tuple(float(s) for s in self.hessian_scales))
        # delegate range checks to the component parameter types
        self.ssrt_params()
        self.refine_params()
        self.guidance_params()
        if not self.theta_step > 0 or not self.rho_step > 0:
            raise ConfigError("theta_step and rho_step must be positive")

    def ssrt_params(self) -> SsrtParams:
        return SsrtParams(self.sigma, self.kernel_truncation)

    def guidance_params(self) -> GuidanceParams:
        return GuidanceParams(self.m_exponent, self.hessian_scales, self.polarity,
                              self.gamma_average)

    def refine_params(self) -> RefineParams:
        tw = None
        if self.track_window_theta or self.track_window_rho:
            tw = (self.track_window_theta or max(1, math.ceil(3 * self.smooth_sigma_theta)),
                  self.track_window_rho or max(1, math.ceil(3 * self.smooth_sigma_rho)))
        return RefineParams(self.threshold_ratio, (self.smooth_sigma_theta, self.smooth_sigma_rho),
                            self.max_iterations, self.min_persistence, self.neighborhood, tw)

    def replace(self, **changes) -> "DetectConfig":
        d = asdict(self)
        d.update(changes)
        return DetectConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hessian_scales"] = list(self.hessian_scales)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DetectConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DetectConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        types = {f.name: f.type for f in fields(cls)}
        defaults = cls()
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown config key {key!r}")
            proto = getattr(defaults, key)
            try:
                if isinstance(proto, bool):
                    low = val.lower()
                    if low not in ("true", "false", "1", "0", "yes", "no"):
                        raise ValueError(val)
                    values[key] = low in ("true", "1", "yes")
                elif isinstance(proto, tuple):
                    values[key] = tuple(float(x) for x in val.split(",") if x.strip())
                elif isinstance(proto, int):
                    values[key] = int(val)
                elif isinstance(proto, float):
                    values[key] = float(val)
                else:
                    values[key] = val
            except ValueError:
                raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from None
        return cls.from_dict(values)

    @classmethod
    def load(cls, path) -> "DetectConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())


@dataclass(frozen=True)
class DetectedLine:
    rho: float
    theta: float
    score: float
    persistence: int

    def to_json(self) -> dict:
        return {"rho": self.rho, "theta_deg": self.theta, "score": self.score,
                "persistence": self.persistence}


@dataclass
class DetectionResult:
    lines: list[DetectedLine]
    config: DetectConfig
    timings_ms: dict[str, float] = field(default_factory=dict)
    sinogram: Sinogram | None = field(default=None, repr=False)
    tracked: list[Peak] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {"lines": [ln.to_json() for ln in self.lines],
                "config": self.config.to_dict(),
                "timings_ms": dict(self.timings_ms)}

    @classmethod
    def from_json(cls, doc: dict) -> "DetectionResult":
        lines = [DetectedLine(float(d["rho"]), float(d["theta_deg"]), float(d.get("score", 0.0)),
                              int(d.get("persistence", 0))) for d in doc["lines"]]
        cfg = DetectConfig.from_dict(doc.get("config", {}))
        return cls(lines, cfg, dict(doc.get("timings_ms", {})))

    def pairs(self) -> list[tuple[float, float]]:
        return [(ln.rho, ln.theta) for ln in self.lines]


def _integrand(img: ImageGrid, polarity: str) -> ImageGrid:
    # dark structures carry low intensity, so the transform sums the inverted image
    if polarity == DARK:
        return ImageGrid(img.pixels.max() - img.pixels)
    return img


def _transform(img: ImageGrid, cfg: DetectConfig, timings: dict) -> Sinogram:
    t0 = time.perf_counter()
    grid = SinogramGrid.for_image(img.shape, cfg.sigma, cfg.theta_step, cfg.rho_step,
                                  cfg.kernel_truncation)
    src = _integrand(img, cfg.polarity)
    flds = orientation_fields(img, cfg.hessian_scales, cfg.polarity) if cfg.guided else None
    t1 = time.perf_counter()
    timings["hessian"] = 1e3 * (t1 - t0)
    if flds is None:
        sino = ssrt(src, grid, cfg.ssrt_params())
    else:
        sino = guided_ssrt(src, flds, grid, cfg.ssrt_params(), cfg.guidance_params())
    timings["transform"] = 1e3 * (time.perf_counter() - t1)
    return sino


def transform_space(img: ImageGrid, cfg: DetectConfig) -> Sinogram:
    """Guided SSRT (or plain SSRT when ``cfg.guided`` is false) on the default grid."""
    return _transform(as_image(img), cfg, {})


def detect_lines(img: ImageGrid, cfg: DetectConfig | None = None) -> DetectionResult:
    """Detect centerlines of bright (or dark) thick linear structures."""
    cfg = cfg or DetectConfig()
    img = as_image(img)
    timings = {}
    t0 = time.perf_counter()
    sino = _transform(img, cfg, timings)
    t2 = time.perf_counter()

    rp = cfg.refine_params()
    peaks = local_maxima(sino, rp.neighborhood)
    gmax = float(sino.values.max())
    tracked: list[Peak] = []
    kept: list[Peak] = []
    if peaks and gmax > 0:
        peaks = threshold_peaks(peaks, gmax, rp.threshold_ratio)
        tracked = track_persistence(sino, peaks, rp)
        kept = [p for p in tracked if p.persistence >= rp.min_persistence]
        kept = dedup_pi(kept, cfg.rho_step, cfg.theta_step)
    t3 = time.perf_counter()
    timings["maxima"] = 1e3 * (t3 - t2)
    timings["total"] = 1e3 * (t3 - t0)

    kept.sort(key=lambda p: (-p.value, p.theta, p.rho))
    lines = [DetectedLine(p.rho, p.theta, p.value, p.persistence) for p in kept]
    return DetectionResult(lines, cfg, timings, sino, tracked)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    pairs: list[dict]
    rmse_rho: float
    rmse_theta: float
    matched: int
    missed: int
    spurious: int

    def to_json(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        rows = [f"{'truth':>5} {'rho':>10} {'theta':>8} {'d_rho':>8} {'d_theta':>8}"]
        for p in self.pairs:
            rows.append(f"{p['truth']:>5d} {p['rho']:>10.3f} {p['theta_deg']:>8.3f} "
                        f"{p['d_rho']:>8.4f} {p['d_theta']:>8.4f}")
        rows.append(f"RMSE rho   = sqrt(sum (rho_i - rho_hat_i)^2 / N)     = {self.rmse_rho:.4f}")
        rows.append(f"RMSE theta = sqrt(sum (theta_i - theta_hat_i)^2 / N) = {self.rmse_theta:.4f}")
        rows.append(f"matched={self.matched} missed={self.missed} spurious={self.spurious}")
        return "\n".join(rows)


def line_difference(rho1, theta1, rho2, theta2) -> tuple[float, float]:
    """Signed ``(d_rho, d_theta)`` from line 2 to line 1 using the closer of
    the two equivalent representatives of line 2."""
    d_th = theta1 - theta2
    d_rho = rho1 - rho2
    best = (d_rho, d_th)
    for k in (-1, 1):
        alt = (rho1 + rho2, theta1 - (theta2 + 180.0 * k))
        if abs(alt[1]) < abs(best[1]):
            best = alt
    return best


def evaluate(detected: DetectionResult | Sequence[tuple[float, float]],
             truth: Sequence[GroundTruthLine], match_tol: tuple[float, float] = (5.0, 3.0)) -> EvalReport:
    """Match detections to truth lines (Hungarian) and report errors and RMSE."""
    rho_tol, th_tol = match_tol
    if not (rho_tol > 0 and th_tol > 0):
        raise ValueError("match tolerances must be positive")
    det = detected.pairs() if isinstance(detected, DetectionResult) else list(detected)
    nt, nd = len(truth), len(det)
    pairs = []
    if nt and nd:
        cost = np.full((nt, nd), 1e6)
        diffs = {}
        for i, t in enumerate(truth):
            for j, (r, th) in enumerate(det):
                d_rho, d_th = line_difference(r, th, t.rho, t.theta)
                diffs[i, j] = (d_rho, d_th)
                if abs(d_rho) <= rho_tol and abs(d_th) <= th_tol:
                    cost[i, j] = abs(d_rho) / rho_tol + abs(d_th) / th_tol
        rows, cols = linear_sum_assignment(cost)
        for i, j in zip(rows, cols):
            if cost[i, j] < 1e6:
                d_rho, d_th = diffs[i, j]
                pairs.append({"truth": int(i), "detected": int(j),
                              "rho": float(det[j][0]), "theta_deg": float(det[j][1]),
                              "d_rho": abs(d_rho), "d_theta": abs(d_th)})
    pairs.sort(key=lambda p: p["truth"])
    n = len(pairs)
    rmse_r = math.sqrt(sum(p["d_rho"] ** 2 for p in pairs) / n) if n else float("nan")
    rmse_t = math.sqrt(sum(p["d_theta"] ** 2 for p in pairs) / n) if n else float("nan")
    return EvalReport(pairs, rmse_r, rmse_t, n, nt - n, nd - n)
