"""Peak extraction in the (theta, rho) plane.

Rows at ``theta`` and ``theta + 180`` describe the same lines with ``rho``
negated, so on grids that tile [0, 180) with a symmetric rho axis the
theta borders are glued by flipping rho. Smoothing and neighbourhood
searches honour that identification.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import ndimage

from .transform import Sinogram


@dataclass(frozen=True)
class Peak:
    rho: float
    theta: float
    value: float
    persistence: int = 0
    index: tuple[int, int] | None = None  # (theta_idx, rho_idx) on the source grid


@dataclass(frozen=True)
class RefineParams:
    threshold_ratio: float = 0.2
    smooth_sigma: tuple[float, float] = (0.5, 0.5)  # (theta, rho) in grid units
    max_iterations: int = 30
    min_persistence: int = 10
    neighborhood: int = 7
    track_window: tuple[int, int] | None = None  # (theta, rho) half-widths; None -> 3 sigma

    def __post_init__(self):
        object.__setattr__(self, "smooth_sigma", tuple(float(s) for s in self.smooth_sigma))
        if self.track_window is not None:
            tw = tuple(int(v) for v in self.track_window)
            if len(tw) != 2 or min(tw) < 1:
                raise ValueError("track_window must be two integers >= 1")
            object.__setattr__(self, "track_window", tw)
        if not 0 < self.threshold_ratio <= 1:
            raise ValueError("threshold_ratio must lie in (0, 1]")
        if len(self.smooth_sigma) != 2 or min(self.smooth_sigma) <= 0:
            raise ValueError("smooth_sigma must be two positive values")
        if self.max_iterations < 1 or self.min_persistence < 1:
            raise ValueError("max_iterations and min_persistence must be >= 1")
        _check_neighborhood(self.neighborhood)


def _check_neighborhood(n):
    if n < 3 or n % 2 == 0:
        raise ValueError(f"neighborhood must be an odd integer >= 3, got {n}")


def pad_theta(values: np.ndarray, k: int, wrap: bool, fill: float = 0.0) -> np.ndarray:
    """Extend ``values`` by ``k`` rows on both theta borders.

    With ``wrap`` the extension continues periodically, flipping rho on
    every half turn; otherwise rows are filled with ``fill``.
    """
    n = values.shape[0]
    if k <= 0:
        return values
    if not wrap:
        pad = np.full((k, values.shape[1]), fill)
        return np.concatenate([pad, values, pad], axis=0)
    idx = np.arange(-k, n + k)
    rows = values[idx % n]
    flip = (idx // n) % 2 == 1
    rows[flip] = rows[flip, ::-1]
    return rows


def _extrema_map(values: np.ndarray, size: int, wrap: bool) -> np.ndarray:
    """Boolean map of local maxima within a ``size x size`` window.

    A node qualifies when it is strictly above the window nodes preceding
    it in raster order, no lower than those following it, and strictly
    above at least one neighbour. Isolated strict maxima always qualify;
    a flat run of equal values yields at most its first node, and a
    constant region yields none.
    """
    h = size // 2
    ext = pad_theta(values, h, wrap, np.nan)
    prev = np.zeros((size, size), bool)
    prev[:h, :] = True
    prev[h, :h] = True
    nxt = np.zeros((size, size), bool)
    nxt[h + 1:, :] = True
    nxt[h, h + 1:] = True
    hi_src = np.where(np.isnan(ext), -np.inf, ext)
    lo_src = np.where(np.isnan(ext), np.inf, ext)
    mprev = ndimage.maximum_filter(hi_src, footprint=prev, mode="constant", cval=-np.inf)
    mnext = ndimage.maximum_filter(hi_src, footprint=nxt, mode="constant", cval=-np.inf)
    around = prev | nxt
    mmin = ndimage.minimum_filter(lo_src, footprint=around, mode="constant", cval=np.inf)
    is_max = (ext > mprev) & (ext >= mnext) & (ext > mmin)
    return is_max[h:h + values.shape[0]] if h else is_max


def _parabolic(vm, v0, vp) -> float:
    den = vm - 2.0 * v0 + vp
    if not np.isfinite(den) or den >= 0:
        return 0.0
    off = 0.5 * (vm - vp) / den
    return float(min(0.5, max(-0.5, off)))


def _theta_at(thetas: np.ndarray, ti: int, off: float, wrap: bool) -> float:
    n = thetas.size
    if off == 0.0 or n == 1:
        return float(thetas[ti])
    if wrap:
        step = 180.0 / n
    else:
        step = float(thetas[ti + 1] - thetas[ti]) if off > 0 else float(thetas[ti] - thetas[ti - 1])
    return float(thetas[ti] + off * step)


def _neighbour_rows(values: np.ndarray, ti: int, ri: int, wrap: bool):
    """Values at ``(ti-1, ri)`` and ``(ti+1, ri)`` honouring the theta glue."""
    n, m = values.shape
    out = []
    for t in (ti - 1, ti + 1):
        if 0 <= t < n:
            out.append(values[t, ri])
        elif wrap:
            out.append(values[t % n, m - 1 - ri])
        else:
            out.append(np.nan)
    return out


def local_maxima(sino: Sinogram, neighborhood: int = 7) -> list[Peak]:
    """Local maxima of the sinogram with parabolic sub-grid refinement.

    Refinement fits a parabola through each maximum and its two neighbours
    along rho and, independently, along theta.
    """
    _check_neighborhood(neighborhood)
    vals = sino.values
    grid = sino.grid
    wrap = grid.wraps()
    mask = _extrema_map(vals, neighborhood, wrap)
    rhos = grid.rho_values
    peaks = []
    for ti, ri in zip(*np.nonzero(mask)):
        ti = int(ti)
        ri = int(ri)
        v0 = vals[ti, ri]
        d_r = 0.0
        if 0 < ri < vals.shape[1] - 1:
            d_r = _parabolic(vals[ti, ri - 1], v0, vals[ti, ri + 1])
        vm, vp = _neighbour_rows(vals, ti, ri, wrap)
        d_t = _parabolic(vm, v0, vp)
        peaks.append(Peak(float(rhos[ri] + d_r * grid.rho_step),
                          _theta_at(grid.theta_values, ti, d_t, wrap),
                          float(v0), 0, (ti, ri)))
    return peaks


def threshold_peaks(peaks: Sequence[Peak], global_max: float, th_rel: float) -> list[Peak]:
    """Keep peaks whose value reaches ``th_rel * global_max``."""
    if not global_max > 0:
        raise ValueError(f"global_max must be positive, got {global_max}")
    cut = th_rel * global_max
    return [p for p in peaks if p.value >= cut]


def smooth_sinogram(values: np.ndarray, sigma: tuple[float, float], wrap: bool) -> np.ndarray:
    """One separable Gaussian smoothing step over (theta, rho)."""
    if not wrap:
        return ndimage.gaussian_filter(values, sigma, mode=["nearest", "constant"], truncate=4.0)
    k = int(math.ceil(4.0 * sigma[0]))
    ext = pad_theta(values, k, True)
    out = ndimage.gaussian_filter(ext, sigma, mode=["constant", "constant"], truncate=4.0)
    return out[k:k + values.shape[0]]


def _window_candidates(is_max, t, r, wt, wr, wrap):
    """Local maxima within the tracking window as ``(dist2, theta_idx, rho_idx)``."""
    n, m = is_max.shape
    out = []
    for dt in range(-wt, wt + 1):
        tt = t + dt
        flip = False
        if tt < 0 or tt >= n:
            if not wrap:
                continue
            flip = ((tt // n) % 2) == 1
            tt %= n
        for dr in range(-wr, wr + 1):
            rr = r + dr
            if rr < 0 or rr >= m:
                continue
            rq = m - 1 - rr if flip else rr
            if is_max[tt, rq]:
                out.append((dt * dt + dr * dr, tt, rq))
    return out


def scale_space_refine(sino: Sinogram, peaks: Sequence[Peak], params: RefineParams) -> list[Peak]:
    """Keep peaks whose maximum survives at least ``min_persistence`` smoothings."""
    return [p for p in track_persistence(sino, peaks, params)
            if p.persistence >= params.min_persistence]


def track_persistence(sino: Sinogram, peaks: Sequence[Peak], params: RefineParams) -> list[Peak]:
    """Persistence of every peak under repeated smoothing of the surface.

    Each iteration smooths the current surface once more and moves every
    live track to the nearest 3x3 local maximum inside the tracking window
    (three smoothing sigmas unless ``track_window`` is given). A track ends
    when its window holds no maximum, or when it lands on the same node as
    a stronger track. Persistence is the
    number of iterations survived. Returned peaks keep their original
    coordinates, in input order.
    """
    wrap = sino.grid.wraps()
    vals = sino.values.copy()
    n, m = vals.shape
    sig_t, sig_r = params.smooth_sigma
    if params.track_window is None:
        wt = max(1, int(math.ceil(3 * sig_t)))
        wr = max(1, int(math.ceil(3 * sig_r)))
    else:
        wt, wr = params.track_window

    tracks = []
    for i, p in enumerate(peaks):
        if p.index is None:
            raise ValueError("peaks must carry their grid index; use local_maxima output")
        tracks.append({"i": i, "pos": p.index, "val": p.value,
                       "alive": True, "pers": params.max_iterations})

    for it in range(1, params.max_iterations + 1):
        if not any(tr["alive"] for tr in tracks):
            break
        vals = smooth_sinogram(vals, (sig_t, sig_r), wrap)
        is_max = _extrema_map(vals, 3, wrap)
        landed: dict[tuple[int, int], list] = {}
        for tr in tracks:
            if not tr["alive"]:
                continue
            t, r = tr["pos"]
            cands = _window_candidates(is_max, t, r, wt, wr, wrap)
            if not cands:
                tr["alive"] = False
                tr["pers"] = it - 1
                continue
            best = min(cands, key=lambda c: (c[0], -vals[c[1], c[2]], c[1], c[2]))
            tr["next"] = (best[1], best[2])
            landed.setdefault(tr["next"], []).append(tr)
        for node, group in landed.items():
            group.sort(key=lambda tr: (-tr["val"], peaks[tr["i"]].index))
            for loser in group[1:]:
                loser["alive"] = False
                loser["pers"] = it - 1
            keeper = group[0]
            keeper["pos"] = node
            keeper["val"] = float(vals[node])

    return [replace(peaks[tr["i"]], persistence=int(tr["pers"])) for tr in tracks]


def canonical(rho: float, theta: float) -> tuple[float, float]:
    """Representative of ``(rho, theta)`` with theta in [0, 180)."""
    k = math.floor(theta / 180.0)
    theta = theta - 180.0 * k
    if k % 2:
        rho = -rho
    if theta >= 180.0:
        theta -= 180.0
        rho = -rho
    return rho, theta


def dedup_pi(peaks: Sequence[Peak], rho_tol: float = 1.0, theta_tol: float = 1.0) -> list[Peak]:
    """Fold peaks into theta in [0, 180) and merge equivalent representatives.

    Peaks closer than ``rho_tol`` and ``theta_tol`` (across the 0/180
    seam as well) collapse onto the higher-valued one.
    """
    canon = []
    for p in peaks:
        rho, theta = canonical(p.rho, p.theta)
        canon.append(replace(p, rho=rho, theta=theta))
    order = sorted(range(len(canon)), key=lambda i: (-canon[i].value, canon[i].theta, canon[i].rho))
    kept: list[Peak] = []
    for i in order:
        p = canon[i]
        dup = False
        for q in kept:
            dth = abs(p.theta - q.theta)
            if dth <= theta_tol and abs(p.rho - q.rho) <= rho_tol:
                dup = True
            elif 180.0 - dth <= theta_tol and abs(p.rho + q.rho) <= rho_tol:
                dup = True
            if dup:
                break
        if not dup:
            kept.append(p)
    return kept
