"""Hot projection kernels.

Two implementations of every kernel live here: a numba ``@njit`` version and
a pure-numpy fallback. The numba path is used when numba imports and the
environment variable ``GUIDED_SSRT_NUMBA`` is not set to ``0``.
``SSRT_THREADS`` caps numba's thread pool (0 or unset means auto).

Both paths write each theta row from a single sequential loop, so the output
does not depend on how rows are scheduled across threads.
"""
import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("GUIDED_SSRT_NUMBA", "1") != "0"

# gamma combination modes for the multiscale average
AVERAGE_AFTER_POWER = 0
AVERAGE_BEFORE_POWER = 1


def _set_threads():
    if not HAVE_NUMBA:
        return
    n = int(os.environ.get("SSRT_THREADS", "0") or 0)
    if n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# numpy fallback
# ---------------------------------------------------------------------------

def _splat_row_np(flat, proj, rho_min, rho_step, n_rho):
    pos = (proj - rho_min) / rho_step
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    # a projection landing exactly on the last node keeps all weight there
    top = lo >= n_rho - 1
    lo[top] = n_rho - 1
    frac[top] = 0.0
    hi = np.minimum(lo + 1, n_rho - 1)
    row = np.bincount(lo, weights=flat * (1.0 - frac), minlength=n_rho)
    row += np.bincount(hi, weights=flat * frac, minlength=n_rho)
    return row[:n_rho] / rho_step


def radon_numpy(img, xs, ys, cos_t, sin_t, rho_min, rho_step, n_rho):
    out = np.zeros((cos_t.size, n_rho))
    flat = img.ravel()
    X, Y = np.meshgrid(xs, ys)
    X = X.ravel()
    Y = Y.ravel()
    for t in range(cos_t.size):
        out[t] = _splat_row_np(flat, X * cos_t[t] + Y * sin_t[t], rho_min, rho_step, n_rho)
    return out


def guided_weights_numpy(nx, ny, valid, px, py, M, mode):
    """Per-pixel guidance weight for one projection direction ``(px, py)``."""
    gam = np.abs(px * nx + py * ny)
    gam = np.where(valid, np.minimum(gam, 1.0), 0.0)
    if mode == AVERAGE_AFTER_POWER:
        return np.mean(gam ** M, axis=0)
    return np.mean(gam, axis=0) ** M


def guided_radon_numpy(img, nx, ny, valid, xs, ys, cos_t, sin_t, M, mode,
                       rho_min, rho_step, n_rho):
    out = np.zeros((cos_t.size, n_rho))
    flat = img.ravel()
    X, Y = np.meshgrid(xs, ys)
    X = X.ravel()
    Y = Y.ravel()
    for t in range(cos_t.size):
        # integration direction is the rho axis rotated by +90 degrees
        w = guided_weights_numpy(nx, ny, valid, -sin_t[t], cos_t[t], M, mode)
        out[t] = _splat_row_np(flat * w.ravel(), X * cos_t[t] + Y * sin_t[t],
                               rho_min, rho_step, n_rho)
    return out


# ---------------------------------------------------------------------------
# numba
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _splat_one(row, v, p, rho_min, rho_step, n_rho):
        pos = (p - rho_min) / rho_step
        lo = int(np.floor(pos))
        if lo >= n_rho - 1:
            row[n_rho - 1] += v
            return
        frac = pos - lo
        row[lo] += v * (1.0 - frac)
        row[lo + 1] += v * frac

    @njit(cache=True, parallel=True)
    def radon_numba(img, xs, ys, cos_t, sin_t, rho_min, rho_step, n_rho):
        n_t = cos_t.size
        H, W = img.shape
        out = np.zeros((n_t, n_rho))
        for t in prange(n_t):
            c = cos_t[t]
            s = sin_t[t]
            row = out[t]
            for i in range(H):
                ys_ = ys[i] * s
                for j in range(W):
                    v = img[i, j]
                    if v != 0.0:
                        _splat_one(row, v, xs[j] * c + ys_, rho_min, rho_step, n_rho)
            for k in range(n_rho):
                row[k] /= rho_step
        return out

    @njit(cache=True, parallel=True)
    def guided_radon_numba(img, nx, ny, valid, xs, ys, cos_t, sin_t, M, mode,
                           rho_min, rho_step, n_rho):
        n_t = cos_t.size
        S, H, W = nx.shape
        out = np.zeros((n_t, n_rho))
        for t in prange(n_t):
            c = cos_t[t]
            s = sin_t[t]
            px = -s
            py = c
            row = out[t]
            for i in range(H):
                ys_ = ys[i] * s
                for j in range(W):
                    v = img[i, j]
                    if v == 0.0:
                        continue
                    acc = 0.0
                    for k in range(S):
                        if valid[k, i, j]:
                            g = abs(px * nx[k, i, j] + py * ny[k, i, j])
                            if g > 1.0:
                                g = 1.0
                            if mode == 0:
                                acc += g ** M
                            else:
                                acc += g
                    acc /= S
                    if mode != 0:
                        acc = acc ** M
                    if acc != 0.0:
                        _splat_one(row, v * acc, xs[j] * c + ys_, rho_min, rho_step, n_rho)
            for k in range(n_rho):
                row[k] /= rho_step
        return out


def radon_kernel(img, xs, ys, cos_t, sin_t, rho_min, rho_step, n_rho, use_numba=None):
    """Pixel-splatting Radon projection for every angle in ``cos_t/sin_t``."""
    if use_numba is None:
        use_numba = USE_NUMBA
    args = (np.ascontiguousarray(img, dtype=np.float64), xs, ys, cos_t, sin_t,
            float(rho_min), float(rho_step), int(n_rho))
    if use_numba:
        _set_threads()
        return radon_numba(*args)
    return radon_numpy(*args)


def guided_radon_kernel(img, nx, ny, valid, xs, ys, cos_t, sin_t, M, mode,
                        rho_min, rho_step, n_rho, use_numba=None):
    """Radon projection of ``img`` weighted per angle by orientation agreement.

    ``nx``, ``ny`` and ``valid`` are stacked per Hessian scale with shape
    ``(S, H, W)``.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    args = (np.ascontiguousarray(img, dtype=np.float64),
            np.ascontiguousarray(nx, dtype=np.float64),
            np.ascontiguousarray(ny, dtype=np.float64),
            np.ascontiguousarray(valid, dtype=np.bool_),
            xs, ys, cos_t, sin_t, float(M), int(mode),
            float(rho_min), float(rho_step), int(n_rho))
    if use_numba:
        _set_threads()
        return guided_radon_numba(*args)
    return guided_radon_numpy(*args)
