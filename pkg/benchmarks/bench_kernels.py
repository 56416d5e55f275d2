"""Compare the numba and pure-numpy splatting kernels.

    python benchmarks/bench_kernels.py [--sizes 128 256 501] [--repeat 3]

The numpy path is what runs when numba is missing or GUIDED_SSRT_NUMBA=0.
"""
import argparse
import time

import numpy as np

from guided_ssrt import _accel
from guided_ssrt.guided import GuidanceParams, guided_radon
from guided_ssrt.hessian import orientation_fields
from guided_ssrt.image import GroundTruthLine, SyntheticSpec, synth_bars
from guided_ssrt.transform import SinogramGrid, radon


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def scene(n, seed=0):
    rng = np.random.default_rng(seed)
    bars = tuple(GroundTruthLine.from_center(rng.uniform(-n / 4, n / 4, 2), rng.uniform(0, 180),
                                             rng.uniform(5, 20), n / 2) for _ in range(4))
    img, _ = synth_bars(SyntheticSpec((n, n), bars, noise_sigma=20, rng_seed=seed))
    return img


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 501])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'size':>5} {'kernel':>12} {'numpy s':>9} {'numba s':>9} {'speedup':>8} {'max|diff|':>10}")
    for n in args.sizes:
        img = scene(n)
        grid = SinogramGrid.for_image(img.shape, 5.0)
        fields = orientation_fields(img, (3.0, 8.0))
        gp = GuidanceParams(100, (3.0, 8.0))
        jobs = {
            "radon": lambda u: radon(img, grid, use_numba=u).values,
            "guided": lambda u: guided_radon(img, fields, grid, gp, use_numba=u).values,
        }
        for name, job in jobs.items():
            job(True)  # compile
            diff = float(np.abs(job(True) - job(False)).max())
            t_np = best_of(lambda: job(False), args.repeat)
            t_nb = best_of(lambda: job(True), args.repeat)
            print(f"{n:>5} {name:>12} {t_np:9.3f} {t_nb:9.3f} {t_np / t_nb:7.1f}x {diff:10.1e}")


if __name__ == "__main__":
    main()
