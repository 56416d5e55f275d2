"""Command line interface: ``guided-ssrt {synth,detect,eval,sinogram}``.

Exit status is 0 on success, 1 on usage errors and 2 on I/O or format
errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from . import presets
from .hessian import hessian_field, orientation_field, write_debug_maps
from .image import (GroundTruthLine, ImageFormatError, SyntheticSpec, load_image,
                    overlay_lines, read_truth, save_image, save_png, synth_bars, write_truth)
from .pipeline import ConfigError, DetectConfig, DetectionResult, detect_lines, evaluate
from .transform import (Sinogram, SinogramGrid, radon, ssrt_from_radon, write_sinogram_bin,
                        write_sinogram_csv)

log = logging.getLogger("guided_ssrt")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_sinogram(path: str, sino: Sinogram) -> None:
    if path.lower().endswith(".bin"):
        write_sinogram_bin(path, sino)
    else:
        write_sinogram_csv(path, sino)


def _parse_bar(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"bad --bar value {text!r}") from None
    if len(vals) != 5:
        raise UsageError("--bar takes cx,cy,theta,width,length")
    return vals


def _load_config(args) -> DetectConfig:
    if getattr(args, "config", None):
        cfg = DetectConfig.load(args.config)
    elif getattr(args, "preset", None):
        cfg = presets.PRESETS[args.preset][1]()
    else:
        cfg = DetectConfig()
    if getattr(args, "unguided", False):
        cfg = cfg.replace(guided=False)
    return cfg


def cmd_synth(args) -> int:
    if args.preset:
        spec = presets.PRESETS[args.preset][0](noise=args.noise, seed=args.seed)
    else:
        if not args.bar:
            raise UsageError("synth needs --preset or at least one --bar")
        w, h = args.size
        bars = tuple(GroundTruthLine.from_center((b[0], b[1]), b[2], b[3], b[4])
                     for b in map(_parse_bar, args.bar))
        spec = SyntheticSpec((w, h), bars, noise_sigma=args.noise, rng_seed=args.seed)
    img, truth = synth_bars(spec)
    save_image(args.output, img)
    if args.truth:
        write_truth(args.truth, truth)
    if args.config_out:
        cfg = presets.PRESETS[args.preset][1]() if args.preset else DetectConfig()
        with open(args.config_out, "w") as fh:
            fh.write(cfg.to_text())
    log.info("wrote %s (%d bars)", args.output, len(truth))
    return 0


def cmd_detect(args) -> int:
    img = load_image(args.image)
    cfg = _load_config(args)
    res = detect_lines(img, cfg)
    doc = res.to_json()
    if args.omit_timings:
        doc["timings_ms"] = {}
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.overlay:
        save_png(args.overlay, overlay_lines(img, res.pairs()))
    if args.dump_guided and res.sinogram is not None:
        _write_sinogram(args.dump_guided, res.sinogram)
    if args.dump_persistence:
        with open(args.dump_persistence, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["theta", "rho", "value", "persistence"])
            for p in res.tracked:
                wr.writerow([repr(p.theta), repr(p.rho), repr(p.value), p.persistence])
    if args.dump_hessian:
        for s in cfg.hessian_scales:
            hf = hessian_field(img, s)
            write_debug_maps(f"{args.dump_hessian}_s{s:g}", hf, orientation_field(hf, cfg.polarity))
    return 0


def cmd_eval(args) -> int:
    with open(args.result) as fh:
        res = DetectionResult.from_json(json.load(fh))
    truth = read_truth(args.truth)
    rep = evaluate(res, truth, (args.rho_tol, args.theta_tol))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rep.to_json(), fh, indent=2)
    print(rep.table())
    return 0


def cmd_sinogram(args) -> int:
    img = load_image(args.image)
    cfg = _load_config(args)
    if args.sigma is not None:
        cfg = cfg.replace(sigma=args.sigma)
    grid = SinogramGrid.for_image(img.shape, cfg.sigma, cfg.theta_step, cfg.rho_step,
                                  cfg.kernel_truncation)
    ext = ".bin" if args.format == "bin" else ".csv"
    kinds = args.kind or ["rt", "ssrt", "guided"]
    rt = None
    for kind in kinds:
        if kind in ("rt", "ssrt") and rt is None:
            rt = radon(img, grid)
        if kind == "rt":
            sino = rt
        elif kind == "ssrt":
            sino = ssrt_from_radon(rt, cfg.ssrt_params())
        else:
            from .guided import guided_ssrt
            from .hessian import orientation_fields

            flds = orientation_fields(img, cfg.hessian_scales, cfg.polarity)
            sino = guided_ssrt(img, flds, grid, cfg.ssrt_params(), cfg.guidance_params())
        path = f"{args.output}_{kind}{ext}"
        _write_sinogram(path, sino)
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="guided-ssrt", description="Hessian-guided scale space Radon line detection")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("synth", help="render a synthetic bar image and its ground truth")
    s.add_argument("--preset", choices=sorted(presets.PRESETS))
    s.add_argument("--size", type=int, nargs=2, default=(501, 501), metavar=("W", "H"))
    s.add_argument("--bar", action="append", metavar="CX,CY,THETA,WIDTH,LENGTH",
                   help="repeatable; write --bar=-5,... when the first value is negative")
    s.add_argument("--noise", type=float, default=0.0, help="AWGN standard deviation")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--truth", help="ground-truth JSON sidecar")
    s.add_argument("--config-out", help="write the matching detection config")
    s.set_defaults(func=cmd_synth)

    d = sub.add_parser("detect", help="detect line centerlines in an image")
    d.add_argument("image")
    d.add_argument("--config")
    d.add_argument("--preset", choices=sorted(presets.PRESETS), help="use a preset's config")
    d.add_argument("--unguided", action="store_true", help="plain SSRT, no Hessian guidance")
    d.add_argument("--out", help="result JSON (stdout if omitted)")
    d.add_argument("--overlay", help="PNG with detected lines drawn")
    d.add_argument("--omit-timings", action="store_true",
                   help="leave timings_ms empty so repeated runs give identical JSON")
    d.add_argument("--dump-guided", help="guided sinogram dump (.csv or .bin)")
    d.add_argument("--dump-persistence", help="CSV of every tracked maximum")
    d.add_argument("--dump-hessian", metavar="PREFIX", help="lambda_max / angle maps")
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", help="compare a detection result with ground truth")
    e.add_argument("result")
    e.add_argument("truth")
    e.add_argument("--rho-tol", type=float, default=5.0)
    e.add_argument("--theta-tol", type=float, default=3.0)
    e.add_argument("--out", help="EvalReport JSON")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("sinogram", help="dump RT / SSRT / guided SSRT spaces")
    g.add_argument("image")
    g.add_argument("--config")
    g.add_argument("--preset", choices=sorted(presets.PRESETS))
    g.add_argument("--sigma", type=float)
    g.add_argument("--kind", action="append", choices=["rt", "ssrt", "guided"])
    g.add_argument("--format", choices=["csv", "bin"], default="csv")
    g.add_argument("-o", "--output", required=True, help="output path prefix")
    g.set_defaults(func=cmd_sinogram)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"guided-ssrt: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ImageFormatError, ConfigError, json.JSONDecodeError, KeyError) as exc:
        print(f"guided-ssrt: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
