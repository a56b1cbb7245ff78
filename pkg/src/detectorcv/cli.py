"""Command line front end: ``detectorcv {detect,partition,evaluate,grid,dominance}``.

Exit status is 0 on success, 2 for I/O problems (unreadable or corrupt
files) and 3 for invalid flags or configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

from . import detectors as det
from .cvm import CvmConfig
from .errors import DetectorCVError, MalformedHeader, SizeMismatch, TruncatedScanline, UnsupportedPixelFormat
from .evaluation import MATCH_EPS, Correspondence, load_homography, repeatability, uniformity
from .filters import FilterSpec, TransformSpec
from .grid import GridSpec, dominance_report, load_manifest, read_grid_csv, run_selection_grid, write_grid_csv, \
    write_scatter_svg
from .image_core import load_background_mask, load_image, load_label_map, log_encode, normalize_u16, save_pfm
from .partitioning import DARK, BRIGHT, partition_image, save_partition

EXIT_OK, EXIT_IO, EXIT_CONFIG = 0, 2, 3
DETECTORS = ("cv", "harris", "harris-hdr", "dog", "dog-hdr")
_IO_ERRORS = (OSError, MalformedHeader, UnsupportedPixelFormat, TruncatedScanline, SizeMismatch)


_UNSET = object()


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _cvm_sigma(text: str):
    if text.lower() == "none":
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'none' or a positive number, got {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("sigma must be positive")
    return v


def _filter_spec(text: str) -> FilterSpec:
    try:
        return FilterSpec.parse(text)
    except (ValueError, DetectorCVError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="detectorcv", description="HDR feature point detection and evaluation")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("detect", help="detect feature points and write them as CSV")
    d.add_argument("input", help=".hdr, .pfm or any Pillow-readable image")
    d.add_argument("--detector", choices=DETECTORS, default="cv")
    d.add_argument("--out", required=True, help="output CSV (row,col,response,scale)")
    d.add_argument("--log-hdr", action="store_true", help="log-encode the input (logHDR) before detection")
    d.add_argument("--cvm-sigma", type=_cvm_sigma, default=_UNSET,
                   help="CVM Gaussian weight sigma_c, or 'none' (grid: none, 1.0, 1.5, 2.0; default 2.0)")
    d.add_argument("--cvm-side", type=int, default=_UNSET, help="CVM window side (default 5)")
    d.add_argument("--transform", choices=("linear", "log", "histeq"), default=_UNSET,
                   help="cv only; default histeq")
    d.add_argument("--filter", type=_filter_spec, default=_UNSET,
                   help="cv only: gaussian:{5,9,15} or bilateral:{150,175,200}; default gaussian:9")
    d.add_argument("--max-points", type=int, default=500)
    d.add_argument("--nms-side", type=int, default=21)
    d.add_argument("--harris-side", type=int, default=_UNSET, help="Harris Gaussian side (default 5)")
    d.add_argument("--harris-k", type=float, default=_UNSET, help="Harris k (default 0.04)")
    d.add_argument("--threshold", type=float, default=_UNSET,
                   help="relative response threshold for harris/dog (default 0.01)")
    d.add_argument("--octaves", type=int, default=_UNSET, help="DoG octaves (default 4)")
    d.add_argument("--scales", type=int, default=_UNSET, help="DoG scales per octave (default 3)")
    d.add_argument("--debug-dir", default=None, help="dump DetectorCV stage images as PFM here")

    q = sub.add_parser("partition", help="split an image into dark/bright areas")
    q.add_argument("input")
    q.add_argument("--background", default=None, help="8-bit mask, 0 = background")
    q.add_argument("--alpha", type=float, default=0.007)
    q.add_argument("--out", required=True, help="label map PGM (0 background, 85 dark, 170 bright)")

    e = sub.add_parser("evaluate", help="repeatability and uniformity of two FP lists")
    e.add_argument("--ref", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--labels", required=True, help="label map of the test image")
    e.add_argument("--correspondence", choices=("identity", "homography"), default=None,
                   help="defaults to homography when --homography is given")
    e.add_argument("--homography", default=None, help="9 floats, row-major, ref -> test")
    e.add_argument("--eps", type=float, default=MATCH_EPS)
    e.add_argument("--max-points", type=int, default=500)

    g = sub.add_parser("grid", help="run all 72 DetectorCV combinations over a manifest")
    g.add_argument("--manifest", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--eps", type=float, default=MATCH_EPS)
    g.add_argument("--max-points", type=int, default=500)
    g.add_argument("--nms-side", type=int, default=21)

    m = sub.add_parser("dominance", help="dominance counts and Pareto front from a grid CSV")
    m.add_argument("--in", dest="input", required=True)
    m.add_argument("--group-by", default="transform+filter",
                   help="'+'-joined subset of cvm, transform, filter, filter_param")
    m.add_argument("--out", required=True)
    m.add_argument("--svg", default=None, help="optional uniformity/RR scatter plot")
    return p


def _fmt(v: float) -> float:
    return float(det.format_number(v))


def _opt(args, name, default):
    v = getattr(args, name)
    return default if v is _UNSET else v


def _selection(args) -> det.SelectionConfig:
    return det.SelectionConfig(args.max_points, args.nms_side)


def _check_detect_flags(args) -> None:
    def used(*names):
        return [n for n in names if getattr(args, n) is not _UNSET]

    kind = args.detector
    bad = []
    if kind != "cv":
        bad += used("transform", "filter")
    if kind in ("harris", "dog"):
        bad += used("cvm_sigma", "cvm_side")
    if kind in ("cv", "dog", "dog-hdr"):
        bad += used("harris_side", "harris_k")
    if kind == "cv":
        bad += used("threshold")
    if kind in ("cv", "harris", "harris-hdr"):
        bad += used("octaves", "scales")
    if args.debug_dir is not None and kind != "cv":
        bad.append("debug_dir")
    if bad:
        flags = ", ".join("--" + b.replace("_", "-") for b in bad)
        raise ConfigError(f"{flags} cannot be used with --detector {kind}")


def cmd_detect(args) -> int:
    _check_detect_flags(args)
    sel = _selection(args)
    cvm = CvmConfig(window_side=_opt(args, "cvm_side", 5), sigma_c=_opt(args, "cvm_sigma", 2.0))
    img = load_image(args.input)
    if args.log_hdr:
        img = normalize_u16(log_encode(img))
    kind = args.detector
    if kind == "cv":
        cfg = det.DetectorConfig(cvm, TransformSpec(_opt(args, "transform", "histeq")),
                                 _opt(args, "filter", FilterSpec()), sel)
        stages = det.detect_cv_stages(img, cfg)
        fps = det.select_feature_points(stages["filter"], sel)
        if args.debug_dir:
            os.makedirs(args.debug_dir, exist_ok=True)
            for name, arr in stages.items():
                save_pfm(os.path.join(args.debug_dir, f"{name}.pfm"), arr)
    elif kind in ("harris", "harris-hdr"):
        hc = det.HarrisConfig(_opt(args, "harris_side", 5), _opt(args, "harris_k", 0.04),
                              _opt(args, "threshold", 0.01))
        fps = det.harris(img, hc, sel) if kind == "harris" else det.harris_hdr(img, cvm, hc, sel)
    else:
        kw = dict(octaves=_opt(args, "octaves", 4), scales_per_octave=_opt(args, "scales", 3), sel=sel,
                  rel_threshold=_opt(args, "threshold", 0.01))
        fps = det.dog(img, **kw) if kind == "dog" else det.dog_hdr(img, cvm, **kw)
    det.write_feature_points(args.out, fps)
    print(f"{len(fps)} feature points -> {args.out}")
    return EXIT_OK


def cmd_partition(args) -> int:
    img = load_image(args.input)
    bg = load_background_mask(args.background, img.shape) if args.background else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        part = partition_image(img, bg, args.alpha)
    for w in caught:
        print(f"warning: {w.category.__name__}: {w.message}", file=sys.stderr)
    save_partition(args.out, part)
    print(json.dumps({"dark": int((part.labels == DARK).sum()),
                      "bright": int((part.labels == BRIGHT).sum()),
                      "background": int((part.labels == 0).sum())}))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    mode = args.correspondence or ("homography" if args.homography else "identity")
    if mode == "homography" and not args.homography:
        raise ConfigError("--correspondence homography requires --homography FILE")
    if mode == "identity" and args.homography:
        raise ConfigError("--homography cannot be combined with --correspondence identity")
    ref = det.read_feature_points(args.ref)
    test = det.read_feature_points(args.test)
    part = load_label_map(args.labels)
    corr = load_homography(args.homography) if mode == "homography" else Correspondence()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = repeatability(ref, test, corr, args.eps, args.max_points, part.shape)
        u = uniformity(test, part)
    for w in caught:
        print(f"warning: {w.category.__name__}: {w.message}", file=sys.stderr)
    print(json.dumps({"rr": _fmt(rep.rr), "uniformity": _fmt(u), "n_ref": rep.n_ref,
                      "n_test": rep.n_test, "matched": rep.matched}))
    return EXIT_OK


def cmd_grid(args) -> int:
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    entries = load_manifest(args.manifest)
    grid = GridSpec(selection=_selection(args), eps_px=args.eps)
    failures: list[str] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = run_selection_grid(entries, grid, args.jobs, failures)
    for f in failures:
        print(f"warning: {f}", file=sys.stderr)
    write_grid_csv(args.out, rows)
    if not entries:
        print("nothing to do: manifest lists no images", file=sys.stderr)
    else:
        print(f"{len(rows)} rows -> {args.out}")
    return EXIT_OK


def cmd_dominance(args) -> int:
    vectors = read_grid_csv(args.input)
    report = dominance_report(vectors, args.group_by)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(report, indent=2) + "\n")
    if args.svg:
        write_scatter_svg(args.svg, vectors)
    print(json.dumps(report["counts"]))
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "partition": cmd_partition, "evaluate": cmd_evaluate,
            "grid": cmd_grid, "dominance": cmd_dominance}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a flag error
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except _IO_ERRORS as exc:
        print(f"detectorcv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DetectorCVError, ValueError, KeyError) as exc:
        print(f"detectorcv: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
