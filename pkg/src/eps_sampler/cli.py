"""eps-sample: score video patches and write a training-patch manifest.

Subcommands::

    eps-sample sample --input v.y4m --patch-size 64 --clusters 2 --out m.txt
    eps-sample heatmap --input v.y4m --frames 1-3 --heatmap-prefix maps/v --upscale 8
    eps-sample stats --manifest m.txt
    eps-sample oracle-check --trials 100 --sizes 8x8 16x8

Exit status: 0 on success, 1 on a runtime or data error, 2 on bad usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dct_core
from .features import spatial_feature, temporal_feature
from .frame_io import FORMATS, FrameDecodeError, infer_format, load_sequence, slice_grid
from .manifest import ManifestError, read_manifest, summarize, write_heatmap, write_manifest
from .sampler import (
    METHODS,
    InputInfo,
    SamplerConfig,
    resolve_threads,
    sample_random,
    sample_top_fraction,
    sample_video,
    score_video,
)

ORACLE_TOLERANCE = 1e-9
DEFAULT_SIZES = ("4x4", "8x8", "16x16", "64x64", "16x8")


class UsageError(Exception):
    pass


def _threads(value):
    if value == "max":
        return "max"
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'max', got {value!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("thread count must be at least 1")
    return n


def _frame_range(value):
    first, sep, last = value.partition("-")
    try:
        a = int(first)
        b = int(last) if sep else a
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A-B, got {value!r}")
    if a < 1 or b < a:
        raise argparse.ArgumentTypeError(f"bad frame range {value!r}")
    return a, b


def _size(value):
    w, sep, h = value.lower().partition("x")
    try:
        w, h = int(w), int(h) if sep else int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {value!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"bad size {value!r}")
    return w, h


def _add_input_args(p):
    p.add_argument("--input", required=True, help="y4m file, raw .yuv file or directory of .pgm frames")
    p.add_argument("--format", choices=FORMATS, help="input format (default: from the extension)")
    p.add_argument("--width", type=int, help="frame width (raw input only)")
    p.add_argument("--height", type=int, help="frame height (raw input only)")
    p.add_argument("--patch-size", type=int, help="square patch side (default 64)")
    p.add_argument("--patch-w", type=int)
    p.add_argument("--patch-h", type=int)
    p.add_argument("--frames", type=_frame_range, metavar="A-B", help="1-based inclusive frame range")
    p.add_argument("--threads", type=_threads, default=None,
                   help="worker threads, or 'max' (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eps-sample", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="select training patches and write a manifest")
    _add_input_args(p)
    p.add_argument("--clusters", type=int, default=2, help="histogram bins per metric (default 2)")
    p.add_argument("--method", choices=METHODS, default="eps")
    p.add_argument("--fraction", type=float, help="share of patches per frame (baselines)")
    p.add_argument("--seed", type=int, help="seed for the random baseline")
    p.add_argument("--out", required=True, help="manifest path")
    p.add_argument("--emit-scores", action="store_true", help="include per-patch SF/TF in the manifest")
    p.add_argument("--quiet", action="store_true", help="do not print the summary")
    p.set_defaults(func=run_sample)

    p = sub.add_parser("heatmap", help="write per-frame SF/TF heatmaps as PGM")
    _add_input_args(p)
    p.add_argument("--heatmap-prefix", required=True, help="output path prefix")
    p.add_argument("--upscale", type=int, default=1, help="repeat each patch pixel n x n")
    p.set_defaults(func=run_heatmap)

    p = sub.add_parser("stats", help="summarize an existing manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=run_stats)

    p = sub.add_parser("oracle-check", help="cross-check the DCT against its brute-force definition")
    p.add_argument("--trials", type=int, default=100, help="random patches per size (default 100)")
    p.add_argument("--sizes", type=_size, nargs="+", default=[_size(s) for s in DEFAULT_SIZES],
                   metavar="WxH")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=run_oracle_check)
    return parser


def _patch_dims(args):
    if args.patch_size is not None and (args.patch_w is not None or args.patch_h is not None):
        raise UsageError("use either --patch-size or --patch-w/--patch-h")
    size = args.patch_size if args.patch_size is not None else 64
    w = args.patch_w if args.patch_w is not None else size
    h = args.patch_h if args.patch_h is not None else size
    if w < 1 or h < 1:
        raise UsageError("patch dimensions must be positive")
    return w, h


def _load(args):
    fmt = args.format
    if fmt is None:
        try:
            fmt = infer_format(args.input)
        except FrameDecodeError as exc:
            raise UsageError(str(exc))
    if fmt == "yuv420p8" and (args.width is None or args.height is None):
        raise UsageError("raw input requires dimensions (--width and --height)")
    seq = load_sequence(args.input, fmt, args.width, args.height)
    return fmt, seq


def run_sample(args) -> int:
    patch_w, patch_h = _patch_dims(args)
    try:
        config = SamplerConfig(patch_w, patch_h, args.clusters, args.method, args.fraction, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    fmt, seq = _load(args)
    first = 1
    if args.frames is not None:
        first, last = args.frames
        seq = seq.subsequence(first, last)
    source = InputInfo(str(args.input), fmt, seq.width, seq.height, seq.frame_count, first)
    threads = resolve_threads(args.threads)

    if config.method == "eps":
        manifest = sample_video(seq, config, threads, args.emit_scores, source)
    elif config.method == "random":
        grid = slice_grid(seq.width, seq.height, patch_w, patch_h)
        manifest = sample_random(grid, seq.frame_count, config.fraction, config.seed, source)
    else:
        grid = slice_grid(seq.width, seq.height, patch_w, patch_h)
        fields = score_video(seq, grid, threads)
        manifest = sample_top_fraction(fields, config.fraction, args.emit_scores, source)

    write_manifest(manifest, args.out)
    if not args.quiet:
        sys.stdout.write(summarize(manifest))
    return 0


def run_heatmap(args) -> int:
    patch_w, patch_h = _patch_dims(args)
    if args.upscale < 1:
        raise UsageError("--upscale must be at least 1")
    _, seq = _load(args)
    first, last = args.frames if args.frames is not None else (1, seq.frame_count)
    if last > seq.frame_count:
        raise ValueError(f"frame range {first}-{last} outside 1-{seq.frame_count}")
    grid = slice_grid(seq.width, seq.height, patch_w, patch_h)
    # Score from one frame early so the range's first TF has its predecessor.
    start = max(1, first - 1)
    fields = score_video(seq.subsequence(start, last), grid, resolve_threads(args.threads))
    prefix = args.heatmap_prefix
    for offset, f in enumerate(fields):
        t = start + offset
        if t < first:
            continue
        if t > 1:
            # Fields are numbered inside the subsequence; restore the real index.
            f = type(f)(t, f.grid, f.sf, f.tf)
        write_heatmap(f, "SF", f"{prefix}_f{t}_sf.pgm", args.upscale)
        if t == 1:
            print("eps-sample: warning: frame 1 has no TF heatmap", file=sys.stderr)
        else:
            write_heatmap(f, "TF", f"{prefix}_f{t}_tf.pgm", args.upscale)
    return 0


def run_stats(args) -> int:
    manifest = read_manifest(args.manifest)
    sys.stdout.write(summarize(manifest))
    return 0


def oracle_deviations(trials: int = 100, sizes=None, seed: int = 0) -> dict[str, float]:
    """Worst deviation of each DCT identity over random 8-bit patches."""
    sizes = sizes or [_size(s) for s in DEFAULT_SIZES]
    rng = np.random.default_rng(seed)
    worst = {"dct2d vs naive (max abs)": 0.0,
             "parseval (rel)": 0.0,
             "tf vs sf(a-b) (abs)": 0.0}
    for w, h in sizes:
        a = rng.integers(0, 256, size=(trials, h, w)).astype(np.float64)
        b = rng.integers(0, 256, size=(trials, h, w)).astype(np.float64)
        fast = dct_core.dct2d(a)
        slow = dct_core.dct2d_naive(a)
        worst["dct2d vs naive (max abs)"] = max(worst["dct2d vs naive (max abs)"],
                                                float(np.abs(fast - slow).max()))
        energy = (a ** 2).sum(axis=(1, 2))
        rel = np.abs((fast ** 2).sum(axis=(1, 2)) - energy) / np.maximum(energy, 1.0)
        worst["parseval (rel)"] = max(worst["parseval (rel)"], float(rel.max()))
        ma, mb = dct_core.masked(fast), dct_core.masked(dct_core.dct2d(b))
        md = dct_core.masked(dct_core.dct2d(a - b))
        for k in range(trials):
            dev = abs(temporal_feature(ma[k], mb[k]) - spatial_feature(md[k]))
            worst["tf vs sf(a-b) (abs)"] = max(worst["tf vs sf(a-b) (abs)"], dev)
    return worst


def run_oracle_check(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    worst = oracle_deviations(args.trials, args.sizes, args.seed)
    ok = True
    for name, dev in worst.items():
        passed = dev < ORACLE_TOLERANCE
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {dev:.3e} (tolerance {ORACLE_TOLERANCE:g})")
    sizes = " ".join(f"{w}x{h}" for w, h in args.sizes)
    print(f"{args.trials} trials per size: {sizes}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"eps-sample: error: {exc}", file=sys.stderr)
        return 2
    except (ManifestError, FrameDecodeError, ValueError, OSError) as exc:
        print(f"eps-sample: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
