"""Selection manifests (``eps-manifest v1``), score heatmaps and reports.

A manifest is line-oriented text. Block headers (``config``, ``grid``,
``frame <t>``, ``stats``) start at column 0; their ``key value`` lines are
indented by two spaces. Real numbers are printed with 9 significant digits
and ``-`` stands for an absent value. Example::

    eps-manifest v1
    config
      method eps
      patch_w 64
      ...
    frame 2
      sf_threshold 1834.2019
      tf_threshold 412.700012
      select 0 4
      select 3 11
    stats
      total_candidates 3600
      ...
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .features import ScoreField
from .frame_io import PatchGrid
from .sampler import FrameSelection, InputInfo, SamplerConfig, SelectionManifest

HEADER = "eps-manifest v1"


class ManifestError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _num(x) -> str:
    if x is None:
        return "-"
    return format(float(x), ".9g")


def _opt(x) -> str:
    return "-" if x is None else str(x)


def format_manifest(m: SelectionManifest) -> str:
    c, g, st = m.config, m.grid, m.stats
    out = [HEADER, "config",
           f"  method {c.method}",
           f"  patch_w {c.patch_w}",
           f"  patch_h {c.patch_h}",
           f"  clusters {c.n_clusters if c.method == 'eps' else '-'}",
           f"  fraction {_opt(c.fraction)}",
           f"  seed {_opt(c.seed)}"]
    s = m.source
    if s is None:
        out.append("  input -")
    else:
        if "\n" in s.path or "\r" in s.path:
            raise ValueError("input path cannot contain line breaks")
        out += [f"  input_path {s.path}",
                f"  input_format {s.format}",
                f"  input_width {s.width}",
                f"  input_height {s.height}",
                f"  input_frames {s.frame_count}",
                f"  input_first_frame {s.first_frame}"]
    out += ["grid", f"  cols {g.cols}", f"  rows {g.rows}"]
    for f in m.frames:
        out += [f"frame {f.frame}",
                f"  sf_threshold {_num(f.sf_threshold)}",
                f"  tf_threshold {_num(f.tf_threshold)}"]
        out += [f"  select {r} {col}" for r, col in sorted(f.selected)]
        if f.scores is not None:
            for k, (sf, tf) in enumerate(f.scores):
                out.append(f"  score {k // g.cols} {k % g.cols} {_num(sf)} {_num(tf)}")
    out += ["stats",
            f"  total_candidates {st.total_candidates}",
            f"  total_selected {st.total_selected}",
            f"  fraction {_num(st.fraction)}",
            f"  selected_min {st.selected_min}",
            f"  selected_max {st.selected_max}",
            f"  selected_mean {_num(st.selected_mean)}"]
    return "\n".join(out) + "\n"


def write_manifest(manifest: SelectionManifest, path) -> None:
    Path(path).write_bytes(format_manifest(manifest).encode("utf-8"))


def read_manifest(path) -> SelectionManifest:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise ManifestError("unrecognized manifest version", 1) from None
    return parse_manifest(text)


def _parse_opt(value, conv, lineno):
    if value == "-":
        return None
    try:
        return conv(value)
    except ValueError:
        raise ManifestError(f"bad value {value!r}", lineno) from None


def parse_manifest(text: str) -> SelectionManifest:
    """Inverse of :func:`format_manifest`; raises ManifestError with a line number."""
    lines = text.split("\n")
    if not lines or lines[0].strip() != HEADER:
        raise ManifestError("unrecognized manifest version", 1)
    if lines[-1] == "":
        lines.pop()

    config: dict = {}
    grid: dict = {}
    stats: dict = {}
    frames: list[dict] = []
    block = None
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        if not raw.startswith("  "):
            words = raw.split()
            if words == ["config"] or words == ["grid"] or words == ["stats"]:
                block = words[0]
            elif len(words) == 2 and words[0] == "frame":
                try:
                    t = int(words[1])
                except ValueError:
                    raise ManifestError(f"bad frame index {words[1]!r}", lineno) from None
                frames.append({"frame": t, "select": [], "scores": [], "line": lineno})
                block = "frame"
            else:
                raise ManifestError(f"unknown block {raw.strip()!r}", lineno)
            continue
        if block is None:
            raise ManifestError("key outside of any block", lineno)
        key, _, value = raw.strip().partition(" ")
        if block == "config":
            config[key] = value
        elif block == "grid":
            grid[key] = _parse_opt(value, int, lineno)
        elif block == "stats":
            stats[key] = (value, lineno)
        else:
            fr = frames[-1]
            parts = value.split()
            try:
                if key == "select" and len(parts) == 2:
                    fr["select"].append((int(parts[0]), int(parts[1])))
                elif key == "score" and len(parts) == 4:
                    fr["scores"].append((int(parts[0]), int(parts[1]),
                                         float(parts[2]), _parse_opt(parts[3], float, lineno)))
                elif key in ("sf_threshold", "tf_threshold") and len(parts) == 1:
                    fr[key] = _parse_opt(parts[0], float, lineno)
                else:
                    raise ManifestError(f"unexpected frame entry {raw.strip()!r}", lineno)
            except ValueError as exc:
                if isinstance(exc, ManifestError):
                    raise
                raise ManifestError(f"bad number in {raw.strip()!r}", lineno) from None

    try:
        cfg = SamplerConfig(
            patch_w=int(config["patch_w"]),
            patch_h=int(config["patch_h"]),
            n_clusters=_parse_opt(config["clusters"], int, None) or 2,
            method=config["method"],
            fraction=_parse_opt(config["fraction"], float, None),
            seed=_parse_opt(config["seed"], int, None),
        )
        g = PatchGrid(cfg.patch_w, cfg.patch_h, grid["cols"], grid["rows"])
        source = None
        if config.get("input", "") != "-":
            source = InputInfo(
                path=config["input_path"],
                format=config["input_format"],
                width=int(config["input_width"]),
                height=int(config["input_height"]),
                frame_count=int(config["input_frames"]),
                first_frame=int(config["input_first_frame"]),
            )
    except (KeyError, ValueError, TypeError) as exc:
        raise ManifestError(f"incomplete or invalid config/grid block: {exc}") from None

    selections = []
    for k, fr in enumerate(frames, start=1):
        if fr["frame"] != k:
            raise ManifestError(f"frame {fr['frame']} out of order (expected {k})", fr["line"])
        scores = None
        if fr["scores"]:
            if len(fr["scores"]) != g.n_patches:
                raise ManifestError("score lines do not cover the grid", fr["line"])
            scores = tuple((sf, tf) for _, _, sf, tf in fr["scores"])
        selections.append(FrameSelection(k, tuple(sorted(fr["select"])),
                                         fr.get("sf_threshold"), fr.get("tf_threshold"), scores))
    m = SelectionManifest(cfg, g, tuple(selections), source)

    expect = m.stats
    for key in ("total_candidates", "total_selected", "selected_min", "selected_max"):
        if key in stats and stats[key][0] != str(getattr(expect, key)):
            raise ManifestError(f"stats {key} disagrees with the frame blocks", stats[key][1])
    return m


# ---------------------------------------------------------------- heatmaps


def write_pgm(path, pixels: np.ndarray) -> None:
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def heatmap_pixels(scores: np.ndarray, upscale: int = 1) -> np.ndarray:
    """Min-max normalise to 0..255 (round half up); a flat field maps to 0."""
    s = np.asarray(scores, dtype=np.float64)
    lo, hi = s.min(), s.max()
    if hi > lo:
        px = np.floor(255.0 * (s - lo) / (hi - lo) + 0.5).astype(np.uint8)
    else:
        px = np.zeros(s.shape, dtype=np.uint8)
    if upscale > 1:
        px = np.repeat(np.repeat(px, upscale, axis=0), upscale, axis=1)
    return px


def write_heatmap(field_: ScoreField, metric: str, path, upscale: int = 1) -> None:
    """One pixel per patch (cols wide, rows tall), optionally blown up n x n."""
    metric = metric.upper()
    if metric not in ("SF", "TF"):
        raise ValueError(f"metric must be SF or TF, got {metric!r}")
    if upscale < 1:
        raise ValueError("upscale must be at least 1")
    if metric == "TF" and field_.tf is None:
        raise ValueError(f"frame {field_.frame} has no TF scores (first frame)")
    write_pgm(path, heatmap_pixels(field_.sf if metric == "SF" else field_.tf, upscale))


# ---------------------------------------------------------------- reports


def percent(fraction: float) -> str:
    return f"{100.0 * fraction:.2f} %"


def summarize(manifest: SelectionManifest) -> str:
    st = manifest.stats
    n = manifest.grid.n_patches
    c = manifest.config
    if c.method == "eps":
        what = f"method eps, N={c.n_clusters}"
    else:
        what = f"method {c.method}, r={c.fraction:g}"
    lines = [f"{what}, {c.patch_w}x{c.patch_h} patches, "
             f"{manifest.grid.cols}x{manifest.grid.rows} grid, {len(manifest.frames)} frames",
             f"{'frame':>6} {'selected':>9} {'of':>5} {'sf_threshold':>16} {'tf_threshold':>16}"]
    for f in manifest.frames:
        lines.append(f"{f.frame:>6} {f.count:>9} {n:>5} {_num(f.sf_threshold):>16} {_num(f.tf_threshold):>16}")
    lines.append(f"per frame: min {st.selected_min}, max {st.selected_max}, mean {st.selected_mean:.2f}")
    lines.append(f"selected {st.total_selected} of {st.total_candidates} patches ({percent(st.fraction)})")
    return "\n".join(lines) + "\n"
