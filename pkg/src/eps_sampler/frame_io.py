"""Video decoding to luma planes and the non-overlapping patch grid."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMATS = ("y4m", "yuv420p8", "pgm-seq")

_FORMAT_ALIASES = {
    "y4m": "y4m",
    "yuv420p8": "yuv420p8",
    "raw-yuv420p-8bit": "yuv420p8",
    "yuv": "yuv420p8",
    "pgm-seq": "pgm-seq",
    "grayscale-image-sequence": "pgm-seq",
}

# 8-bit 4:2:0 variants differ only in chroma siting, which is discarded anyway.
_Y4M_420 = {"420", "420jpeg", "420paldv", "420mpeg2"}


class FrameDecodeError(ValueError):
    pass


@dataclass(frozen=True)
class LumaPlane:
    """One frame's 8-bit luma samples, shape (height, width)."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
            raise ValueError(f"luma plane must be a non-empty 2D array, got shape {s.shape}")
        if s.dtype != np.uint8:
            raise ValueError(f"luma samples must be uint8, got {s.dtype}")
        s = s.copy() if s.flags.writeable else s
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class FrameSequence:
    frames: tuple[LumaPlane, ...]

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a frame sequence needs at least one frame")
        w, h = frames[0].width, frames[0].height
        for t, f in enumerate(frames, start=1):
            if (f.width, f.height) != (w, h):
                raise ValueError(f"frame {t} is {f.width}x{f.height}, expected {w}x{h}")
        object.__setattr__(self, "frames", frames)

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, index):
        return self.frames[index]

    def subsequence(self, first: int, last: int) -> FrameSequence:
        """Frames ``first..last`` inclusive, 1-based."""
        if not 1 <= first <= last <= self.frame_count:
            raise ValueError(f"frame range {first}-{last} outside 1-{self.frame_count}")
        return FrameSequence(self.frames[first - 1:last])


@dataclass(frozen=True)
class PatchGrid:
    patch_w: int
    patch_h: int
    cols: int
    rows: int

    @property
    def n_patches(self) -> int:
        return self.cols * self.rows

    @property
    def covered_width(self) -> int:
        return self.cols * self.patch_w

    @property
    def covered_height(self) -> int:
        return self.rows * self.patch_h

    def rect(self, row: int, col: int) -> tuple[int, int, int, int]:
        """(y0, x0, y1, x1) half-open pixel rectangle of patch (row, col)."""
        self._check(row, col)
        y0, x0 = row * self.patch_h, col * self.patch_w
        return y0, x0, y0 + self.patch_h, x0 + self.patch_w

    def _check(self, row, col):
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"patch ({row}, {col}) outside {self.rows}x{self.cols} grid")


def slice_grid(width: int, height: int, patch_w: int, patch_h: int | None = None) -> PatchGrid:
    """Tile a width x height frame with patch_w x patch_h patches.

    Remainder pixels on the right and bottom belong to no patch.
    """
    if patch_h is None:
        patch_h = patch_w
    if min(width, height, patch_w, patch_h) < 1:
        raise ValueError("frame and patch dimensions must be positive")
    if patch_w > width or patch_h > height:
        raise ValueError(f"patch {patch_w}x{patch_h} larger than frame {width}x{height}")
    return PatchGrid(patch_w, patch_h, width // patch_w, height // patch_h)


def extract_patch(plane: LumaPlane, grid: PatchGrid, row: int, col: int) -> np.ndarray:
    y0, x0, y1, x1 = grid.rect(row, col)
    if y1 > plane.height or x1 > plane.width:
        raise ValueError("grid does not fit this plane")
    return plane.samples[y0:y1, x0:x1]


def patch_stack(plane: LumaPlane, grid: PatchGrid) -> np.ndarray:
    """All patches as a (rows, cols, patch_h, patch_w) view, no copy."""
    s = plane.samples[: grid.covered_height, : grid.covered_width]
    return s.reshape(grid.rows, grid.patch_h, grid.cols, grid.patch_w).swapaxes(1, 2)


# ---------------------------------------------------------------- decoding


def infer_format(path) -> str:
    p = Path(path)
    if p.is_dir():
        return "pgm-seq"
    ext = p.suffix.lower()
    if ext == ".y4m":
        return "y4m"
    if ext in (".yuv", ".raw"):
        return "yuv420p8"
    raise FrameDecodeError(f"cannot infer input format from {p.name!r}; pass a format explicitly")


def load_sequence(source, fmt: str | None = None, width: int | None = None,
                  height: int | None = None) -> FrameSequence:
    """Decode ``source`` into its luma planes, in display order.

    ``fmt`` is one of ``y4m``, ``yuv420p8`` (headerless planar 4:2:0, needs
    ``width``/``height``) or ``pgm-seq`` (a directory of P5 files, read in
    lexicographic filename order). Chroma is discarded.
    """
    source = Path(source)
    if fmt is None:
        fmt = infer_format(source)
    try:
        fmt = _FORMAT_ALIASES[fmt]
    except KeyError:
        raise FrameDecodeError(f"unknown input format {fmt!r}") from None
    if fmt == "yuv420p8" and (width is None or height is None):
        raise FrameDecodeError("raw input requires dimensions")
    if not os.access(source, os.R_OK):
        raise FrameDecodeError(f"cannot read {source}")
    if fmt == "y4m":
        return parse_y4m(source.read_bytes())
    if fmt == "yuv420p8":
        return parse_raw_yuv420(source.read_bytes(), width, height)
    return _load_pgm_dir(source)


def _chroma_size(width, height):
    return 2 * ((width + 1) // 2) * ((height + 1) // 2)


def parse_raw_yuv420(data: bytes, width: int, height: int) -> FrameSequence:
    if width < 1 or height < 1:
        raise FrameDecodeError("raw dimensions must be positive")
    luma = width * height
    frame_size = luma + _chroma_size(width, height)
    if not data:
        raise FrameDecodeError("truncated frame data: file is empty")
    n, rem = divmod(len(data), frame_size)
    if rem:
        raise FrameDecodeError(
            f"truncated frame data: frame {n + 1} has {rem} of {frame_size} bytes")
    buf = np.frombuffer(data, dtype=np.uint8)
    frames = [LumaPlane(buf[t * frame_size:t * frame_size + luma].reshape(height, width))
              for t in range(n)]
    return FrameSequence(tuple(frames))


def parse_y4m(data: bytes) -> FrameSequence:
    nl = data.find(b"\n")
    if nl < 0 or not data.startswith(b"YUV4MPEG2"):
        raise FrameDecodeError("malformed y4m header: missing YUV4MPEG2 signature")
    params = data[:nl].decode("ascii", "replace").split()[1:]
    width = height = None
    colorspace = "420jpeg"
    for p in params:
        key, val = p[0], p[1:]
        if key == "W":
            width = int(val)
        elif key == "H":
            height = int(val)
        elif key == "C":
            colorspace = val
    if not width or not height or width < 1 or height < 1:
        raise FrameDecodeError("malformed y4m header: missing W/H")
    if colorspace == "mono":
        frame_size = width * height
    elif colorspace in _Y4M_420:
        frame_size = width * height + _chroma_size(width, height)
    else:
        raise FrameDecodeError(f"unsupported y4m colorspace C{colorspace} (8-bit 4:2:0 or mono only)")

    buf = np.frombuffer(data, dtype=np.uint8)
    luma = width * height
    frames = []
    pos = nl + 1
    while pos < len(data):
        t = len(frames) + 1
        hdr_end = data.find(b"\n", pos)
        if not data.startswith(b"FRAME", pos) or hdr_end < 0:
            raise FrameDecodeError(f"malformed y4m: expected FRAME marker for frame {t}")
        start = hdr_end + 1
        if start + frame_size > len(data):
            raise FrameDecodeError(
                f"truncated frame data: frame {t} has {len(data) - start} of {frame_size} bytes")
        frames.append(LumaPlane(buf[start:start + luma].reshape(height, width)))
        pos = start + frame_size
    if not frames:
        raise FrameDecodeError("truncated frame data: no frames after header")
    return FrameSequence(tuple(frames))


def write_y4m(path, frames, fps: str = "30:1") -> None:
    """Write luma arrays as 8-bit 4:2:0 y4m with neutral chroma."""
    frames = [np.asarray(f, dtype=np.uint8) for f in frames]
    h, w = frames[0].shape
    chroma = np.full(_chroma_size(w, h), 128, dtype=np.uint8).tobytes()
    with open(path, "wb") as fh:
        fh.write(f"YUV4MPEG2 W{w} H{h} F{fps} Ip A1:1 C420jpeg\n".encode("ascii"))
        for f in frames:
            fh.write(b"FRAME\n")
            fh.write(np.ascontiguousarray(f).tobytes())
            fh.write(chroma)


# P5 reading lives here; the writer is in manifest.py next to the heatmaps.
_PNM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([^\s#]+)")


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    for _ in range(4):
        m = _PNM_TOKEN.match(data, pos)
        if not m:
            raise FrameDecodeError(f"{path}: malformed PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise FrameDecodeError(f"{path}: not a binary PGM (P5)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FrameDecodeError(f"{path}: malformed PGM header") from None
    if maxval > 255:
        raise FrameDecodeError(f"{path}: maxval {maxval} is not 8-bit")
    pos += 1  # single whitespace byte after maxval
    need = width * height
    if len(data) - pos < need:
        raise FrameDecodeError(f"{path}: truncated pixel data")
    return np.frombuffer(data, dtype=np.uint8, count=need, offset=pos).reshape(height, width)


def _load_pgm_dir(directory: Path) -> FrameSequence:
    if not directory.is_dir():
        raise FrameDecodeError(f"{directory} is not a directory of PGM files")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".pgm")
    if not files:
        raise FrameDecodeError(f"truncated frame data: no .pgm files in {directory}")
    planes = [LumaPlane(read_pgm(p)) for p in files]
    try:
        return FrameSequence(tuple(planes))
    except ValueError as exc:
        raise FrameDecodeError(str(exc)) from None
