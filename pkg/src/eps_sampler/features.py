"""Spatial (SF) and temporal (TF) complexity scores of patches.

Both scores are a weighted L1 norm of DC-masked DCT coefficients. The weight
of frequency (i, j) in a w x h patch is ``exp((i*j / (w*h))**2 - 1)``, which
sits at 1/e for most of the spectrum and rises towards 1 only where both
frequencies are high.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .dct_core import dct2d
from .frame_io import LumaPlane, PatchGrid, patch_stack


def weight(i: int, j: int, w: int, h: int) -> float:
    if not (0 <= i < w and 0 <= j < h):
        raise ValueError(f"frequency ({i}, {j}) outside a {w}x{h} patch")
    return math.exp(((i * j) / (w * h)) ** 2 - 1.0)


@lru_cache(maxsize=None)
def weight_table(w: int, h: int) -> np.ndarray:
    """Weights laid out like the coefficients: ``table[j, i] = weight(i, j)``."""
    t = np.array([[weight(i, j, w, h) for i in range(w)] for j in range(h)])
    t.flags.writeable = False
    return t


def _weighted_l1(coeffs: np.ndarray) -> np.ndarray:
    # One contiguous row per patch so every patch is reduced the same way
    # whether it arrives alone or inside a stack.
    h, w = coeffs.shape[-2:]
    terms = np.abs(coeffs) * weight_table(w, h)
    return np.ascontiguousarray(terms).reshape(-1, h * w).sum(axis=1).reshape(coeffs.shape[:-2])


def _require_masked(block):
    if np.any(block[..., 0, 0] != 0.0):
        raise ValueError("coefficient block still has a DC term; apply masked() first")


def spatial_feature(block) -> float:
    """SF of one DC-masked coefficient block."""
    block = np.asarray(block, dtype=np.float64)
    _require_masked(block)
    return float(_weighted_l1(block[None])[0])


def temporal_feature(block_t, block_prev) -> float:
    """TF between a DC-masked block and its co-located block one frame earlier."""
    a = np.asarray(block_t, dtype=np.float64)
    b = np.asarray(block_prev, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"block shapes differ: {a.shape} vs {b.shape}")
    _require_masked(a)
    _require_masked(b)
    return float(_weighted_l1((a - b)[None])[0])


@dataclass(frozen=True)
class PatchScore:
    frame: int
    row: int
    col: int
    sf: float
    tf: float | None


@dataclass(frozen=True)
class ScoreField:
    """Per-patch scores of one frame; ``sf``/``tf`` have shape (rows, cols).

    ``tf`` is None exactly for the first frame of a sequence.
    """

    frame: int
    grid: PatchGrid
    sf: np.ndarray
    tf: np.ndarray | None = None

    def __post_init__(self):
        shape = (self.grid.rows, self.grid.cols)
        if self.sf.shape != shape:
            raise ValueError(f"sf shape {self.sf.shape} does not match grid {shape}")
        if self.tf is not None and self.tf.shape != shape:
            raise ValueError(f"tf shape {self.tf.shape} does not match grid {shape}")
        if (self.tf is None) != (self.frame == 1):
            raise ValueError("tf must be absent exactly for frame 1")

    def scores(self) -> Iterator[PatchScore]:
        """Row-major PatchScore records."""
        for r in range(self.grid.rows):
            for c in range(self.grid.cols):
                tf = None if self.tf is None else float(self.tf[r, c])
                yield PatchScore(self.frame, r, c, float(self.sf[r, c]), tf)


def frame_coefficients(plane: LumaPlane, grid: PatchGrid, threads: int = 1) -> np.ndarray:
    """DC-masked coefficients of every patch, shape (rows, cols, h, w)."""
    if grid.covered_width > plane.width or grid.covered_height > plane.height:
        raise ValueError("grid does not fit the frame")
    stack = patch_stack(plane, grid).reshape(-1, grid.patch_h, grid.patch_w)
    out = np.empty(stack.shape, dtype=np.float64)

    def work(lo, hi):
        out[lo:hi] = dct2d(stack[lo:hi])

    _fan_out(work, len(stack), threads)
    out[:, 0, 0] = 0.0
    return out.reshape(grid.rows, grid.cols, grid.patch_h, grid.patch_w)


def _fan_out(work, n, threads):
    """Run ``work(lo, hi)`` over disjoint slices of range(n)."""
    threads = max(1, min(threads, n))
    if threads == 1:
        work(0, n)
        return
    bounds = np.linspace(0, n, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for f in [pool.submit(work, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]:
            f.result()


def score_coefficients(frame: int, grid: PatchGrid, coeffs: np.ndarray,
                       prev_coeffs: np.ndarray | None) -> ScoreField:
    sf = _weighted_l1(coeffs)
    tf = None if prev_coeffs is None else _weighted_l1(coeffs - prev_coeffs)
    return ScoreField(frame, grid, sf, tf)


def score_frame(plane_t: LumaPlane, plane_prev: LumaPlane | None, grid: PatchGrid,
                frame: int | None = None, threads: int = 1) -> ScoreField:
    """Score every patch of ``plane_t``; TF against ``plane_prev`` when given.

    ``frame`` defaults to 1 without a previous plane and 2 with one.
    """
    if plane_prev is not None and (plane_prev.width, plane_prev.height) != (plane_t.width, plane_t.height):
        raise ValueError(
            f"frame sizes differ: {plane_t.width}x{plane_t.height} vs {plane_prev.width}x{plane_prev.height}")
    if frame is None:
        frame = 1 if plane_prev is None else 2
    coeffs = frame_coefficients(plane_t, grid, threads)
    prev = None if plane_prev is None else frame_coefficients(plane_prev, grid, threads)
    return score_coefficients(frame, grid, coeffs, prev)
