"""Per-frame histogram clustering and patch selection.

The EPS rule: bin each frame's SF scores (and, after the first frame, TF
scores) into ``N`` equal-width bins over that frame's [min, max]. Frame 1
keeps the top SF bin; every later frame keeps the patches that sit in the
top SF bin *and* the top TF bin, which may well be nobody.

Random and top-fraction selectors are provided as baselines.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import ScoreField, frame_coefficients, score_coefficients
from .frame_io import FrameSequence, PatchGrid, slice_grid

METHODS = ("eps", "random", "top-fraction")


@dataclass(frozen=True, eq=False)
class Clustering:
    """Equal-width histogram of one metric over one frame.

    ``assignment[k]`` is the bin (1 = lowest, N = highest) of the k-th score.
    """

    n_clusters: int
    metric: str
    edges: np.ndarray
    assignment: np.ndarray

    @property
    def top_threshold(self) -> float:
        """Lower edge of the top bin; a score is in bin N iff it is >= this."""
        return float(self.edges[self.n_clusters - 1])

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == k)


def cluster_histogram(scores, n_clusters: int, metric: str = "SF") -> Clustering:
    """Bin ``scores`` into ``n_clusters`` equal-width bins over [min, max].

    The right edge is closed so the maximum always lands in the top bin.
    When every score is equal there is nothing to rank and all of them go
    to the top bin.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    if s.size == 0:
        raise ValueError("cannot cluster an empty score list")
    if np.isnan(s).any() or np.isinf(s).any():
        raise ValueError("scores must be finite")
    if n_clusters < 1:
        raise ValueError("need at least one cluster")
    lo, hi = float(s.min()), float(s.max())
    n = n_clusters
    if lo == hi:
        edges = np.full(n + 1, lo)
        assignment = np.full(s.size, n, dtype=np.int64)
    else:
        k = np.arange(n + 1, dtype=np.float64)
        edges = np.minimum(lo + (hi - lo) * k / n, hi)
        edges[0], edges[n] = lo, hi
        # Membership is decided against the stored edges so that "bin N" and
        # "score >= top_threshold" can never disagree through rounding.
        assignment = np.searchsorted(edges[1:n], s, side="right").astype(np.int64) + 1
    edges.flags.writeable = False
    assignment.flags.writeable = False
    return Clustering(n, metric, edges, assignment)


@dataclass(frozen=True)
class FrameSelection:
    frame: int
    selected: tuple[tuple[int, int], ...]
    sf_threshold: float | None = None
    tf_threshold: float | None = None
    # Row-major (sf, tf) per patch, only when scores are emitted.
    scores: tuple[tuple[float, float | None], ...] | None = None

    @property
    def count(self) -> int:
        return len(self.selected)


def _coords(indices, cols):
    return tuple((int(k) // cols, int(k) % cols) for k in sorted(indices))


def _score_rows(field_: ScoreField):
    sf = field_.sf.ravel()
    if field_.tf is None:
        return tuple((float(a), None) for a in sf)
    return tuple((float(a), float(b)) for a, b in zip(sf, field_.tf.ravel()))


def select_frame(field_: ScoreField, n_clusters: int, keep_scores: bool = False) -> FrameSelection:
    sf = field_.sf.ravel()
    if not np.isfinite(sf).all() or (field_.tf is not None and not np.isfinite(field_.tf).all()):
        raise ValueError(f"frame {field_.frame}: scores must be finite")
    c_sf = cluster_histogram(sf, n_clusters, "SF")
    top = c_sf.assignment == n_clusters
    tf_threshold = None
    if field_.tf is not None:
        c_tf = cluster_histogram(field_.tf.ravel(), n_clusters, "TF")
        top &= c_tf.assignment == n_clusters
        tf_threshold = c_tf.top_threshold
    return FrameSelection(
        frame=field_.frame,
        selected=_coords(np.flatnonzero(top), field_.grid.cols),
        sf_threshold=c_sf.top_threshold,
        tf_threshold=tf_threshold,
        scores=_score_rows(field_) if keep_scores else None,
    )


@dataclass(frozen=True)
class SamplerConfig:
    patch_w: int = 64
    patch_h: int = 64
    n_clusters: int = 2
    method: str = "eps"
    fraction: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.patch_w < 1 or self.patch_h < 1:
            raise ValueError("patch dimensions must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if self.n_clusters < 1:
            raise ValueError("number of clusters must be at least 1")
        needs_fraction = self.method in ("random", "top-fraction")
        if needs_fraction != (self.fraction is not None):
            raise ValueError(f"--fraction is {'required' if needs_fraction else 'not used'} "
                             f"for method {self.method}")
        if self.fraction is not None:
            _check_fraction(self.fraction)
        if (self.method == "random") != (self.seed is not None):
            raise ValueError("a seed is required for, and only for, the random method")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class InputInfo:
    path: str
    format: str
    width: int
    height: int
    frame_count: int
    first_frame: int = 1


@dataclass(frozen=True)
class ManifestStats:
    total_candidates: int
    total_selected: int
    fraction: float
    selected_min: int
    selected_max: int
    selected_mean: float


@dataclass(frozen=True)
class SelectionManifest:
    config: SamplerConfig
    grid: PatchGrid
    frames: tuple[FrameSelection, ...]
    source: InputInfo | None = None

    def __post_init__(self):
        frames = tuple(self.frames)
        if [f.frame for f in frames] != list(range(1, len(frames) + 1)):
            raise ValueError("frames must be numbered 1..T in order")
        object.__setattr__(self, "frames", frames)

    @property
    def stats(self) -> ManifestStats:
        counts = [f.count for f in self.frames]
        candidates = len(self.frames) * self.grid.n_patches
        selected = sum(counts)
        return ManifestStats(
            total_candidates=candidates,
            total_selected=selected,
            fraction=selected / candidates if candidates else 0.0,
            selected_min=min(counts, default=0),
            selected_max=max(counts, default=0),
            selected_mean=selected / len(counts) if counts else 0.0,
        )


def resolve_threads(threads) -> int:
    if threads is None or threads == "max":
        return os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("thread count must be at least 1")
    return threads


def score_video(sequence: FrameSequence, grid: PatchGrid, threads=1) -> list[ScoreField]:
    """Score every frame; frame t's TF is taken against frame t-1.

    Frames are split into contiguous chunks, one per worker. A chunk
    recomputes the coefficients of the frame just before it, so results do
    not depend on how the frames were split.
    """
    T = sequence.frame_count
    threads = max(1, min(resolve_threads(threads), T))
    fields: list[ScoreField | None] = [None] * T

    def work(lo, hi):
        prev = None if lo == 0 else frame_coefficients(sequence[lo - 1], grid)
        for t in range(lo, hi):
            coeffs = frame_coefficients(sequence[t], grid)
            fields[t] = score_coefficients(t + 1, grid, coeffs, prev)
            prev = coeffs

    if threads == 1:
        work(0, T)
    else:
        bounds = np.linspace(0, T, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(work, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
            for f in futures:
                f.result()
    return fields


def sample_video(sequence: FrameSequence, config: SamplerConfig, threads=1,
                 emit_scores: bool = False, source: InputInfo | None = None) -> SelectionManifest:
    """Run the EPS selection over a whole sequence."""
    if config.method != "eps":
        raise ValueError(f"sample_video runs the eps method, not {config.method!r}")
    grid = slice_grid(sequence.width, sequence.height, config.patch_w, config.patch_h)
    fields = score_video(sequence, grid, threads)
    frames = tuple(select_frame(f, config.n_clusters, emit_scores) for f in fields)
    return SelectionManifest(config, grid, frames, source)


def _check_fraction(r):
    if not (isinstance(r, (int, float)) and 0 < r <= 1):
        raise ValueError(f"fraction must be in (0, 1], got {r!r}")


def _bounded(bitgen: np.random.PCG64, n: int) -> int:
    """Unbiased integer in [0, n) from raw 64-bit PCG64 output."""
    limit = 2**64 - (2**64 % n)
    while True:
        x = int(bitgen.random_raw())
        if x < limit:
            return x % n


def random_count(fraction: float, n_patches: int) -> int:
    # Round half up; the 9-digit rounding absorbs float noise such as 0.175*120.
    return int(math.floor(round(fraction * n_patches, 9) + 0.5))


def sample_random(grid: PatchGrid, frame_count: int, fraction: float, seed: int,
                  source: InputInfo | None = None) -> SelectionManifest:
    """Uniformly pick round(r*C*L) distinct patches per frame.

    The generator is numpy's PCG64 seeded with ``seed``; indices are drawn
    from its raw 64-bit stream by rejection sampling and fed to a partial
    Fisher-Yates shuffle, frame by frame in order. Only the bit stream is
    relied on, which numpy keeps stable across releases.
    """
    _check_fraction(fraction)
    if frame_count < 1:
        raise ValueError("frame_count must be at least 1")
    config = SamplerConfig(grid.patch_w, grid.patch_h, method="random", fraction=fraction, seed=seed)
    n = grid.n_patches
    k = random_count(fraction, n)
    bitgen = np.random.PCG64(seed)
    frames = []
    for t in range(1, frame_count + 1):
        pool = list(range(n))
        for i in range(k):
            j = i + _bounded(bitgen, n - i)
            pool[i], pool[j] = pool[j], pool[i]
        frames.append(FrameSelection(t, _coords(pool[:k], grid.cols)))
    return SelectionManifest(config, grid, tuple(frames), source)


def top_count(fraction: float, n_patches: int) -> int:
    return max(1, math.ceil(round(fraction * n_patches, 9)))


def sample_top_fraction(fields: Sequence[ScoreField], fraction: float,
                        emit_scores: bool = False,
                        source: InputInfo | None = None) -> SelectionManifest:
    """Per frame, keep the ceil(r*C*L) highest-SF patches; ties go to the smaller (row, col)."""
    _check_fraction(fraction)
    if not fields:
        raise ValueError("no score fields given")
    grid = fields[0].grid
    config = SamplerConfig(grid.patch_w, grid.patch_h, method="top-fraction", fraction=fraction)
    k = top_count(fraction, grid.n_patches)
    frames = []
    for f in fields:
        sf = f.sf.ravel()
        # lexsort: last key is primary. Row-major index encodes (row, col).
        order = np.lexsort((np.arange(sf.size), -sf))[:k]
        frames.append(FrameSelection(
            frame=f.frame,
            selected=_coords(order, grid.cols),
            sf_threshold=float(sf[order].min()),
            scores=_score_rows(f) if emit_scores else None,
        ))
    return SelectionManifest(config, grid, tuple(frames), source)
