"""Orthonormal type-II 2D DCT of image patches.

Coefficient arrays use the patch's own layout: ``coeffs[j, i]`` is the
coefficient at horizontal frequency ``i`` (column) and vertical frequency
``j`` (row). Pixels are widened to float64 with no level shift.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis, row k = frequency k, shape (n, n)."""
    k = np.arange(n, dtype=np.float64)[:, None]
    x = np.arange(n, dtype=np.float64)[None, :]
    m = np.cos(np.pi * (2.0 * x + 1.0) * k / (2.0 * n))
    m[0] *= math.sqrt(1.0 / n)
    m[1:] *= math.sqrt(2.0 / n)
    m.flags.writeable = False
    return m


def _as_float(patch) -> np.ndarray:
    a = np.asarray(patch, dtype=np.float64)
    if a.ndim < 2 or a.shape[-1] < 1 or a.shape[-2] < 1:
        raise ValueError(f"expected (..., h, w) patch data, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("patch contains non-finite values")
    return a


def dct2d(patch) -> np.ndarray:
    """2D DCT of one (h, w) patch or a stack of them, shape (..., h, w).

    Separable: column transform ``C_h @ P`` then row transform ``@ C_w.T``.
    Each patch in a stack is transformed by the same per-matrix products, so
    a patch's coefficients do not depend on what else is in the stack.
    """
    a = _as_float(patch)
    h, w = a.shape[-2:]
    return np.matmul(np.matmul(dct_matrix(h), a), dct_matrix(w).T)


def dct2d_naive(patch) -> np.ndarray:
    """Direct evaluation of the DCT definition, one coefficient at a time.

    Every coefficient is a full double sum over all pixels against its own
    cosine product, with the cosines taken from :func:`math.cos`. This is
    O((wh)^2) and only meant as a test oracle.
    """
    a = _as_float(patch)
    h, w = a.shape[-2:]
    cos_x = [[math.cos(math.pi * (2 * x + 1) * i / (2 * w)) for x in range(w)] for i in range(w)]
    cos_y = [[math.cos(math.pi * (2 * y + 1) * j / (2 * h)) for y in range(h)] for j in range(h)]
    flat = a.reshape(-1, h * w)
    out = np.empty(flat.shape[:1] + (h, w))
    for j in range(h):
        alpha_j = math.sqrt((1.0 if j == 0 else 2.0) / h)
        for i in range(w):
            alpha_i = math.sqrt((1.0 if i == 0 else 2.0) / w)
            basis = np.array([cy * cx for cy in cos_y[j] for cx in cos_x[i]])
            out[:, j, i] = alpha_i * alpha_j * (flat * basis).sum(axis=1)
    return out.reshape(a.shape)


def masked(block) -> np.ndarray:
    """Copy of ``block`` with the DC coefficient(s) set to exactly 0."""
    out = np.array(block, dtype=np.float64, copy=True)
    out[..., 0, 0] = 0.0
    return out
