"""Lucas-Kanade optical flow, dense, one 5x5 window per pixel."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

MIN_EIGENVALUE = 1e-4


def _central_diff(img: np.ndarray, axis: int) -> np.ndarray:
    pad = [(0, 0)] * img.ndim
    pad[axis] = (1, 1)
    p = np.pad(img, pad, mode="edge")
    hi = [slice(None)] * img.ndim
    lo = [slice(None)] * img.ndim
    hi[axis] = slice(2, None)
    lo[axis] = slice(None, -2)
    return 0.5 * (p[tuple(hi)] - p[tuple(lo)])


def lucas_kanade(prev: np.ndarray, nxt: np.ndarray, window: int = 5, min_eig: float = MIN_EIGENVALUE):
    """Flow ``(u, v)`` from ``prev`` to ``nxt``; accepts single frames or (T, H, W) stacks.

    Intensities are scaled to [0, 1]. Spatial gradients are central
    differences of the mean of both frames; windows whose structure tensor
    has smallest eigenvalue below ``min_eig`` get zero flow.
    """
    a = np.asarray(prev, dtype=np.float64) / 255.0
    b = np.asarray(nxt, dtype=np.float64) / 255.0
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    mean = 0.5 * (a + b)
    ix = _central_diff(mean, -1)
    iy = _central_diff(mean, -2)
    it = b - a
    size = (1,) * (a.ndim - 2) + (window, window)
    area = float(window * window)

    def wsum(z):
        return uniform_filter(z, size=size, mode="nearest") * area

    sxx, syy, sxy = wsum(ix * ix), wsum(iy * iy), wsum(ix * iy)
    sxt, syt = wsum(ix * it), wsum(iy * it)
    det = sxx * syy - sxy * sxy
    half_tr = 0.5 * (sxx + syy)
    eig_min = half_tr - np.sqrt(np.maximum(half_tr * half_tr - det, 0.0))
    ok = eig_min >= min_eig
    safe = np.where(ok, det, 1.0)
    u = np.where(ok, (-syy * sxt + sxy * syt) / safe, 0.0)
    v = np.where(ok, (sxy * sxt - sxx * syt) / safe, 0.0)
    return u, v


def optical_flow(prev: np.ndarray, nxt: np.ndarray) -> np.ndarray:
    """Per-pixel flow field of shape (H, W, 2) holding (u, v)."""
    if np.shape(prev) != np.shape(nxt):
        raise ValueError(f"frame shapes differ: {np.shape(prev)} vs {np.shape(nxt)}")
    u, v = lucas_kanade(prev, nxt)
    return np.stack([u, v], axis=-1)


def clip_flow(frames: np.ndarray, t0: int = 0, t1: int | None = None):
    """Forward flow for frames ``t0 .. t1 - 1`` of a (T, H, W) stack.

    Frame ``t`` gets the flow towards ``t + 1``; the last frame reuses the
    flow into it. A single-frame clip has zero flow.
    """
    n = frames.shape[0]
    t1 = n if t1 is None else t1
    if n < 2:
        z = np.zeros((t1 - t0,) + frames.shape[1:], dtype=np.float64)
        return z, z.copy()
    lo = min(t0, n - 2)
    hi = min(t1, n - 1)
    u, v = lucas_kanade(frames[lo:hi], frames[lo + 1 : hi + 1])
    if t1 == n:
        u, v = np.concatenate([u, u[-1:]]), np.concatenate([v, v[-1:]])
    return u[t0 - lo :], v[t0 - lo :]
