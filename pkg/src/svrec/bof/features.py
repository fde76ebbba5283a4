"""Space-time interest points and their HoG/HoF descriptors.

Detection follows the Harris extension to space-time: a 3x3 second-moment
matrix of scale-normalised gradients, integrated with a Gaussian of
``integration`` times the detection scale, scored by
``det(mu) - k * trace(mu)**3``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter, maximum_filter

from .. import kernels
from ..video import Clip
from .flow import clip_flow

DESCRIPTOR_SIZE = kernels.DESCRIPTOR_SIZE
HOG_SIZE = kernels.N_CELLS * kernels.HOG_BINS
NO_MOTION = 0.25  # px/frame; slower flow falls in the no-motion HoF bin
TRUNCATE = 3.0  # Gaussian support in standard deviations


class ClipTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class InterestPoint:
    x: int
    y: int
    t: int
    sigma: float
    tau: float
    response: float


@dataclass
class StipParams:
    sigma: float = 1.5
    tau: float = 1.5
    integration: float = 2.0
    k: float = 0.005
    threshold: float = 1e-11
    max_points: int = 80
    # extra (sigma, tau) pairs for multi-scale detection
    extra_scales: list = field(default_factory=list)
    # cuboid half-extent in units of sigma / tau
    cuboid_xy: float = 9.0
    cuboid_t: float = 4.0

    def scales(self) -> list[tuple[float, float]]:
        return [(self.sigma, self.tau)] + [tuple(s) for s in self.extra_scales]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> StipParams:
        return cls(**d)


def temporal_support(tau: float) -> int:
    return int(math.ceil(2.0 * tau))


def harris3d_response(volume: np.ndarray, sigma: float, tau: float, integration: float, k: float) -> np.ndarray:
    """Corner score for a (T, H, W) float volume (computed in the volume's dtype)."""
    smooth = gaussian_filter(volume, (tau, sigma, sigma), mode="nearest", truncate=TRUNCATE)
    lt, ly, lx = np.gradient(smooth)
    lx *= sigma
    ly *= sigma
    lt *= tau
    isig = (integration * tau, integration * sigma, integration * sigma)

    def g(z):
        return gaussian_filter(z, isig, mode="nearest", truncate=TRUNCATE)

    xx, yy, tt = g(lx * lx), g(ly * ly), g(lt * lt)
    xy, xt, yt = g(lx * ly), g(lx * lt), g(ly * lt)
    det = xx * (yy * tt - yt * yt) - xy * (xy * tt - yt * xt) + xt * (xy * yt - yy * xt)
    trace = xx + yy + tt
    return det - k * trace**3


def detect_stips(clip: Clip, params: StipParams | None = None) -> list[InterestPoint]:
    params = params or StipParams()
    volume = clip.frames.astype(np.float32) / np.float32(255.0)
    points: list[InterestPoint] = []
    for sigma, tau in params.scales():
        need = 2 * temporal_support(tau) + 1
        if clip.n_frames < need:
            raise ClipTooShortError(f"{clip.n_frames} frames, temporal scale {tau} needs {need}")
        if not math.isfinite(params.threshold):
            continue
        h = harris3d_response(volume, sigma, tau, params.integration, params.k)
        peaks = (h == maximum_filter(h, size=3, mode="nearest")) & (h > params.threshold)
        for t, y, x in zip(*np.nonzero(peaks)):
            points.append(InterestPoint(int(x), int(y), int(t), float(sigma), float(tau), float(h[t, y, x])))
    # strongest first; position breaks ties so the order is total
    points.sort(key=lambda p: (-p.response, p.t, p.y, p.x, p.sigma))
    return points[: params.max_points]


# --------------------------------------------------------------------------
# descriptors


def _direction_bin(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Four bins centred on +x, +y, -x, -y (image axes).

    Bin ``b`` covers angles ``[(2b - 1) pi/4, (2b + 1) pi/4)``; a zero vector
    falls in bin 0. Written as sign tests instead of ``arctan2``.
    """
    out = np.zeros(np.shape(dx), dtype=np.int64)
    out[(dy >= dx) & (dy > -dx)] = 1
    out[(dy <= -dx) & (dy > dx)] = 2
    out[(dy <= dx) & (dy < -dx)] = 3
    return out


class ClipFeatures:
    """Gradient and flow maps for frames ``t0 .. t1 - 1`` of a clip.

    Descriptors only read frames near their points, so callers restrict the
    span to what the cuboids touch.
    """

    def __init__(self, clip: Clip, grad_sigma: float = 1.0, t0: int = 0, t1: int | None = None):
        t1 = clip.n_frames if t1 is None else t1
        if not 0 <= t0 < t1 <= clip.n_frames:
            raise ValueError(f"frame span [{t0}, {t1}) outside a {clip.n_frames}-frame clip")
        frames = clip.frames[t0:t1].astype(np.float64) / 255.0
        smooth = gaussian_filter(frames, (0, grad_sigma, grad_sigma), mode="nearest", truncate=TRUNCATE)
        gy, gx = np.gradient(smooth, axis=(1, 2))
        self.hog_mag = np.hypot(gx, gy)
        self.hog_bin = _direction_bin(gx, gy)
        u, v = clip_flow(clip.frames, t0, t1)
        mag = np.hypot(u, v)
        self.hof_bin = np.where(mag < NO_MOTION, 4, _direction_bin(u, v))
        self.t0 = t0


def _normalise_cells(raw: np.ndarray) -> np.ndarray:
    out = raw.copy()
    for start, width in ((0, kernels.HOG_BINS), (HOG_SIZE, kernels.HOF_BINS)):
        n = kernels.N_CELLS * width
        block = out[:, start : start + n].reshape(len(out), kernels.N_CELLS, width)
        total = block.sum(axis=2, keepdims=True)
        np.divide(block, total, out=block, where=total > 0)
        out[:, start : start + n] = block.reshape(len(out), n)
    return out


def describe_points(clip: Clip, points: list[InterestPoint], params: StipParams | None = None,
                    features: ClipFeatures | None = None) -> np.ndarray:
    """Descriptors (N, 162): 18 cells x 4 HoG bins, then 18 cells x 5 HoF bins."""
    params = params or StipParams()
    if not points:
        return np.zeros((0, DESCRIPTOR_SIZE))
    t_max, h, w = clip.frames.shape
    for p in points:
        if not (0 <= p.x < w and 0 <= p.y < h and 0 <= p.t < t_max):
            raise ValueError(f"point ({p.x}, {p.y}, {p.t}) lies outside the {w}x{h}x{t_max} clip")
    pts = np.array([[p.x, p.y, p.t] for p in points], dtype=np.int64)
    half_xy = np.array([max(2, int(round(params.cuboid_xy * p.sigma))) for p in points], dtype=np.int64)
    half_t = np.array([max(1, int(round(params.cuboid_t * p.tau))) for p in points], dtype=np.int64)
    if features is None:
        t0 = max(0, int((pts[:, 2] - half_t).min()))
        t1 = min(t_max, int((pts[:, 2] + half_t).max()))
        features = ClipFeatures(clip, t0=t0, t1=t1)
    feats = features
    # clamping inside the span equals clamping to the clip: the span covers every cuboid
    pts[:, 2] -= feats.t0
    raw = kernels.cell_histograms(feats.hog_bin, feats.hog_mag, feats.hof_bin, pts, half_xy, half_t)
    return _normalise_cells(raw)


def describe(clip: Clip, point: InterestPoint, params: StipParams | None = None) -> np.ndarray:
    return describe_points(clip, [point], params)[0]


def extract_descriptors(clip: Clip, params: StipParams | None = None) -> np.ndarray:
    """All descriptors of one clip; clips too short to analyse yield none."""
    params = params or StipParams()
    try:
        points = detect_stips(clip, params)
    except ClipTooShortError:
        points = []
    return describe_points(clip, points, params)
