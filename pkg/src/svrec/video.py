"""Grayscale clip container, SVR raw file I/O and frame geometry.

A frame is a 2-D ``uint8`` array (height, width). A :class:`Clip` stacks
frames into a ``(T, H, W)`` array and keeps the frame rate as an exact
:class:`fractions.Fraction` so that 22 -> 11 -> 5.5 fps stays lossless.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

# Smallest frame side the recognition pipeline accepts; raw I/O takes any size.
MIN_SIDE = 8
SVR_MAGIC = b"SVR1"
_HEADER = struct.Struct("<4sIIIIIB3s")
HEADER_SIZE = _HEADER.size  # 28 bytes


class SvrFormatError(ValueError):
    """Base class for malformed SVR files."""


class BadMagicError(SvrFormatError):
    pass


class TruncatedError(SvrFormatError):
    pass


class HeaderMismatchError(SvrFormatError):
    """Header fields disagree with each other or with the payload size."""


def round_half_up(values: np.ndarray) -> np.ndarray:
    """Round to the nearest integer, halves upward, clamp to [0, 255] as uint8."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def check_frame(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim != 2 or frame.dtype != np.uint8:
        raise ValueError(f"frame must be a 2-D uint8 array, got {frame.dtype} {frame.shape}")
    h, w = frame.shape
    if w < MIN_SIDE or h < MIN_SIDE:
        raise ValueError(f"frame {w}x{h} is smaller than {MIN_SIDE}x{MIN_SIDE}")
    return frame


def _as_fraction(fps) -> Fraction:
    if isinstance(fps, float):
        return Fraction(fps).limit_denominator(1_000_000)
    return Fraction(fps)


@dataclass(eq=False)
class Clip:
    """Sequence of equally sized grayscale frames at an exact frame rate."""

    frames: np.ndarray
    fps: Fraction = field(default=Fraction(22))

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames)
        if frames.ndim != 3 or frames.dtype != np.uint8:
            raise ValueError(f"frames must be a (T, H, W) uint8 array, got {frames.dtype} {frames.shape}")
        if frames.shape[0] < 1:
            raise ValueError("a clip needs at least one frame")
        if frames.shape[1] < 1 or frames.shape[2] < 1:
            raise ValueError("frames must have at least one pixel")
        self.frames = np.ascontiguousarray(frames)
        self.fps = _as_fraction(self.fps)
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def __len__(self) -> int:
        return self.n_frames

    def __eq__(self, other) -> bool:
        if not isinstance(other, Clip):
            return NotImplemented
        return self.fps == other.fps and self.frames.shape == other.frames.shape and bool(
            np.array_equal(self.frames, other.frames)
        )

    def __repr__(self) -> str:
        return f"Clip({self.width}x{self.height}, {self.n_frames} frames @ {self.fps} fps)"


@dataclass(eq=False)
class MultiViewSample:
    """One recorded performance seen by several cameras.

    ``view_groups[i]`` names the camera group (cluster) of ``views[i]``.
    """

    views: list[Clip]
    labels: np.ndarray
    subject: int
    activity: int
    repetition: int
    view_groups: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.views:
            raise ValueError("a sample needs at least one view")
        if not self.view_groups:
            self.view_groups = ["all"] * len(self.views)
        if len(self.view_groups) != len(self.views):
            raise ValueError("one group name per view is required")
        n, fps = self.views[0].n_frames, self.views[0].fps
        for v in self.views[1:]:
            if v.n_frames != n or v.fps != fps:
                raise ValueError("all views must share frame count and fps")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (n,):
            raise ValueError(f"label stream has {self.labels.size} entries for {n} frames")

    @property
    def groups(self) -> list[str]:
        return list(dict.fromkeys(self.view_groups))

    def group(self, name: str) -> MultiViewSample:
        """The sub-sample made of the cameras of one group."""
        idx = [i for i, g in enumerate(self.view_groups) if g == name]
        if not idx:
            raise KeyError(name)
        return MultiViewSample(
            views=[self.views[i] for i in idx],
            labels=self.labels,
            subject=self.subject,
            activity=self.activity,
            repetition=self.repetition,
            view_groups=[name] * len(idx),
        )


# --------------------------------------------------------------------------
# SVR raw format


def encode_raw(clip: Clip) -> bytes:
    if not isinstance(clip, Clip):
        raise TypeError("expected a Clip")
    t, h, w = clip.frames.shape
    header = _HEADER.pack(
        SVR_MAGIC, w, h, t, clip.fps.numerator, clip.fps.denominator, 1, b"\0\0\0"
    )
    return header + clip.frames.tobytes(order="C")


def decode_raw(data: bytes) -> Clip:
    if len(data) < 4 or data[:4] != SVR_MAGIC:
        raise BadMagicError(f"bad magic {bytes(data[:4])!r}, expected {SVR_MAGIC!r}")
    if len(data) < HEADER_SIZE:
        raise TruncatedError(f"truncated header: {len(data)} of {HEADER_SIZE} bytes")
    _, w, h, t, num, den, channels, reserved = _HEADER.unpack_from(data)
    if channels != 1:
        raise HeaderMismatchError(f"only single-channel clips are supported, got {channels}")
    if reserved != b"\0\0\0":
        raise HeaderMismatchError("reserved header bytes must be zero")
    if t < 1 or w < 1 or h < 1:
        raise HeaderMismatchError(f"invalid dimensions {w}x{h}x{t}")
    if num == 0 or den == 0:
        raise HeaderMismatchError(f"invalid frame rate {num}/{den}")
    expected = t * w * h
    payload = len(data) - HEADER_SIZE
    if payload < expected:
        raise TruncatedError(f"truncated payload: {payload} of {expected} bytes")
    if payload > expected:
        raise HeaderMismatchError(f"payload has {payload - expected} bytes beyond {t} frames of {w}x{h}")
    frames = np.frombuffer(data, dtype=np.uint8, count=expected, offset=HEADER_SIZE).reshape(t, h, w)
    return Clip(frames.copy(), Fraction(num, den))


def save_raw(clip: Clip, path) -> None:
    Path(path).write_bytes(encode_raw(clip))


def load_raw(path) -> Clip:
    return decode_raw(Path(path).read_bytes())


# --------------------------------------------------------------------------
# geometry


def crop_center(frame: np.ndarray, size: int) -> np.ndarray:
    """Central ``size`` x ``size`` square of a frame or of every frame of a stack."""
    frame = np.asarray(frame)
    h, w = frame.shape[-2:]
    if size < 1 or size > min(w, h):
        raise ValueError(f"crop size {size} does not fit a {w}x{h} frame")
    x0 = (w - size) // 2
    y0 = (h - size) // 2
    return frame[..., y0 : y0 + size, x0 : x0 + size]


def crop(frame: np.ndarray, x0: int, y0: int, size: int) -> np.ndarray:
    h, w = frame.shape[-2:]
    if size < 1 or x0 < 0 or y0 < 0 or x0 + size > w or y0 + size > h:
        raise ValueError(f"crop ({x0}, {y0}, {size}) does not fit a {w}x{h} frame")
    return frame[..., y0 : y0 + size, x0 : x0 + size]


def _bilinear_axis(n_in: int, n_out: int):
    if n_out == 1:
        pos = np.zeros(1)
    else:
        pos = np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)
    i0 = np.floor(pos).astype(np.intp)
    i0 = np.minimum(i0, n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, pos - i0


def resize_bilinear_float(frames: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Align-corners bilinear resize over the last two axes, no rounding."""
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size {out_w}x{out_h} must be positive")
    src = np.asarray(frames, dtype=np.float64)
    h, w = src.shape[-2:]
    y0, y1, wy = _bilinear_axis(h, out_h)
    x0, x1, wx = _bilinear_axis(w, out_w)
    rows = src[..., y0, :] * (1.0 - wy)[:, None] + src[..., y1, :] * wy[:, None]
    return rows[..., x0] * (1.0 - wx) + rows[..., x1] * wx


def resize_bilinear(frame: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize with align-corners sampling, rounded half-up to uint8.

    Accepts a single frame or a ``(T, H, W)`` stack.
    """
    return round_half_up(resize_bilinear_float(frame, out_w, out_h))
