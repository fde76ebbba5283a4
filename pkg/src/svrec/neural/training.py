"""Adam and the one-sequence-per-step training loop."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..video import Clip, MultiViewSample, crop, crop_center, resize_bilinear_float
from .network import NetworkConfig, NetworkModel, init_network, loss_and_gradients

log = logging.getLogger(__name__)

EVAL_CROP = 11 / 16  # centre crop side as a fraction of frame width (mid training range)


@dataclass
class TrainSpec:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_seq_len: int = 80
    # window length is drawn uniformly from [min_seq_len, max_seq_len] (clipped to the clip)
    min_seq_len: int = 12
    # square crop side range in native pixels; None -> 5/8 and 3/4 of the width
    crop_min: int | None = None
    crop_max: int | None = None
    steps: int = 9000
    seed: int = 0

    def crop_range(self, width: int, height: int) -> tuple[int, int]:
        lo = self.crop_min if self.crop_min is not None else round(width * 5 / 8)
        hi = self.crop_max if self.crop_max is not None else round(width * 3 / 4)
        hi = min(hi, width, height)
        if not 1 <= lo <= hi:
            raise ValueError(f"crop range [{lo}, {hi}] does not fit {width}x{height} frames")
        return lo, hi

    def validate(self) -> None:
        if not 1 <= self.min_seq_len <= self.max_seq_len:
            raise ValueError("need 1 <= min_seq_len <= max_seq_len")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if not (self.lr > 0 and 0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.eps > 0):
            raise ValueError("invalid Adam hyper-parameters")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TrainSpec:
        return cls(**d)


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(model: NetworkModel, grads: dict, spec: TrainSpec, step: int, state: AdamState) -> NetworkModel:
    """In-place Adam update (``step`` counts from 1); returns ``model``."""
    if step < 1:
        raise ValueError("Adam steps count from 1")
    c1 = 1.0 - spec.beta1**step
    c2 = 1.0 - spec.beta2**step
    for name, p in model.params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != parameter shape {p.shape}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= spec.beta1
        m += (1.0 - spec.beta1) * g
        v *= spec.beta2
        v += (1.0 - spec.beta2) * g * g
        p -= (spec.lr * (m / c1) / (np.sqrt(v / c2) + spec.eps)).astype(p.dtype, copy=False)
    return model


def prepare_frames(frames: np.ndarray, side: int) -> np.ndarray:
    """Resize uint8 frames to ``side`` x ``side`` and scale to [0, 1]."""
    return resize_bilinear_float(frames, side, side) / 255.0


def eval_crop_side(width: int, height: int) -> int:
    return max(1, min(round(width * EVAL_CROP), width, height))


def prepare_clip(clip: Clip, side: int) -> np.ndarray:
    """Inference preprocessing: centred square crop, resize, scale."""
    return prepare_frames(crop_center(clip.frames, eval_crop_side(clip.width, clip.height)), side)


@dataclass
class TrainLog:
    losses: list = field(default_factory=list)
    windows: list = field(default_factory=list)  # (sample, camera, start, length, x0, y0, side)


def train(samples: list[MultiViewSample], config: NetworkConfig, spec: TrainSpec,
          group: str | None = None) -> tuple[NetworkModel, TrainLog]:
    """Train one model on the clean clips of ``group`` (all views if None)."""
    spec.validate()
    subs = [s.group(group) if group is not None else s for s in samples]
    if not subs:
        raise ValueError("empty training split")
    model = init_network(config)
    state = AdamState()
    rng = np.random.default_rng(spec.seed)
    tlog = TrainLog()
    for step in range(1, spec.steps + 1):
        si = int(rng.integers(len(subs)))
        sample = subs[si]
        cam = int(rng.integers(len(sample.views)))
        clip = sample.views[cam]
        # random length and offset, so label switches never sit at a fixed frame index
        hi_len = min(spec.max_seq_len, clip.n_frames)
        length = int(rng.integers(min(spec.min_seq_len, hi_len), hi_len + 1))
        start = int(rng.integers(clip.n_frames - length + 1))
        lo, hi = spec.crop_range(clip.width, clip.height)
        side = int(rng.integers(lo, hi + 1))
        x0 = int(rng.integers(clip.width - side + 1))
        y0 = int(rng.integers(clip.height - side + 1))
        window = clip.frames[start : start + length]
        frames = prepare_frames(crop(window, x0, y0, side), config.input_side)
        loss, grads = loss_and_gradients(model, frames, sample.labels[start : start + length])
        adam_step(model, grads, spec, step, state)
        tlog.losses.append(loss)
        tlog.windows.append((si, cam, start, length, x0, y0, side))
        if step % 100 == 0:
            log.info("step %d loss %.4f", step, float(np.mean(tlog.losses[-100:])))
    return model, tlog
