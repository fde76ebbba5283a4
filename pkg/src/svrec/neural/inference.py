"""Per-frame inference, multi-camera fusion, clip-level voting, activation dumps."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..video import Clip, MultiViewSample
from .network import NetworkModel, forward
from .training import prepare_clip

PROB_FLOOR = 1e-12
TIE_TOL = 1e-10  # log-domain slack: products equal in exact arithmetic count as ties
ACTIVATION_FILES = ("full4.csv", "rnn7_cell.csv", "probs.csv")


def fuse_views(streams) -> np.ndarray:
    """Per-frame argmax of the product of camera probabilities.

    Evaluated as a sum of logs with probabilities floored at 1e-12. The
    cameras are summed in sorted order, so the result does not depend on
    their order even in the last bit. Classes within ``TIE_TOL`` of the best
    log-product tie, and ties go to the lowest class index.
    """
    streams = [np.asarray(s, dtype=np.float64) for s in streams]
    if not streams:
        raise ValueError("no probability streams to fuse")
    shape = streams[0].shape
    if len(shape) != 2:
        raise ValueError("each stream must be (frames, classes)")
    for s in streams[1:]:
        if s.shape != shape:
            raise ValueError(f"stream shapes differ: {shape} vs {s.shape}")
    logs = np.log(np.maximum(np.stack(streams), PROB_FLOOR))
    total = np.sort(logs, axis=0).sum(axis=0)
    best = total.max(axis=1, keepdims=True)
    return np.argmax(total >= best - TIE_TOL, axis=1)


def vote_clip(frame_classes, exclude=None) -> int:
    """Most frequent class; ties go to the lowest index.

    ``exclude`` removes one class (e.g. no-action) from the vote unless no
    other class was observed.
    """
    c = np.asarray(frame_classes, dtype=np.int64).ravel()
    if c.size == 0:
        raise ValueError("cannot vote on an empty sequence")
    if c.min() < 0:
        raise ValueError("class indices must be non-negative")
    counts = np.bincount(c)
    if exclude is not None and exclude < counts.size and counts.sum() > counts[exclude]:
        counts[exclude] = 0
    return int(np.argmax(counts))


def clip_probs(model: NetworkModel, clip: Clip) -> np.ndarray:
    probs, _ = forward(model, prepare_clip(clip, model.config.input_side))
    return probs


def recognize_deep(model: NetworkModel, views) -> tuple[int, np.ndarray]:
    """Clip class (no-action eligible) and the fused per-frame classes."""
    if isinstance(views, MultiViewSample):
        views = views.views
    elif isinstance(views, Clip):
        views = [views]
    frames = fuse_views([clip_probs(model, v) for v in views])
    return vote_clip(frames), frames


def dump_activations(model: NetworkModel, clip: Clip, out_dir=None) -> dict[str, np.ndarray]:
    """full4 activations, rnn7 cell states and output probabilities, rows = frames.

    With ``out_dir`` each matrix is also written as a CSV file.
    """
    _, trace = forward(model, prepare_clip(clip, model.config.input_side))
    mats = dict(zip(ACTIVATION_FILES, (trace.full4, trace.rnn7_cell, trace.probs)))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, mat in mats.items():
            header = ",".join(f"n{i}" for i in range(mat.shape[1]))
            np.savetxt(out / name, mat, delimiter=",", fmt="%.9g", header=header, comments="")
    return mats
