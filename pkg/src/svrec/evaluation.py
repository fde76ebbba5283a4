"""Scalability sweep over both recognizers, Pareto fronts and reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .bof.recognizer import recognize_bof
from .neural.inference import clip_probs, fuse_views, vote_clip
from .scalability import DEFAULT_QPS, KEEP_RATIOS, SCALE_FACTORS, ScalabilityCombo, apply_combo
from .video import MultiViewSample

log = logging.getLogger(__name__)

RECOGNIZERS = ("bof", "dl")
ALL = "all"
NO_ACTION = 0


@dataclass(frozen=True)
class SweepGrid:
    qps: tuple = DEFAULT_QPS
    scales: tuple = SCALE_FACTORS
    keeps: tuple = KEEP_RATIOS

    def __post_init__(self):
        for name in ("qps", "scales", "keeps"):
            values = tuple(int(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"grid axis {name} is empty")
            object.__setattr__(self, name, values)

    def combos(self) -> list[ScalabilityCombo]:
        """QP-major, then scale, then keep."""
        return [ScalabilityCombo(q, s, k) for q in sorted(self.qps) for s in sorted(self.scales) for k in sorted(self.keeps)]

    def to_dict(self) -> dict:
        return {"qps": list(self.qps), "scales": list(self.scales), "keeps": list(self.keeps)}

    @classmethod
    def from_dict(cls, d: dict) -> SweepGrid:
        return cls(**d)


@dataclass
class OperatingPoint:
    combo: ScalabilityCombo
    bitrate_bps: float
    # accuracy[recognizer][group], groups include "all" (every clip decision pooled)
    accuracy: dict
    clip_count: int
    # extra neural statistics keyed by group: no-action excluded from the vote, per-frame accuracy
    dl_vote_no_idle: dict = field(default_factory=dict)
    dl_frame_accuracy: dict = field(default_factory=dict)

    def acc(self, recognizer: str, group: str = ALL) -> float:
        return self.accuracy[recognizer][group]


def accuracy(predictions, truths) -> float:
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if p.shape != t.shape:
        raise ValueError(f"{p.size} predictions for {t.size} truths")
    if p.size == 0:
        raise ValueError("accuracy of an empty set")
    return float(np.mean(p == t))


# --------------------------------------------------------------------------
# sweep


def _evaluate_cell(combo, samples, bof_models, deep_models, groups):
    bits = []
    hits = {r: {g: [] for g in groups} for r in RECOGNIZERS}
    no_idle = {g: [] for g in groups}
    frames_ok = {g: [] for g in groups}
    for s in samples:
        for g in groups:
            sub = s.group(g)
            degraded = [apply_combo(v, combo) for v in sub.views]
            bits += [d.bitrate_bps for d in degraded]
            clips = [d.clip for d in degraded]
            hits["bof"][g].append(recognize_bof(bof_models[g], clips) == s.activity)
            fused = fuse_views([clip_probs(deep_models[g], c) for c in clips])
            hits["dl"][g].append(vote_clip(fused) == s.activity)
            no_idle[g].append(vote_clip(fused, exclude=NO_ACTION) == s.activity)
            kept = sub.labels[:: combo.keep_every]
            frames_ok[g].append(fused == kept)

    def summarise(per_group, reduce):
        out = {g: reduce(v) for g, v in per_group.items()}
        out[ALL] = reduce([x for g in groups for x in per_group[g]])
        return out

    frac = lambda v: float(np.mean(v))  # noqa: E731
    return OperatingPoint(
        combo,
        float(np.mean(bits)),
        {r: summarise(hits[r], frac) for r in RECOGNIZERS},
        len(samples),
        summarise(no_idle, frac),
        summarise(frames_ok, lambda v: float(np.mean(np.concatenate(v)))),
    )


_WORKER = {}


def _init_worker(samples, bof_models, deep_models, groups):
    _WORKER.update(samples=samples, bof=bof_models, deep=deep_models, groups=groups)


def _worker_cell(combo):
    w = _WORKER
    return _evaluate_cell(combo, w["samples"], w["bof"], w["deep"], w["groups"])


def run_sweep(samples: list[MultiViewSample], bof_models: dict, deep_models: dict,
              grid: SweepGrid | None = None, jobs: int = 1) -> list[OperatingPoint]:
    """Degrade every test clip per grid cell and score both recognizers.

    ``bof_models`` and ``deep_models`` map a view group to its model. Rows
    come back in canonical grid order whatever ``jobs`` is.
    """
    grid = grid or SweepGrid()
    if not samples:
        raise ValueError("empty evaluation split")
    groups = samples[0].groups
    for g in groups:
        if g not in bof_models or g not in deep_models:
            raise KeyError(f"no trained models for view group {g!r}")
    combos = grid.combos()
    if jobs <= 1:
        points = []
        for i, c in enumerate(combos, 1):
            points.append(_evaluate_cell(c, samples, bof_models, deep_models, groups))
            log.info("cell %d/%d %s done", i, len(combos), c)
    else:
        with ProcessPoolExecutor(jobs, initializer=_init_worker,
                                 initargs=(samples, bof_models, deep_models, groups)) as pool:
            points = list(pool.map(_worker_cell, combos))
    return sorted(points, key=lambda p: p.combo)


# --------------------------------------------------------------------------
# Pareto front


def pareto_indices(bitrates, accuracies) -> list[int]:
    """Indices of non-dominated points (lower bitrate and higher accuracy are better)."""
    b = np.asarray(bitrates, dtype=np.float64)
    a = np.asarray(accuracies, dtype=np.float64)
    order = np.lexsort((-a, b))
    keep = []
    best_below = -np.inf  # best accuracy among strictly lower bitrates
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and b[order[j]] == b[order[i]]:
            j += 1
        top = a[order[i]]
        if top > best_below:
            keep += [int(k) for k in order[i:j] if a[k] == top]
        best_below = max(best_below, top)
        i = j
    return keep


def pareto_front(points: list[OperatingPoint], recognizer: str = "dl", group: str = ALL) -> list[OperatingPoint]:
    """Non-dominated operating points, by bitrate ascending."""
    if not points:
        raise ValueError("no operating points")
    idx = pareto_indices([p.bitrate_bps for p in points], [p.acc(recognizer, group) for p in points])
    return [points[i] for i in idx]


# --------------------------------------------------------------------------
# reports


def _groups_of(points) -> list[str]:
    return [g for g in points[0].accuracy["bof"] if g != ALL]


def sweep_header(groups: list[str]) -> list[str]:
    cols = ["qp", "scale", "keep", "bitrate_bps"]
    for r in RECOGNIZERS:
        cols += [f"acc_{r}_{g}" for g in groups] + [f"acc_{r}_{ALL}"]
    cols += [f"acc_dl_noidle_{ALL}", f"frame_acc_dl_{ALL}", "clips"]
    return cols


def sweep_row(p: OperatingPoint, groups: list[str]) -> list[str]:
    row = [str(p.combo.qp), str(p.combo.scale_factor), str(p.combo.keep_every), f"{p.bitrate_bps:.3f}"]
    for r in RECOGNIZERS:
        row += [f"{p.acc(r, g):.6f}" for g in groups + [ALL]]
    row += [f"{p.dl_vote_no_idle[ALL]:.6f}", f"{p.dl_frame_accuracy[ALL]:.6f}", str(p.clip_count)]
    return row


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _find(points, qp, scale, keep):
    for p in points:
        if (p.combo.qp, p.combo.scale_factor, p.combo.keep_every) == (qp, scale, keep):
            return p
    return None


def robustness_summary(points: list[OperatingPoint]) -> dict:
    """Accuracy drops from the clean cell along each grid axis."""
    groups = _groups_of(points) + [ALL]
    clean = _find(points, 0, 1, 1)
    qps = sorted({p.combo.qp for p in points})
    scales = sorted({p.combo.scale_factor for p in points})
    keeps = sorted({p.combo.keep_every for p in points})
    out = {"clean_cell": [0, 1, 1] if clean else None, "recognizers": {}}
    for r in RECOGNIZERS:
        per = {}
        for g in groups:
            d = {}
            if clean is not None:
                base = clean.acc(r, g)
                d["clean"] = base
                d["drop_qp"] = {str(q): base - _find(points, q, 1, 1).acc(r, g) for q in qps if _find(points, q, 1, 1)}
                d["drop_scale"] = {str(s): base - _find(points, 0, s, 1).acc(r, g) for s in scales if _find(points, 0, s, 1)}
                d["drop_keep"] = {str(k): base - _find(points, 0, 1, k).acc(r, g) for k in keeps if _find(points, 0, 1, k)}
            lo, hi = min(keeps), max(keeps)
            temporal = {}
            for s in scales:
                a, b = _find(points, 0, s, lo), _find(points, 0, s, hi)
                if a and b:
                    temporal[str(s)] = a.acc(r, g) - b.acc(r, g)
            d[f"drop_keep_{lo}_to_{hi}_by_scale"] = temporal
            per[g] = d
        out["recognizers"][r] = per
    return out


def _svg(points, recognizer, front) -> str:
    w, h, m = 640, 420, 56
    rates = np.array([p.bitrate_bps for p in points])
    lx = np.log10(rates)
    x_lo, x_hi = math.floor(lx.min()), math.ceil(lx.max())
    if x_hi == x_lo:
        x_hi += 1
    on_front = {id(p) for p in front}

    def px(p):
        x = m + (math.log10(p.bitrate_bps) - x_lo) / (x_hi - x_lo) * (w - 2 * m)
        y = h - m - p.acc(recognizer, ALL) * (h - 2 * m)
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<title>{escape(recognizer)}: accuracy vs bitrate</title>',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<line x1="{m}" y1="{h - m}" x2="{w - m}" y2="{h - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{h - m}" stroke="black"/>',
    ]
    for e in range(x_lo, x_hi + 1):
        x = m + (e - x_lo) / (x_hi - x_lo) * (w - 2 * m)
        parts.append(f'<text x="{x:.1f}" y="{h - m + 18}" font-size="11" text-anchor="middle">1e{e}</text>')
    for t in range(0, 11, 2):
        y = h - m - t / 10 * (h - 2 * m)
        parts.append(f'<text x="{m - 8}" y="{y + 4:.1f}" font-size="11" text-anchor="end">{t / 10:.1f}</text>')
    parts.append(f'<text x="{w / 2}" y="{h - 12}" font-size="12" text-anchor="middle">bitrate (bit/s, log scale)</text>')
    parts.append(f'<text x="16" y="{h / 2}" font-size="12" transform="rotate(-90 16 {h / 2})" text-anchor="middle">accuracy</text>')
    for p in points:
        x, y = px(p)
        c = p.combo
        cls, fill = ("point pareto", "#d62728") if id(p) in on_front else ("point", "#1f77b4")
        parts.append(
            f'<circle class="{cls}" cx="{x:.2f}" cy="{y:.2f}" r="4" fill="{fill}" '
            f'data-qp="{c.qp}" data-scale="{c.scale_factor}" data-keep="{c.keep_every}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(points: list[OperatingPoint], out_dir) -> dict[str, Path]:
    """Write sweep.csv, pareto.csv, summary.json and one scatter SVG per recognizer."""
    if not points:
        raise ValueError("no operating points")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    points = sorted(points, key=lambda p: p.combo)
    groups = _groups_of(points)
    header = sweep_header(groups)
    files = {}

    files["sweep"] = out / "sweep.csv"
    files["sweep"].write_text(_csv([header] + [sweep_row(p, groups) for p in points]))

    fronts = {}
    rows = [["front"] + header]
    for r in RECOGNIZERS:
        for g in groups + [ALL]:
            front = pareto_front(points, r, g)
            fronts[f"{r}_{g}"] = [p.combo.as_dict() for p in front]
            rows += [[f"{r}_{g}"] + sweep_row(p, groups) for p in front]
    files["pareto"] = out / "pareto.csv"
    files["pareto"].write_text(_csv(rows))

    summary = {
        "cells": len(points),
        "groups": groups,
        "robustness": robustness_summary(points),
        "pareto": fronts,
    }
    files["summary"] = out / "summary.json"
    files["summary"].write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")

    for r in RECOGNIZERS:
        files[f"scatter_{r}"] = out / f"scatter_{r}.svg"
        files[f"scatter_{r}"].write_text(_svg(points, r, pareto_front(points, r, ALL)))
    return files
