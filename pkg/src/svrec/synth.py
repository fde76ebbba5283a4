"""Deterministic synthetic multi-view activity corpus.

A stick-blob figure performs one procedural activity between two idle pads
and is rendered by three camera groups: ``front``, ``back`` (mirrored, limbs
with little contrast against the scene) and ``far`` (half scale). Activity
0 is the pure-idle class; its label stream is entirely "no action".

Each sample draws from its own PRNG stream keyed on
``(seed, subject, activity, repetition)``, so any sample can be regenerated
alone and generation order never matters.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .video import Clip, MultiViewSample, load_raw, round_half_up, save_raw

ACTIVITIES = ("idle", "jump", "wave", "bend", "clap", "punch", "jacks")
VIEW_GROUPS = ("front", "back", "far")
MANIFEST_FORMAT = "svrec-corpus/1"

# stream tags keep scene/subject streams disjoint from per-sample streams
_SCENE_TAG = 1_000_003
_SUBJECT_TAG = 1_000_033


@dataclass(frozen=True)
class GeneratorSpec:
    class_count: int = 5
    clips_per_class_per_subject: int = 6
    subjects: int = 12
    views_per_cluster: int = 1
    width: int = 96
    height: int = 72
    fps: int = 16
    idle_pad_s: float = 0.5
    action_s: float = 2.0
    noise_sigma: float = 3.0
    seed: int = 0
    train_subjects: int | None = None  # default: round(subjects * 7 / 12)

    def validate(self) -> None:
        if not 2 <= self.class_count <= len(ACTIVITIES):
            raise ValueError(f"class_count must be in [2, {len(ACTIVITIES)}]")
        for name in ("clips_per_class_per_subject", "subjects", "views_per_cluster", "fps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.subjects < 2:
            raise ValueError("at least two subjects are needed for a train/test split")
        if self.width % 8 or self.height % 8:
            raise ValueError("native width and height must be multiples of 8")
        if self.width < 64 or self.height < 64:
            raise ValueError("native frames must be at least 64x64 so 1/8 scale stays >= 8x8")
        if self.idle_pad_s < 0 or self.action_s <= 0:
            raise ValueError("pad must be >= 0 and action duration > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        n_train = self.n_train_subjects
        if not 1 <= n_train < self.subjects:
            raise ValueError("train split must leave at least one subject on each side")

    @property
    def n_train_subjects(self) -> int:
        if self.train_subjects is not None:
            return self.train_subjects
        return int(math.floor(self.subjects * 7 / 12 + 0.5))

    @property
    def pad_frames(self) -> int:
        return math.ceil(Fraction(self.idle_pad_s).limit_denominator(10_000) * self.fps)

    @property
    def action_frames(self) -> int:
        return max(1, int(math.floor(self.action_s * self.fps + 0.5)))

    @property
    def n_frames(self) -> int:
        return 2 * self.pad_frames + self.action_frames

    @classmethod
    def from_dict(cls, d: dict) -> GeneratorSpec:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown generator fields: {sorted(unknown)}")
        return cls(**d)


def split_of(spec: GeneratorSpec, subject: int) -> str:
    return "train" if subject < spec.n_train_subjects else "test"


# --------------------------------------------------------------------------
# rendering


def _ellipse(canvas, yy, xx, cy, cx, ry, rx, value):
    """Paint an anti-aliased ellipse onto ``canvas`` in place."""
    ry = max(ry, 0.6)
    rx = max(rx, 0.6)
    d = np.sqrt(((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2)
    alpha = np.clip((1.0 - d) * min(rx, ry) + 0.5, 0.0, 1.0)
    canvas *= 1.0 - alpha
    canvas += alpha * value


def _scene(spec: GeneratorSpec, group: int) -> np.ndarray:
    rng = np.random.default_rng([spec.seed, _SCENE_TAG, group])
    h, w = spec.height, spec.width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    bg = 55.0 + 30.0 * yy / h + 8.0 * np.sin(xx / w * 2 * np.pi * rng.uniform(0.5, 1.5))
    floor_y = 0.86 * h if group != 2 else 0.7 * h
    bg[yy > floor_y] += 18.0
    for _ in range(3):
        x0 = rng.uniform(0, 0.9) * w
        y0 = rng.uniform(0.05, 0.5) * h
        bw = rng.uniform(0.06, 0.14) * w
        bh = rng.uniform(0.08, 0.2) * h
        inside = (xx >= x0) & (xx < x0 + bw) & (yy >= y0) & (yy < y0 + bh)
        bg[inside] += rng.uniform(-25, 25)
    return bg


def _subject_traits(spec: GeneratorSpec, subject: int) -> dict:
    rng = np.random.default_rng([spec.seed, _SUBJECT_TAG, subject])
    return {
        "size": rng.uniform(0.9, 1.08),
        "x_offset": rng.uniform(-0.07, 0.07),
        "body": rng.uniform(170, 205),
        "limb": rng.uniform(215, 240),
        "stripe": rng.uniform(0.2, 0.35),
    }


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3 - 2 * x)


def _pose(activity: str, phase: float, env: float, amp: float) -> dict:
    """Part layout in figure units (y up from the feet, x to the figure's right)."""
    s = 0.5 * (1.0 - math.cos(phase))  # 0..1 oscillation
    rest_arm = (0.15, 0.55, 0.045, 0.15)  # x, y, rx, ry
    pose = {
        "lift": 0.0,
        "upper_drop": 0.0,
        "upper_shift": 0.0,
        "legs": 0.06,
        "arm_r": rest_arm,
        "arm_l": rest_arm,
    }

    def blend(a, b):
        return tuple(ai + env * (bi - ai) for ai, bi in zip(a, b))

    if activity == "jump":
        pose["lift"] = env * amp * 0.2 * s
    elif activity == "wave":
        pose["arm_r"] = blend(rest_arm, (0.2 + 0.11 * amp * math.sin(phase), 0.98, 0.04, 0.11))
    elif activity == "bend":
        pose["upper_drop"] = env * amp * 0.3 * s
        pose["upper_shift"] = env * amp * 0.1 * s
    elif activity == "clap":
        x = 0.05 + 0.13 * amp * (1.0 - s)
        pose["arm_r"] = blend(rest_arm, (x, 0.66, 0.09, 0.04))
        pose["arm_l"] = blend(rest_arm, (x, 0.66, 0.09, 0.04))
    elif activity == "punch":
        pose["arm_r"] = blend(rest_arm, (0.16 + 0.14 * amp * s, 0.68, 0.08 + 0.05 * s, 0.04))
    elif activity == "jacks":
        arm = (0.15 + 0.1 * s, 0.55 + 0.33 * s * amp, 0.045 + 0.04 * s, 0.15 - 0.05 * s)
        pose["arm_r"] = blend(rest_arm, arm)
        pose["arm_l"] = blend(rest_arm, arm)
        pose["legs"] = 0.06 + env * 0.07 * s * amp
    return pose


def _render_figure(canvas, yy, xx, pose, feet_x, feet_y, height, mirror, body, limb, stripe):
    """Draw the figure into ``canvas``; ``height`` is the figure height in px."""
    sgn = -1.0 if mirror else 1.0
    u = height
    base_y = feet_y - pose["lift"] * u

    def at(x, y):
        return base_y - y * u, feet_x + sgn * x * u

    for side in (-1.0, 1.0):
        cy, cx = at(side * pose["legs"], 0.22)
        _ellipse(canvas, yy, xx, cy, cx, 0.22 * u, 0.045 * u, body - 15)
    drop = pose["upper_drop"]
    shift = pose["upper_shift"]
    cy, cx = at(shift, 0.6 - 0.6 * drop)
    ry = 0.2 * u * (1.0 - 0.4 * drop)
    _ellipse(canvas, yy, xx, cy, cx, ry, 0.1 * u, body)
    # horizontal stripes give the torso some trackable texture
    band = np.sin((yy - cy) / max(u * 0.05, 0.6)) * stripe * 40.0
    inside = ((yy - cy) / ry) ** 2 + ((xx - cx) / (0.1 * u)) ** 2 < 0.8
    canvas[inside] += band[inside]
    hy, hx = at(shift * 1.4, 0.88 - 0.9 * drop)
    _ellipse(canvas, yy, xx, hy, hx, 0.075 * u, 0.07 * u, body + 15)
    for side, key in ((1.0, "arm_r"), (-1.0, "arm_l")):
        x, y, rx, ry = pose[key]
        y = y - 0.75 * drop
        cy, cx = at(side * x + shift, y)
        _ellipse(canvas, yy, xx, cy, cx, ry * u, rx * u, limb)


def _render_view(spec, group, camera, activity, traits, params, scene, noise_rng):
    h, w = spec.height, spec.width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    name = ACTIVITIES[activity]
    scale = 0.5 if group == 2 else 1.0
    cam_shift = (camera - (spec.views_per_cluster - 1) / 2.0) * 0.06 * w
    cam_scale = 1.0 - 0.04 * camera
    fig_h = 0.66 * h * traits["size"] * scale * cam_scale
    feet_y = (0.9 if group != 2 else 0.72) * h
    feet_x = w * (0.5 + traits["x_offset"] * scale) + cam_shift
    mirror = group == 1
    limb = traits["limb"]
    if mirror:
        limb = scene.mean() + 0.45 * (limb - scene.mean())
    pad, n_act = spec.pad_frames, spec.action_frames
    fps = float(spec.fps)
    ramp = 0.25
    frames = np.empty((spec.n_frames, h, w), dtype=np.uint8)
    for t in range(spec.n_frames):
        ta = (t - pad) / fps  # seconds since action onset
        dur = n_act / fps
        if name == "idle" or ta < 0 or ta >= dur:
            env = 0.0
        else:
            env = float(_smoothstep(ta / ramp) * _smoothstep((dur - ta) / ramp))
        phase = 2 * math.pi * params["freq"] * max(ta, 0.0) + params["phase"]
        pose = _pose(name, phase, env, params["amp"])
        canvas = scene.copy()
        _render_figure(canvas, yy, xx, pose, feet_x, feet_y, fig_h, mirror, traits["body"], limb, traits["stripe"])
        if spec.noise_sigma > 0:
            canvas += noise_rng.normal(0.0, spec.noise_sigma, size=canvas.shape)
        frames[t] = round_half_up(canvas)
    return Clip(frames, Fraction(spec.fps))


def render_sample(spec: GeneratorSpec, subject: int, activity: int, repetition: int) -> MultiViewSample:
    """Render one sample; a pure function of its arguments."""
    rng = np.random.default_rng([spec.seed, subject, activity, repetition])
    params = {
        # slow enough that 1/4 frame rate still sees > 3 samples per cycle
        "freq": rng.uniform(0.8, 1.2),
        "phase": rng.uniform(0, 2 * math.pi) if ACTIVITIES[activity] == "wave" else 0.0,
        "amp": rng.uniform(0.85, 1.15),
    }
    traits = _subject_traits(spec, subject)
    labels = np.zeros(spec.n_frames, dtype=np.int64)
    labels[spec.pad_frames : spec.pad_frames + spec.action_frames] = activity
    views, groups = [], []
    for g, gname in enumerate(VIEW_GROUPS):
        scene = _scene(spec, g)
        for c in range(spec.views_per_cluster):
            cam_index = g * spec.views_per_cluster + c
            noise_rng = np.random.default_rng([spec.seed, subject, activity, repetition, cam_index + 1])
            views.append(_render_view(spec, g, c, activity, traits, params, scene, noise_rng))
            groups.append(gname)
    return MultiViewSample(views, labels, subject, activity, repetition, groups)


def sample_id(subject: int, activity: int, repetition: int) -> str:
    return f"s{subject:02d}_a{activity:02d}_r{repetition:02d}"


def _index(spec: GeneratorSpec):
    for subject in range(spec.subjects):
        for activity in range(spec.class_count):
            for rep in range(spec.clips_per_class_per_subject):
                yield subject, activity, rep


def generate_dataset(spec: GeneratorSpec) -> tuple[list[MultiViewSample], dict]:
    """Render the whole corpus in memory and build its manifest (paths relative)."""
    spec.validate()
    samples, entries = [], []
    for subject, activity, rep in _index(spec):
        sample = render_sample(spec, subject, activity, rep)
        samples.append(sample)
        entries.append(_manifest_entry(spec, sample))
    return samples, build_manifest(spec, entries)


def _manifest_entry(spec: GeneratorSpec, sample: MultiViewSample) -> dict:
    sid = sample_id(sample.subject, sample.activity, sample.repetition)
    views = []
    per_group: dict[str, int] = {}
    for group in sample.view_groups:
        cam = per_group.get(group, 0)
        per_group[group] = cam + 1
        views.append({"group": group, "camera": cam, "path": f"clips/{sid}_{group}{cam}.svr"})
    return {
        "id": sid,
        "subject": sample.subject,
        "activity": sample.activity,
        "activity_name": ACTIVITIES[sample.activity],
        "repetition": sample.repetition,
        "split": split_of(spec, sample.subject),
        "labels": sample.labels.tolist(),
        "views": views,
    }


def build_manifest(spec: GeneratorSpec, entries: list[dict]) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "generator": asdict(spec),
        "seed": spec.seed,
        "activities": list(ACTIVITIES[: spec.class_count]),
        "view_groups": list(VIEW_GROUPS),
        "fps": [spec.fps, 1],
        "samples": entries,
    }


def manifest_bytes(manifest: dict) -> bytes:
    return (json.dumps(manifest, indent=1, sort_keys=True) + "\n").encode()


def write_dataset(spec: GeneratorSpec, out_dir) -> dict:
    """Render every sample to ``out_dir`` (SVR clips + ``manifest.json``).

    Samples are streamed to disk one at a time to bound memory.
    """
    spec.validate()
    out = Path(out_dir)
    (out / "clips").mkdir(parents=True, exist_ok=True)
    entries = []
    for subject, activity, rep in _index(spec):
        sample = render_sample(spec, subject, activity, rep)
        entry = _manifest_entry(spec, sample)
        for view, clip in zip(entry["views"], sample.views):
            save_raw(clip, out / view["path"])
        entries.append(entry)
    manifest = build_manifest(spec, entries)
    (out / "manifest.json").write_bytes(manifest_bytes(manifest))
    return manifest


def read_manifest(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    manifest = json.loads(path.read_text())
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path} is not a {MANIFEST_FORMAT} manifest")
    return manifest


def load_dataset(path, split: str | None = None) -> list[MultiViewSample]:
    """Load the samples of a written corpus, optionally one split only."""
    path = Path(path)
    root = path if path.is_dir() else path.parent
    manifest = read_manifest(path)
    samples = []
    for entry in manifest["samples"]:
        if split is not None and entry["split"] != split:
            continue
        views = [load_raw(root / v["path"]) for v in entry["views"]]
        samples.append(
            MultiViewSample(
                views,
                np.asarray(entry["labels"], dtype=np.int64),
                entry["subject"],
                entry["activity"],
                entry["repetition"],
                [v["group"] for v in entry["views"]],
            )
        )
    return samples
