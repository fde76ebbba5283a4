"""Bag-of-features recognizer: train per view group, classify pooled views."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..store import BundleError, read_bundle, write_bundle
from ..video import Clip, MultiViewSample
from .codebook import CODEBOOK_SIZE, Codebook, build_codebook, encode_histogram
from .features import StipParams, extract_descriptors
from .svm import BinaryMachine, KsvmModel, predict_ksvm, train_ksvm

BOF_FORMAT = "svrec-bof/1"


@dataclass
class BofConfig:
    stip: StipParams = field(default_factory=StipParams)
    codebook_size: int = CODEBOOK_SIZE
    c: float = 1.0
    max_codebook_descriptors: int = 4000  # k-medoids is quadratic in this
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> BofConfig:
        d = dict(d)
        stip = StipParams.from_dict(d.pop("stip", {}))
        return cls(stip=stip, **d)


def _views(views) -> list[Clip]:
    if isinstance(views, MultiViewSample):
        return list(views.views)
    if isinstance(views, Clip):
        return [views]
    return list(views)


def pooled_descriptors(views, params: StipParams) -> np.ndarray:
    return np.concatenate([extract_descriptors(v, params) for v in _views(views)], axis=0)


def train_bof(samples: list[MultiViewSample], group: str | None = None, config: BofConfig | None = None) -> KsvmModel:
    """Codebook and one-vs-one SVM from the clean clips of one view group.

    ``group=None`` pools every view of each sample.
    """
    config = config or BofConfig()
    if not samples:
        raise ValueError("no training samples")
    subs = [s.group(group) if group is not None else s for s in samples]
    per_sample = [pooled_descriptors(s, config.stip) for s in subs]
    everything = np.concatenate(per_sample, axis=0)
    rng = np.random.default_rng(config.seed)
    if everything.shape[0] > config.max_codebook_descriptors:
        pick = np.sort(rng.choice(everything.shape[0], config.max_codebook_descriptors, replace=False))
        everything = everything[pick]
    codebook = build_codebook(everything, config.codebook_size, seed=config.seed)
    hist = np.stack([encode_histogram(d, codebook) for d in per_sample])
    labels = np.array([s.activity for s in subs], dtype=np.int64)
    model = train_ksvm(hist, labels, config.c, codebook)
    model.meta = {"group": group, "config": config.to_dict(), "descriptors": int(sum(len(d) for d in per_sample))}
    return model


def recognize_bof(model: KsvmModel, views) -> int:
    """Pool descriptors from all views, encode one histogram, classify it."""
    if model.codebook is None:
        raise ValueError("model carries no codebook")
    config = BofConfig.from_dict(model.meta.get("config", {}))
    return predict_ksvm(model, encode_histogram(pooled_descriptors(views, config.stip), model.codebook))


# --------------------------------------------------------------------------
# persistence


def save_bof(model: KsvmModel, path) -> None:
    arrays = {"medoids": model.codebook.medoids, "classes": model.classes}
    machines = []
    for i, m in enumerate(model.machines):
        arrays[f"sv{i}"] = m.support
        arrays[f"coef{i}"] = m.coef
        machines.append({"positive": m.positive, "negative": m.negative, "bias": m.bias, "iterations": m.iterations})
    meta = {
        "format": BOF_FORMAT,
        "c": model.c,
        "bins": int(model.codebook.size),
        "descriptor_size": int(model.codebook.medoids.shape[1]),
        "machines": machines,
        "meta": model.meta,
    }
    write_bundle(path, meta, arrays)


def load_bof(path) -> KsvmModel:
    doc, arrays = read_bundle(path)
    if doc.get("format") != BOF_FORMAT:
        raise BundleError(f"{path}: not a {BOF_FORMAT} model")
    codebook = Codebook(arrays["medoids"])
    if codebook.medoids.shape != (doc["bins"], doc["descriptor_size"]):
        raise BundleError(f"{path}: codebook shape disagrees with manifest")
    machines = []
    for i, m in enumerate(doc["machines"]):
        sv, coef = arrays[f"sv{i}"], arrays[f"coef{i}"]
        if sv.shape[:1] != coef.shape or (sv.size and sv.shape[1] != doc["bins"]):
            raise BundleError(f"{path}: machine {i} arrays are inconsistent")
        machines.append(
            BinaryMachine(m["positive"], m["negative"], sv, coef, m["bias"], np.zeros(0), np.zeros(0), m["iterations"])
        )
    return KsvmModel(arrays["classes"].astype(np.int64), machines, doc["c"], codebook, doc["meta"])


def bof_path(models_dir, group: str) -> Path:
    return Path(models_dir) / f"bof_{group}.json"
