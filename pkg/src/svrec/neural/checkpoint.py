"""Network checkpoints: JSON manifest plus a little-endian float32 blob."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..store import BundleError, read_bundle, write_bundle
from .network import PARAM_VERSION, NetworkConfig, NetworkModel, param_shapes

DEEP_FORMAT = "svrec-deep/1"


class CheckpointError(BundleError):
    pass


def save_model(model: NetworkModel, path, extra: dict | None = None) -> None:
    meta = {
        "format": DEEP_FORMAT,
        "param_version": PARAM_VERSION,
        "config": model.config.to_dict(),
        "extra": extra or {},
    }
    ordered = {name: model.params[name] for name, _ in param_shapes(model.config)}
    write_bundle(path, meta, ordered, dtype="<f4")


def load_model(path, expect: NetworkConfig | None = None) -> NetworkModel:
    try:
        doc, arrays = read_bundle(path)
    except (OSError, KeyError, BundleError) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint ({exc})") from exc
    if doc.get("format") != DEEP_FORMAT:
        raise CheckpointError(f"{path}: not a {DEEP_FORMAT} checkpoint")
    if doc.get("param_version") != PARAM_VERSION:
        raise CheckpointError(f"{path}: parameter layout version {doc.get('param_version')}, expected {PARAM_VERSION}")
    config = NetworkConfig.from_dict(doc["config"])
    if expect is not None and expect.to_dict() != config.to_dict():
        raise CheckpointError(f"{path}: checkpoint config differs from the requested config")
    params = {}
    for name, shape in param_shapes(config):
        if name not in arrays or arrays[name].shape != shape:
            raise CheckpointError(f"{path}: parameter {name} missing or misshapen")
        if not np.all(np.isfinite(arrays[name])):
            raise CheckpointError(f"{path}: parameter {name} has non-finite values")
        params[name] = arrays[name].astype(np.float32)
    return NetworkModel(config, params)


def deep_path(models_dir, group: str) -> Path:
    return Path(models_dir) / f"deep_{group}.json"
