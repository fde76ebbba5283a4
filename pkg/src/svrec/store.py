"""JSON manifest + little-endian binary sidecar for named arrays."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class BundleError(ValueError):
    pass


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".bin")


def write_bundle(path, meta: dict, arrays: dict[str, np.ndarray], dtype: str = "<f8") -> None:
    """Write ``meta`` plus an array index to ``path`` and the data to ``path.bin``.

    Arrays are cast to ``dtype`` and concatenated in insertion order.
    """
    path = Path(path)
    dt = np.dtype(dtype)
    index, chunks, offset = [], [], 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(np.asarray(arr), dtype=dt)
        index.append({"name": name, "shape": list(data.shape), "offset": offset})
        chunks.append(data.tobytes())
        offset += data.nbytes
    doc = dict(meta)
    doc["arrays"] = index
    doc["dtype"] = dt.str
    doc["sidecar"] = sidecar_path(path).name
    doc["sidecar_bytes"] = offset
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    sidecar_path(path).write_bytes(b"".join(chunks))


def read_bundle(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}: manifest is not valid JSON ({exc})") from exc
    blob = (path.parent / doc.get("sidecar", sidecar_path(path).name)).read_bytes()
    if len(blob) != doc.get("sidecar_bytes"):
        raise BundleError(f"{path}: sidecar has {len(blob)} bytes, manifest says {doc.get('sidecar_bytes')}")
    dt = np.dtype(doc["dtype"])
    arrays = {}
    for entry in doc.pop("arrays"):
        count = int(np.prod(entry["shape"], dtype=np.int64))
        end = entry["offset"] + count * dt.itemsize
        if end > len(blob):
            raise BundleError(f"{path}: array {entry['name']} runs past the sidecar")
        arrays[entry["name"]] = (
            np.frombuffer(blob, dtype=dt, count=count, offset=entry["offset"]).reshape(entry["shape"]).copy()
        )
    return doc, arrays
