"""Versioned parameter blobs.

Model and classifier parameters are persisted as a raw little-endian
blob of concatenated arrays plus a JSON layout that records, for every
array, its name, shape and element offset. The layout also carries the
blob's element type and a SHA-256 checksum, and is stored either in a
sidecar file (single models) or inside a bundle manifest.
"""

from __future__ import annotations

import hashlib
import os
from typing import Any, Dict, List, Tuple

import numpy as np

from .errors import IntegrityError, ModelLoadError

FORMAT_VERSION = 1

_DTYPES = {"f32": "<f4", "f64": "<f8"}


def pack_arrays(arrays: Dict[str, np.ndarray], dtype: str = "f64") -> Tuple[Dict[str, Any], bytes]:
    """Concatenate ``arrays`` into one blob and describe it.

    Returns the layout dict and the raw bytes. Arrays are written in the
    iteration order of ``arrays``.
    """
    if dtype not in _DTYPES:
        raise ValueError(f"unsupported blob dtype {dtype!r}")
    entries: List[Dict[str, Any]] = []
    chunks: List[bytes] = []
    offset = 0
    for name, array in arrays.items():
        flat = np.ascontiguousarray(array, dtype=_DTYPES[dtype]).ravel()
        entries.append({"name": name, "shape": list(np.shape(array)), "offset": offset})
        chunks.append(flat.tobytes())
        offset += flat.size
    payload = b"".join(chunks)
    layout = {
        "format": FORMAT_VERSION,
        "dtype": dtype,
        "count": offset,
        "arrays": entries,
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    return layout, payload


def unpack_arrays(layout: Dict[str, Any], payload: bytes) -> Dict[str, np.ndarray]:
    """Inverse of :func:`pack_arrays`; verifies format, size and checksum."""
    if layout.get("format") != FORMAT_VERSION:
        raise IntegrityError(f"unsupported parameter format {layout.get('format')!r}")
    digest = hashlib.sha256(payload).hexdigest()
    if digest != layout.get("sha256"):
        raise IntegrityError("parameter blob checksum does not match its manifest")
    flat = np.frombuffer(payload, dtype=_DTYPES[layout["dtype"]])
    if flat.size != layout["count"]:
        raise IntegrityError(f"parameter blob holds {flat.size} values, manifest declares {layout['count']}")
    arrays: Dict[str, np.ndarray] = {}
    for entry in layout["arrays"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arrays[entry["name"]] = flat[start : start + size].astype(np.float64).reshape(shape)
    return arrays


def write_blob(path: str, payload: bytes) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as f:
        f.write(payload)


def read_blob(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as exc:
        raise ModelLoadError(f"cannot read parameter file {path}: {exc}") from exc
