"""Flat versioned parameter checkpoints.

Format: one magic line, one JSON header line (sorted keys, so identical
contents give identical bytes), then the raw little-endian float64 buffers of
every entry in header order. The round trip is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np

from .autodiff import Tensor

MAGIC = b"ACRGNAV-CKPT"
FORMAT_VERSION = 1


def _array_of(value) -> np.ndarray:
    arr = value.values if isinstance(value, Tensor) else np.asarray(value)
    return np.ascontiguousarray(arr, dtype=np.float64)


def save_params(path: Union[str, Path], params: Mapping[str, object],
                meta: Optional[dict] = None) -> None:
    """Writes a name -> 2-D array map; ``meta`` is free-form JSON metadata."""
    arrays = {name: _array_of(value) for name, value in params.items()}
    entries = [{"name": name, "shape": list(arrays[name].shape)}
               for name in sorted(arrays)]
    header = {"version": FORMAT_VERSION, "meta": meta or {},
              "entries": entries}
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for entry in entries:
            fh.write(arrays[entry["name"]].astype("<f8").tobytes(order="C"))


def load_params(path: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], dict]:
    """Reads a checkpoint back; returns (name -> array, meta)."""
    with open(path, "rb") as fh:
        magic = fh.readline().rstrip(b"\n")
        if magic != MAGIC:
            raise ValueError(f"{path}: not a parameter checkpoint")
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version "
                             f"{header.get('version')!r}")
        out: Dict[str, np.ndarray] = {}
        for entry in header["entries"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"{path}: truncated buffer for {entry['name']!r}")
            out[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after declared entries")
    return out, header.get("meta", {})


def restore_into(params: Mapping[str, Tensor], arrays: Mapping[str, np.ndarray]) -> None:
    """Copies loaded arrays into live parameter tensors, validating shapes."""
    missing = sorted(set(params) - set(arrays))
    extra = sorted(set(arrays) - set(params))
    if missing or extra:
        raise ValueError(f"checkpoint does not match model: missing={missing}, "
                         f"unexpected={extra}")
    for name, tensor in params.items():
        arr = arrays[name]
        if arr.shape != tensor.values.shape:
            raise ValueError(f"parameter {name!r}: checkpoint shape {arr.shape} "
                             f"!= model shape {tensor.values.shape}")
        np.copyto(tensor.values, arr)
