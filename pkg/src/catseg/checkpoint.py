"""Checkpoint files: a JSON manifest followed by little-endian float32 blobs.

Layout::

    CATSEG-CKPT 1\\n
    <manifest byte length>\\n
    <manifest JSON, UTF-8>
    <tensor blobs, in manifest order>

The manifest records the model config, seed, free-form metadata, and for
each tensor its name, shape, and byte offset relative to the first blob.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .model import FIXED_PARAMS, ModelConfig, Params, check_params
from .ndtensor import Tensor

MAGIC = b"CATSEG-CKPT 1\n"
BLOB_DTYPE = np.dtype("<f4")


def save_checkpoint(
    path: str | Path, params: Params, config: ModelConfig, seed: int, meta: dict | None = None
) -> None:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name].data, dtype=BLOB_DTYPE)
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    manifest = {
        "format": "catseg-checkpoint",
        "config": config.to_dict(),
        "seed": int(seed),
        "meta": meta or {},
        "tensors": entries,
        "blob_bytes": offset,
    }
    text = json.dumps(manifest, sort_keys=True, indent=1).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{len(text)}\n".encode("ascii"))
        fh.write(text)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[Params, ModelConfig, dict]:
    """Return (params, config, manifest). Tensors come back as float32."""
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    rest = raw[len(MAGIC) :]
    newline = rest.find(b"\n")
    try:
        size = int(rest[:newline])
        manifest = json.loads(rest[newline + 1 : newline + 1 + size].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt manifest ({exc})") from None
    blob = rest[newline + 1 + size :]
    if len(blob) != manifest["blob_bytes"]:
        raise CheckpointError(f"{path}: expected {manifest['blob_bytes']} blob bytes, found {len(blob)}")
    config = ModelConfig.from_dict(manifest["config"])
    params: Params = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype=BLOB_DTYPE, count=count, offset=entry["offset"])
        params[entry["name"]] = Tensor(
            arr.reshape(shape).astype(np.float32), requires_grad=entry["name"] not in FIXED_PARAMS
        )
    check_params(params, config)
    return params, config, manifest
