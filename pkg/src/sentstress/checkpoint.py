"""Single-file checkpoint container.

Layout::

    b"SSCKPT1\\n" | uint64 little-endian header length | JSON header | blobs

The header holds the model kind, its config, a table of named parameter
blobs (dtype, shape, offset, nbytes) and a SHA-256 digest of the
parameters.  Blobs are raw little-endian arrays in the header's order.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np
import torch

MAGIC = b"SSCKPT1\n"


class CheckpointError(ValueError):
    pass


def _as_numpy(t) -> np.ndarray:
    if isinstance(t, torch.Tensor):
        t = t.detach().cpu().numpy()
    return np.ascontiguousarray(t).astype(np.asarray(t).dtype.newbyteorder("<"), copy=False)


def parameter_digest(params: Mapping[str, object]) -> str:
    """SHA-256 over names, dtypes, shapes and bytes, in sorted name order."""
    h = hashlib.sha256()
    for name in sorted(params):
        arr = _as_numpy(params[name])
        h.update(name.encode())
        h.update(str(arr.dtype.str).encode())
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


def save_checkpoint(path: str | Path, kind: str, config: dict, params: Mapping[str, object],
                    meta: dict | None = None, frozen: bool = True) -> Path:
    path = Path(path)
    arrays = {name: _as_numpy(params[name]) for name in sorted(params)}
    table, offset = [], 0
    for name, arr in arrays.items():
        table.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                      "offset": offset, "nbytes": arr.nbytes})
        offset += arr.nbytes
    header = {"kind": kind, "config": config, "frozen": frozen, "meta": meta or {},
              "params": table, "digest": parameter_digest(arrays)}
    blob = json.dumps(header, sort_keys=True).encode()
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for arr in arrays.values():
            fh.write(arr.tobytes())
    return path


def load_checkpoint(path: str | Path, kind: str | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    """Return ``(header, params)``; verifies magic, kind and digest."""
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    (n,) = struct.unpack("<Q", data[len(MAGIC): len(MAGIC) + 8])
    start = len(MAGIC) + 8
    header = json.loads(data[start: start + n])
    if kind is not None and header["kind"] != kind:
        raise CheckpointError(f"{path}: expected a {kind} checkpoint, found {header['kind']}")
    body = memoryview(data)[start + n:]
    params = {}
    for entry in header["params"]:
        raw = body[entry["offset"]: entry["offset"] + entry["nbytes"]]
        params[entry["name"]] = np.frombuffer(raw, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"]).copy()
    if parameter_digest(params) != header["digest"]:
        raise CheckpointError(f"{path}: parameter digest mismatch")
    return header, params


def module_params(module: torch.nn.Module) -> dict[str, np.ndarray]:
    return {k: v.detach().cpu().numpy().copy() for k, v in module.state_dict().items()}


def load_into(module: torch.nn.Module, params: Mapping[str, np.ndarray]) -> None:
    module.load_state_dict({k: torch.from_numpy(np.asarray(v).copy()) for k, v in params.items()})
