"""Parameter checkpoints: little-endian flat binary with a JSON header.

Layout: 8-byte little-endian header length, UTF-8 JSON header, then the raw
tensor bytes.  The header records name/shape/dtype/offset per tensor plus a
free-form ``meta`` dict (model kind and hyperparameters).
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from tsdaug.errors import DataError

_FORMAT = "tsdaug-checkpoint"
_DTYPES = {"float32": "<f4", "float64": "<f8"}


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    entries = []
    offset = 0
    payloads = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        dtype = str(arr.dtype)
        if dtype not in _DTYPES:
            raise DataError(f"unsupported checkpoint dtype {dtype} for {name!r}")
        raw = arr.astype(_DTYPES[dtype]).tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "dtype": dtype, "offset": offset})
        payloads.append(raw)
        offset += len(raw)
    header = json.dumps({"format": _FORMAT, "version": 1, "meta": meta, "tensors": entries}).encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for raw in payloads:
            fh.write(raw)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode())
        if header.get("format") != _FORMAT:
            raise DataError(f"{path}: not a tsdaug checkpoint")
        payload = fh.read()
    arrays = {}
    for entry in header["tensors"]:
        dt = np.dtype(_DTYPES[entry["dtype"]])
        n = int(np.prod(entry["shape"])) if entry["shape"] else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype=dt, count=n, offset=start)
        arrays[entry["name"]] = arr.reshape(entry["shape"]).astype(entry["dtype"])
    return arrays, header["meta"]


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
