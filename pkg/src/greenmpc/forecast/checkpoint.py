"""Versioned binary checkpoints.

Byte layout (all integers little-endian)::

    offset  size  content
    0       8     magic b"GMPCKPT\\0"
    8       4     uint32 format version (1)
    12      4     uint32 header length H
    16      H     UTF-8 JSON header: {"config": {...}, "normalizer": {...},
                  "params": [[name, [shape...]], ...], "meta": {...}}
    16+H    ...   float64 little-endian arrays, C order, in header "params" order

The file ends exactly after the last array.
"""
import json
import struct
from pathlib import Path

import numpy as np

from .features import Normalizer
from .model import AttentionModelConfig, TransformerForecaster, param_shapes

MAGIC = b"GMPCKPT\0"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model, normalizer=None, meta=None):
    shapes = param_shapes(model.cfg)
    header = {
        "config": model.cfg.to_dict(),
        "normalizer": normalizer.to_dict() if normalizer is not None else None,
        "params": [[name, list(shape)] for name, shape in shapes],
        "meta": meta or {},
    }
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(hb)))
        fh.write(hb)
        for name, _ in shapes:
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())


def load_checkpoint(path):
    """Return ``(model, normalizer, meta)``."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    if len(data) < 16:
        raise CheckpointError(f"{path}: truncated header")
    version, hlen = struct.unpack("<II", data[8:16])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    try:
        header = json.loads(data[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from None
    cfg = AttentionModelConfig(**header["config"])
    expected = [[n, list(s)] for n, s in param_shapes(cfg)]
    if header["params"] != expected:
        raise CheckpointError(f"{path}: parameter table does not match config")
    off = 16 + hlen
    params = {}
    for name, shape in expected:
        count = int(np.prod(shape))
        end = off + 8 * count
        if end > len(data):
            raise CheckpointError(f"{path}: truncated at {name}")
        params[name] = np.frombuffer(data[off:end], dtype="<f8").reshape(shape).astype(float)
        off = end
    if off != len(data):
        raise CheckpointError(f"{path}: {len(data) - off} trailing bytes")
    norm = header.get("normalizer")
    return (TransformerForecaster(cfg, params), Normalizer.from_dict(norm) if norm else None,
            header.get("meta", {}))
