"""Checkpoint serialization.

Binary layout (byte-exact, see docs/checkpoint_format.md):

    offset 0   magic b"MMGTCKP1" (8 bytes)
    offset 8   header length N, uint32 little-endian
    offset 12  header: N bytes of UTF-8 JSON, canonical form
               (sorted keys, no whitespace)
    offset 12+N  tensor data: for each entry of header["tensors"] in order,
               the C-order array as float64 little-endian

The header records the model config, label order, normalization statistics,
tensor manifest (name + shape), parameter count and a SHA-256 over the
canonical config JSON. Loading verifies magic, hash, manifest and sizes;
save(load(x)) reproduces x byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from ..signals import NormStats
from .network import ModelConfig, param_count, param_names

MAGIC = b"MMGTCKP1"


@dataclass(frozen=True)
class Checkpoint:
    config: ModelConfig
    params: dict[str, np.ndarray]
    norm_stats: NormStats
    label_order: tuple[str, ...]
    param_count: int
    meta: dict


def _canon(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def config_hash(config: ModelConfig) -> str:
    return hashlib.sha256(_canon(config.to_dict())).hexdigest()


def save_checkpoint(
    path: str | Path,
    config: ModelConfig,
    params: dict[str, np.ndarray],
    norm_stats: NormStats,
    label_order: tuple[str, ...],
    meta: dict | None = None,
) -> None:
    names = param_names(config)
    if set(names) != set(params):
        raise CheckpointError("parameter dict does not match the config's tensor set")
    header = {
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "labels": list(label_order),
        "norm_mean": [float(x) for x in norm_stats.mean],
        "norm_std": [float(x) for x in norm_stats.std],
        "norm_degenerate": [bool(x) for x in norm_stats.degenerate],
        "tensors": [{"name": n, "shape": list(params[n].shape)} for n in names],
        "param_count": param_count(params),
        "meta": meta or {},
    }
    blob = _canon(header)
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(params[n], dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    p = Path(path)
    if not p.exists():
        raise CheckpointError(f"checkpoint not found: {p}")
    raw = p.read_bytes()
    if len(raw) < 12 or raw[:8] != MAGIC:
        raise CheckpointError(f"{p}: not a checkpoint (bad magic)")
    n = int.from_bytes(raw[8:12], "little")
    if len(raw) < 12 + n:
        raise CheckpointError(f"{p}: truncated header")
    try:
        header = json.loads(raw[12 : 12 + n].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{p}: unreadable header: {exc}") from None
    try:
        config = ModelConfig(**header["config"])
    except (TypeError, KeyError) as exc:
        raise CheckpointError(f"{p}: bad config block: {exc}") from None
    if header.get("config_hash") != config_hash(config):
        raise CheckpointError(f"{p}: config hash mismatch")
    expected = param_names(config)
    manifest = header.get("tensors", [])
    if [t["name"] for t in manifest] != expected:
        raise CheckpointError(f"{p}: tensor manifest does not match the config")

    params: dict[str, np.ndarray] = {}
    off = 12 + n
    dt = config.np_dtype
    for entry in manifest:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if off + nbytes > len(raw):
            raise CheckpointError(f"{p}: truncated tensor data at {entry['name']}")
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape)
        params[entry["name"]] = arr.astype(dt)
        off += nbytes
    if off != len(raw):
        raise CheckpointError(f"{p}: {len(raw) - off} trailing bytes")

    stats = NormStats(
        mean=np.array(header["norm_mean"], dtype=np.float64),
        std=np.array(header["norm_std"], dtype=np.float64),
        degenerate=np.array(header["norm_degenerate"], dtype=bool),
    )
    labels = tuple(header["labels"])
    if len(labels) != config.n_classes:
        raise CheckpointError(f"{p}: label count does not match n_classes")
    return Checkpoint(
        config=config,
        params=params,
        norm_stats=stats,
        label_order=labels,
        param_count=int(header["param_count"]),
        meta=header.get("meta", {}),
    )
