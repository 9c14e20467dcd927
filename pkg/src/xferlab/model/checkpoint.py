"""Binary checkpoint I/O.

Layout: magic "XFCK" | u32 version | u64 manifest length | UTF-8 JSON
manifest | tensor payload (little-endian float64, manifest order).  A
save -> load round trip reproduces every weight bitwise.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from ..numerics import Tensor
from .config import ModelConfig
from .transformer import Parameters, parameter_shapes

MAGIC = b"XFCK"
FORMAT_VERSION = 1


def save_checkpoint(params: Parameters, config: ModelConfig, path,
                    vocab_sha256: str = "", provenance: dict | None = None) -> dict:
    """Write params to path; returns the manifest that was embedded."""
    manifest = {
        "config": config.to_dict(),
        "vocab_sha256": vocab_sha256,
        "provenance": provenance or {},
        "tensors": [{"name": n, "shape": list(t.data.shape)} for n, t in params],
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for _, t in params:
            f.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    return manifest


def load_checkpoint(path) -> tuple:
    """Read (Parameters, manifest).  manifest["config"] is a plain dict."""
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    mlen = struct.unpack("<Q", raw[8:16])[0]
    if len(raw) < 16 + mlen:
        raise CheckpointError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(raw[16:16 + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt manifest ({e})") from e

    payload = raw[16 + mlen:]
    expected = sum(int(np.prod(t["shape"])) for t in manifest["tensors"]) * 8
    if len(payload) != expected:
        raise CheckpointError(
            f"{path}: payload size {len(payload)} != manifest total {expected}")

    tensors, offset = {}, 0
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        data = np.frombuffer(payload, dtype="<f8", count=count,
                             offset=offset).astype(np.float64).reshape(shape)
        if not np.all(np.isfinite(data)):
            raise CheckpointError(f"{path}: non-finite values in {entry['name']}")
        tensors[entry["name"]] = Tensor(data.copy(), requires_grad=True)
        offset += count * 8
    return Parameters(tensors), manifest


def check_compatible(manifest: dict, config: ModelConfig):
    """Raise CheckpointError when a checkpoint cannot be loaded into config.

    The classifier head may differ (it is re-initialized for every fine-tune);
    everything else must match.
    """
    saved = dict(manifest["config"])
    want = config.to_dict()
    for key in ("num_classes", "regression"):
        saved.pop(key), want.pop(key)
    if saved != want:
        diffs = {k: (saved.get(k), want.get(k))
                 for k in set(saved) | set(want) if saved.get(k) != want.get(k)}
        raise CheckpointError(f"checkpoint/config mismatch: {diffs}")


def adapt_to_config(params: Parameters, manifest: dict, config: ModelConfig,
                    head_seed: int) -> Parameters:
    """Loaded params with a freshly initialized classifier head for config."""
    from .transformer import init_params  # local to avoid import noise at module load

    check_compatible(manifest, config)
    fresh = init_params(config, head_seed)
    out = {}
    for name, shape in parameter_shapes(config).items():
        if name.startswith("cls."):
            out[name] = fresh[name]
        else:
            t = params[name]
            if tuple(t.data.shape) != shape:
                raise CheckpointError(f"tensor {name} has shape {t.data.shape}, "
                                      f"expected {shape}")
            out[name] = Tensor(t.data.copy(), requires_grad=True)
    return Parameters(out)
