"""Binary checkpoint format: JSON manifest + raw little-endian float32 buffers."""

from __future__ import annotations

import json
import struct

import numpy as np
import torch

from ..errors import CheckpointMismatch, ParseError
from .network import HyperParams, PolicyNetwork

MAGIC = b"NLNS"


def save_checkpoint(path, tensors: dict[str, np.ndarray], meta: dict) -> None:
    """meta must carry the hyperparameters and training step."""
    manifest = {
        "meta": meta,
        "tensors": [
            {"name": name, "shape": list(arr.shape), "dtype": "float32"}
            for name, arr in tensors.items()
        ],
    }
    blob = json.dumps(manifest).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for arr in tensors.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ParseError(f"{path}: not a checkpoint file")
        (length,) = struct.unpack("<I", fh.read(4))
        manifest = json.loads(fh.read(length))
        tensors = {}
        for entry in manifest["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 4)
            if len(buf) != count * 4:
                raise ParseError(f"{path}: truncated tensor {entry['name']}")
            tensors[entry["name"]] = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()
    return tensors, manifest["meta"]


def model_tensors(model: PolicyNetwork) -> dict[str, np.ndarray]:
    return {
        name: p.detach().cpu().numpy().astype("<f4")
        for name, p in model.named_parameters()
    }


def save_model(path, model: PolicyNetwork, step: int = 0, extra: dict | None = None) -> None:
    tensors = model_tensors(model)
    if extra:
        tensors.update(extra)
    save_checkpoint(path, tensors, {"hyperparams": model.hp.to_dict(), "step": step})


def load_model(path) -> tuple[PolicyNetwork, dict, dict[str, np.ndarray]]:
    """Rebuild a model from a checkpoint; returns (model, meta, extra_tensors)."""
    tensors, meta = load_checkpoint(path)
    hp = HyperParams(**meta["hyperparams"])
    model = PolicyNetwork(hp)
    extra = dict(tensors)
    with torch.no_grad():
        for name, p in model.named_parameters():
            if name not in extra:
                raise CheckpointMismatch(f"{path}: missing tensor {name}")
            arr = extra.pop(name)
            if tuple(arr.shape) != tuple(p.shape):
                raise CheckpointMismatch(
                    f"{path}: {name} has shape {tuple(arr.shape)}, expected {tuple(p.shape)}"
                )
            p.copy_(torch.from_numpy(arr).to(p.dtype))
    return model, meta, extra


def load_model_expecting(path, hp: HyperParams) -> PolicyNetwork:
    model, meta, _ = load_model(path)
    if meta["hyperparams"] != hp.to_dict():
        raise CheckpointMismatch(
            f"{path}: checkpoint hyperparams {meta['hyperparams']} != expected {hp.to_dict()}"
        )
    return model
