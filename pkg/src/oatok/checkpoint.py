"""Single-file checkpoint format: one JSON header line, then a flat
little-endian float32 parameter blob.

The blob is the concatenation of every parameter tensor flattened in its
module's registration order; the header records enough metadata to rebuild
the module and slice the blob back. Buffers (fixed positional tables,
masks) are recomputed on load, never stored.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch


def write_checkpoint(path: str | Path, header: dict, module: torch.nn.Module) -> None:
    blob = np.concatenate(
        [p.detach().cpu().numpy().astype("<f4").ravel() for p in module.parameters()]
    ) if any(True for _ in module.parameters()) else np.zeros(0, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(blob.tobytes())


def read_header(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        return json.loads(fh.readline().decode("utf-8"))


def read_checkpoint(path: str | Path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        blob = np.frombuffer(fh.read(), dtype="<f4")
    return header, blob


def load_parameters(module: torch.nn.Module, blob: np.ndarray) -> None:
    """Fill module parameters from the blob, in registration order."""
    offset = 0
    with torch.no_grad():
        for p in module.parameters():
            n = p.numel()
            if offset + n > blob.size:
                raise ValueError("checkpoint blob shorter than parameter count")
            chunk = np.array(blob[offset : offset + n], dtype=np.float32)
            p.copy_(torch.from_numpy(chunk).view(p.shape))
            offset += n
    if offset != blob.size:
        raise ValueError(f"checkpoint blob has {blob.size - offset} unread floats")
