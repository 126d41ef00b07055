"""Finite scalar quantization: bounded per-channel rounding with a
straight-through gradient, plus mixed-radix code <-> flat index conversion.

The bound squashes each channel into [0, L_c - 1] via tanh; rounding is
half-away-from-zero so behaviour at exact midpoints (e.g. channel value 3.5
for L=8 at z=0) is pinned. Decoded embeddings are re-centered to [-1, 1].
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import torch

from .errors import BoundsError, ConfigError

Levels = Sequence[int]


def _validate_levels(levels: Levels) -> tuple[int, ...]:
    levels = tuple(int(v) for v in levels)
    if not levels or any(v < 2 for v in levels):
        raise ConfigError(f"every level count must be >= 2, got {levels}")
    return levels


def codebook_size(levels: Levels) -> int:
    size = 1
    for v in _validate_levels(levels):
        size *= v
    return size


def _levels_tensor(levels: Levels, like: torch.Tensor) -> torch.Tensor:
    return torch.tensor(_validate_levels(levels), dtype=like.dtype, device=like.device)


def fsq_bound(z: torch.Tensor, levels: Levels) -> torch.Tensor:
    """Smooth, strictly monotone map of each channel into (0, L_c - 1)."""
    lv = _levels_tensor(levels, z)
    return (torch.tanh(z) + 1.0) * 0.5 * (lv - 1.0)


class FsqResult(NamedTuple):
    code: torch.Tensor  # integer lattice point per channel, in [0, L_c)
    index: torch.Tensor  # flat mixed-radix token id
    ste_value: torch.Tensor  # centered embedding with straight-through gradient


def _round_half_away(x: torch.Tensor) -> torch.Tensor:
    # inputs are >= 0 here, so half-away-from-zero == floor(x + 0.5)
    return torch.floor(x + 0.5)


def fsq_quantize(z: torch.Tensor, levels: Levels) -> FsqResult:
    """Forward the centered lattice embedding, backprop through the bound.

    ste_value equals 2*code/(L-1) - 1 in value; its gradient w.r.t. z is the
    gradient of the smooth surrogate 2*fsq_bound(z)/(L-1) - 1.
    """
    lv = _levels_tensor(levels, z)
    bound = fsq_bound(z, levels)
    code = torch.clamp(_round_half_away(bound.detach()), torch.zeros_like(lv), lv - 1.0)
    soft = 2.0 * bound / (lv - 1.0) - 1.0
    hard = 2.0 * code / (lv - 1.0) - 1.0
    ste = soft + (hard - soft).detach()
    index = torch.as_tensor(
        code_to_index(code.detach().cpu().numpy().astype(np.int64), levels),
        device=z.device,
    )
    return FsqResult(code=code.to(torch.int64), index=index, ste_value=ste)


def code_embedding(code: np.ndarray, levels: Levels) -> np.ndarray:
    """Centered embedding of an integer code: 2*q/(L-1) - 1, in [-1, 1]."""
    lv = np.asarray(_validate_levels(levels), dtype=np.float64)
    return 2.0 * np.asarray(code, dtype=np.float64) / (lv - 1.0) - 1.0


def _radix_weights(levels: tuple[int, ...]) -> np.ndarray:
    # channel 0 is least significant
    return np.concatenate([[1], np.cumprod(levels[:-1])]).astype(np.int64)


def code_to_index(code: np.ndarray, levels: Levels) -> np.ndarray:
    levels = _validate_levels(levels)
    q = np.asarray(code, dtype=np.int64)
    if q.shape[-1] != len(levels):
        raise BoundsError(f"code has {q.shape[-1]} channels, levels has {len(levels)}")
    lv = np.asarray(levels, dtype=np.int64)
    if np.any(q < 0) or np.any(q >= lv):
        raise BoundsError("code entries outside per-channel level bounds")
    return q @ _radix_weights(levels)


def index_to_code(index: np.ndarray | int, levels: Levels) -> np.ndarray:
    levels = _validate_levels(levels)
    idx = np.asarray(index, dtype=np.int64)
    if np.any(idx < 0) or np.any(idx >= codebook_size(levels)):
        raise BoundsError(f"index outside [0, {codebook_size(levels)})")
    digits = []
    rem = idx
    for lc in levels:
        digits.append(rem % lc)
        rem = rem // lc
    return np.stack(digits, axis=-1)
