"""Per-dimension uniform binning tokenizer.

Every normalized entry maps independently to one of N bins; detokenization
returns bin centers, so the scheme is total on its token space and its
worst-case error is half a bin width (1/N on the [-1, 1] scale).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidInputError, OutOfVocabularyError, ShapeError


@dataclass(frozen=True)
class BinConfig:
    n_bins: int = 256

    def __post_init__(self):
        if self.n_bins < 2:
            raise ConfigError(f"n_bins must be >= 2, got {self.n_bins}")


def bin_tokenize(chunk: np.ndarray, config: BinConfig) -> np.ndarray:
    """Flatten time-major: [t0 dims, t1 dims, ...]; token = clamp(floor((x+1)/2*N))."""
    x = np.asarray(chunk, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("chunk contains non-finite entries")
    n = config.n_bins
    tokens = np.floor((x + 1.0) * 0.5 * n).astype(np.int64)
    return np.clip(tokens, 0, n - 1).ravel()


def bin_detokenize(tokens: np.ndarray, h_a: int, d_a: int, config: BinConfig) -> np.ndarray:
    """Map each token to its bin center; total over [0, N)^(h_a*d_a)."""
    toks = np.asarray(tokens, dtype=np.int64)
    if toks.ndim != 1 or toks.shape[0] != h_a * d_a:
        raise ShapeError(f"expected {h_a * d_a} tokens, got shape {toks.shape}")
    n = config.n_bins
    if toks.min(initial=0) < 0 or toks.max(initial=0) >= n:
        raise OutOfVocabularyError(f"tokens must lie in [0, {n})")
    centers = -1.0 + 2.0 * (toks + 0.5) / n
    return centers.reshape(h_a, d_a)
