"""Frequency-domain tokenizer: per-dimension DCT, coefficient quantization,
frequency-major flattening, then BPE compression.

Detokenization is deliberately PARTIAL: BPE expansions have variable
length, so an arbitrary id sequence can decode to the wrong number of
coefficients, in which case `detokenize` returns a DecodeError value
instead of a chunk. `spectral_shift_demo` shows why force-fitting such a
stream back to shape is worse than failing: every coefficient after the
mutation slides into a neighboring frequency/dimension slot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bpe import BpeVocab, bpe_decode, bpe_encode, bpe_train, vocab_from_dict, vocab_to_dict
from .dct import DctPlan, dct2, idct, make_dct_plan
from .errors import ConfigError, NotApplicableError, ShapeError


@dataclass(frozen=True)
class FastConfig:
    h_a: int
    d_a: int
    gamma: float = 10.0
    vocab_size: int = 1024

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.h_a < 1 or self.d_a < 1:
            raise ConfigError("h_a and d_a must be >= 1")

    @property
    def n_coeffs(self) -> int:
        return self.h_a * self.d_a


@dataclass(frozen=True)
class DecodeError:
    """Length-mismatch result of a partial detokenization."""

    expected: int
    got: int


@dataclass(frozen=True)
class SpectralShiftResult:
    repaired_mse: float
    honest_mse: float


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


class FastTokenizer:
    """Fitted DCT+BPE tokenizer over normalized chunks."""

    def __init__(
        self,
        config: FastConfig,
        vocab: BpeVocab,
        offset: int,
        length_counts: dict[int, int],
    ):
        self.config = config
        self.vocab = vocab
        self.offset = offset  # symbol id = quantized coefficient - offset
        self.length_counts = dict(length_counts)
        self.plan: DctPlan = make_dct_plan(config.h_a)
        self._alphabet_symbols = np.array(sorted(vocab.base_alphabet), dtype=np.int64)

    # -- coefficient stream <-> chunk ------------------------------------------

    def quantized_stream(self, chunk: np.ndarray) -> np.ndarray:
        """Chunk -> flat signed-integer coefficients, frequency-major
        (all dims at frequency 0, then frequency 1, ...)."""
        x = np.asarray(chunk, dtype=np.float64)
        if x.shape != (self.config.h_a, self.config.d_a):
            raise ShapeError(f"expected ({self.config.h_a}, {self.config.d_a}), got {x.shape}")
        coeffs = dct2(x, self.plan)  # (h_a, d_a): rows are frequencies
        return _round_half_away(self.config.gamma * coeffs).astype(np.int64).ravel()

    def stream_to_chunk(self, stream: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(stream, dtype=np.float64).reshape(
            self.config.h_a, self.config.d_a
        ) / self.config.gamma
        return idct(coeffs, self.plan)

    def _to_symbols(self, stream: np.ndarray) -> list[int]:
        """Shift to alphabet ids, clamping unseen coefficients to the nearest
        observed symbol so encoding is total even though decoding is not."""
        shifted = stream - self.offset
        pos = np.searchsorted(self._alphabet_symbols, shifted)
        pos = np.clip(pos, 0, len(self._alphabet_symbols) - 1)
        lo = self._alphabet_symbols[np.maximum(pos - 1, 0)]
        hi = self._alphabet_symbols[pos]
        shifted = np.where(np.abs(shifted - lo) <= np.abs(hi - shifted), lo, hi)
        return shifted.tolist()

    # -- public tokenizer surface ------------------------------------------------

    def tokenize(self, chunk: np.ndarray) -> list[int]:
        return bpe_encode(self.vocab, self._to_symbols(self.quantized_stream(chunk)))

    def detokenize(self, token_ids: list[int]) -> np.ndarray | DecodeError:
        """Returns a chunk when the decoded stream has exactly h_a*d_a
        coefficients, otherwise a DecodeError value (never a crash)."""
        stream = np.asarray(bpe_decode(self.vocab, list(token_ids)), dtype=np.int64)
        if stream.shape[0] != self.config.n_coeffs:
            return DecodeError(expected=self.config.n_coeffs, got=int(stream.shape[0]))
        return self.stream_to_chunk(stream + self.offset)

    def spectral_shift_demo(
        self, chunk: np.ndarray, mutation_index: int, replacement_id: int
    ) -> SpectralShiftResult:
        """Replace one token of the chunk's valid encoding and force-fit the
        corrupted stream back to shape by truncating/zero-padding, comparing
        its error against the honest quantization error."""
        ids = self.tokenize(chunk)
        if not 0 <= mutation_index < len(ids):
            raise NotApplicableError(f"mutation index {mutation_index} outside sequence")
        original = ids[mutation_index]
        if self.vocab.expansion_length(replacement_id) == self.vocab.expansion_length(original):
            raise NotApplicableError("mutation preserves stream length")
        mutated = list(ids)
        mutated[mutation_index] = replacement_id
        stream = np.asarray(bpe_decode(self.vocab, mutated), dtype=np.int64)
        n = self.config.n_coeffs
        repaired = np.zeros(n, dtype=np.int64)
        m = min(n, stream.shape[0])
        repaired[:m] = stream[:m]
        # zero-padding in symbol space must become coefficient 0, not -offset
        repaired[:m] += self.offset
        repaired_chunk = self.stream_to_chunk(repaired)
        honest = self.detokenize(ids)
        chunk = np.asarray(chunk, dtype=np.float64)
        return SpectralShiftResult(
            repaired_mse=float(((repaired_chunk - chunk) ** 2).mean()),
            honest_mse=float(((honest - chunk) ** 2).mean()),
        )

    def mean_token_count(self) -> float:
        total = sum(length * count for length, count in self.length_counts.items())
        return total / sum(self.length_counts.values())


def fast_fit(chunks: np.ndarray, config: FastConfig) -> FastTokenizer:
    """Quantize every training chunk, then train BPE on the integer streams."""
    chunks = np.asarray(chunks, dtype=np.float64)
    if chunks.ndim != 3 or chunks.shape[1:] != (config.h_a, config.d_a):
        raise ShapeError(f"chunks must be (N, {config.h_a}, {config.d_a}), got {chunks.shape}")
    plan = make_dct_plan(config.h_a)
    streams = []
    for chunk in chunks:
        coeffs = dct2(chunk, plan)
        streams.append(_round_half_away(config.gamma * coeffs).astype(np.int64).ravel())
    offset = int(min(s.min() for s in streams))
    symbol_streams = [(s - offset).tolist() for s in streams]
    vocab = bpe_train(symbol_streams, config.vocab_size)
    length_counts: dict[int, int] = {}
    for s in symbol_streams:
        n = len(bpe_encode(vocab, s))
        length_counts[n] = length_counts.get(n, 0) + 1
    return FastTokenizer(config, vocab, offset, length_counts)


def save_fast(tokenizer: FastTokenizer, path: str | Path) -> None:
    payload = {
        "scheme": "fast",
        "gamma": tokenizer.config.gamma,
        "H_a": tokenizer.config.h_a,
        "D_a": tokenizer.config.d_a,
        "vocab_size": tokenizer.config.vocab_size,
        "offset": tokenizer.offset,
        "length_counts": {str(k): v for k, v in sorted(tokenizer.length_counts.items())},
        "bpe": vocab_to_dict(tokenizer.vocab),
        "format_version": 1,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n")


def load_fast(path: str | Path) -> FastTokenizer:
    payload = json.loads(Path(path).read_text())
    if payload.get("scheme") != "fast":
        raise ConfigError(f"not a fast checkpoint: scheme={payload.get('scheme')!r}")
    config = FastConfig(
        h_a=payload["H_a"],
        d_a=payload["D_a"],
        gamma=payload["gamma"],
        vocab_size=payload["vocab_size"],
    )
    return FastTokenizer(
        config,
        vocab_from_dict(payload["bpe"]),
        offset=payload["offset"],
        length_counts={int(k): v for k, v in payload["length_counts"].items()},
    )
