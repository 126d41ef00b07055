"""Ordered action tokenizer: transformer encoder with causally masked
register tokens, an FSQ bottleneck, nested tail dropout, and a MASK-padded
single-pass decoder, so any token prefix decodes to a valid action chunk.

Structure of one forward pass:
  actions -> embed+positions, append registers -> masked encoder blocks
  -> register latents -> FSQ (straight-through) -> tail dropout (positions
  beyond K replaced by the shared MASK embedding) -> decoder cross-attends
  from fixed sinusoidal queries -> reconstructed chunk.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from .checkpoint import load_parameters, read_checkpoint, write_checkpoint
from .errors import (
    BoundsError,
    ConfigError,
    OutOfVocabularyError,
    ShapeError,
    TrainingDivergedError,
)
from .fsq import code_embedding, code_to_index, codebook_size, fsq_quantize, index_to_code
from .nets import DecoderBlock, EncoderBlock, sinusoidal_positions


@dataclass(frozen=True)
class NestedDropoutDist:
    """Uniform prefix-length distribution over {1..H_l}, with optional extra
    probability mass on keeping all tokens."""

    kind: str = "uniform"
    keep_all_prob: float = 0.0

    def __post_init__(self):
        if self.kind != "uniform":
            raise ConfigError(f"unsupported dropout distribution kind {self.kind!r}")
        if not 0.0 <= self.keep_all_prob <= 1.0:
            raise ConfigError("keep_all_prob must lie in [0, 1]")


@dataclass
class OatConfig:
    h_a: int = 32
    d_a: int = 2
    h_l: int = 8
    d_l: int = 4
    levels: tuple[int, ...] = (8, 5, 5, 5)
    enc_layers: int = 2
    dec_layers: int = 4
    model_dim: int = 256
    head_dim: int = 64
    ffn_ratio: int = 2
    dropout_dist: NestedDropoutDist = field(default_factory=NestedDropoutDist)
    flow_decoder: bool = False

    def __post_init__(self):
        self.levels = tuple(int(v) for v in self.levels)
        if self.h_l < 1:
            raise ConfigError(f"h_l must be >= 1, got {self.h_l}")
        if self.d_l != len(self.levels):
            raise ConfigError(f"d_l={self.d_l} must equal len(levels)={len(self.levels)}")
        if self.model_dim % self.head_dim != 0:
            raise ConfigError("model_dim must be divisible by head_dim")

    @property
    def vocab_size(self) -> int:
        return codebook_size(self.levels)


def build_attention_mask(h_a: int, h_l: int) -> torch.Tensor:
    """Boolean (h_a+h_l)^2 mask, True = row may attend to column.

    Action rows attend to all actions and no registers; register i attends
    to all actions and to registers j <= i, forcing left-to-right
    information flow among the latents.
    """
    if h_a < 1 or h_l < 1:
        raise ConfigError("h_a and h_l must be >= 1")
    s = h_a + h_l
    mask = torch.zeros(s, s, dtype=torch.bool)
    mask[:, :h_a] = True  # everyone sees every action position
    reg = torch.arange(h_l)
    mask[h_a:, h_a:] = reg[:, None] >= reg[None, :]
    return mask


def sample_prefix_length(dist: NestedDropoutDist, h_l: int, rng: np.random.Generator) -> int:
    return int(sample_prefix_lengths(dist, h_l, 1, rng)[0])


def sample_prefix_lengths(
    dist: NestedDropoutDist, h_l: int, n: int, rng: np.random.Generator
) -> np.ndarray:
    draws = rng.integers(1, h_l + 1, size=n)
    if dist.keep_all_prob > 0.0:
        full = rng.random(n) < dist.keep_all_prob
        draws = np.where(full, h_l, draws)
    return draws


def apply_tail_dropout(
    embeddings: torch.Tensor, k: int, mask_embedding: torch.Tensor
) -> torch.Tensor:
    """Keep the first k positions, replace the rest with the shared MASK."""
    h_l = embeddings.shape[-2]
    if not 1 <= k <= h_l:
        raise BoundsError(f"k must lie in [1, {h_l}], got {k}")
    drop = torch.arange(h_l, device=embeddings.device) >= k
    return torch.where(drop[:, None], mask_embedding, embeddings)


class OatTokenizer(nn.Module):
    # Parameter registration order is the checkpoint blob order; keep stable.

    def __init__(self, config: OatConfig):
        super().__init__()
        self.config = config
        d = config.model_dim
        self.action_embed = nn.Linear(config.d_a, d)
        self.enc_blocks = nn.ModuleList(
            EncoderBlock(d, config.head_dim, config.ffn_ratio) for _ in range(config.enc_layers)
        )
        self.enc_norm = nn.LayerNorm(d)
        self.latent_proj = nn.Linear(d, config.d_l)
        self.registers = nn.Parameter(torch.randn(config.h_l, d) * 0.02)
        self.token_proj = nn.Linear(config.d_l, d)
        self.dec_blocks = nn.ModuleList(
            DecoderBlock(d, config.head_dim, config.ffn_ratio) for _ in range(config.dec_layers)
        )
        self.dec_norm = nn.LayerNorm(d)
        self.mask_embedding = nn.Parameter(torch.randn(d) * 0.02)
        self.out_head = nn.Linear(d, config.d_a)
        if config.flow_decoder:
            self.flow_action_embed = nn.Linear(config.d_a, d)
            self.flow_blocks = nn.ModuleList(
                DecoderBlock(d, config.head_dim, config.ffn_ratio) for _ in range(config.dec_layers)
            )
            self.flow_norm = nn.LayerNorm(d)
            self.flow_head = nn.Linear(d, config.d_a)
        # fixed tables, rebuilt on load rather than checkpointed
        self.register_buffer("pos_actions", sinusoidal_positions(config.h_a, d), persistent=False)
        self.register_buffer("pos_tokens", sinusoidal_positions(config.h_l, d), persistent=False)
        self.register_buffer("enc_mask", build_attention_mask(config.h_a, config.h_l), persistent=False)

    # -- encoding ----------------------------------------------------------

    def encode(self, chunks: torch.Tensor) -> torch.Tensor:
        """(B, h_a, d_a) normalized chunks -> (B, h_l, d_l) register latents."""
        cfg = self.config
        if chunks.ndim != 3 or chunks.shape[1:] != (cfg.h_a, cfg.d_a):
            raise ShapeError(
                f"expected (B, {cfg.h_a}, {cfg.d_a}) chunks, got {tuple(chunks.shape)}"
            )
        b = chunks.shape[0]
        x = self.action_embed(chunks) + self.pos_actions
        r = self.registers.expand(b, -1, -1)
        h = torch.cat([x, r], dim=1)
        for blk in self.enc_blocks:
            h = blk(h, self.enc_mask)
        # encoded action positions are discarded; registers are the bottleneck
        return self.latent_proj(self.enc_norm(h[:, cfg.h_a :]))

    # -- decoding ----------------------------------------------------------

    def token_memory(self, latent_embeddings: torch.Tensor, keep: torch.Tensor | None) -> torch.Tensor:
        """Project centered FSQ embeddings into the decoder memory, replacing
        positions >= keep[b] with the MASK embedding. keep=None keeps all."""
        tok = self.token_proj(latent_embeddings)
        if keep is not None:
            drop = torch.arange(self.config.h_l, device=tok.device)[None, :] >= keep[:, None]
            tok = torch.where(drop[..., None], self.mask_embedding, tok)
        return tok + self.pos_tokens

    def decode_embeddings(self, memory: torch.Tensor) -> torch.Tensor:
        """(B, h_l, model_dim) memory -> (B, h_a, d_a) chunk, single pass."""
        q = self.pos_actions.expand(memory.shape[0], -1, -1)
        for blk in self.dec_blocks:
            q = blk(q, memory)
        return self.out_head(self.dec_norm(q))

    def forward(self, chunks: torch.Tensor, keep: torch.Tensor | None = None) -> torch.Tensor:
        z = self.encode(chunks)
        ste = fsq_quantize(z, self.config.levels).ste_value
        return self.decode_embeddings(self.token_memory(ste, keep))

    # -- discrete interface --------------------------------------------------

    @torch.no_grad()
    def tokenize(self, chunk: np.ndarray) -> np.ndarray:
        """One chunk -> h_l token ids (mixed-radix indices of the FSQ codes)."""
        return self.tokenize_many(np.asarray(chunk)[None])[0]

    @torch.no_grad()
    def tokenize_many(self, chunks: np.ndarray, batch_size: int = 512) -> np.ndarray:
        chunks = np.asarray(chunks, dtype=np.float64)
        out = []
        for start in range(0, len(chunks), batch_size):
            batch = torch.as_tensor(chunks[start : start + batch_size], dtype=torch.float32)
            code = fsq_quantize(self.encode(batch), self.config.levels).code
            out.append(code_to_index(code.numpy(), self.config.levels))
        return np.concatenate(out, axis=0)

    @torch.no_grad()
    def detokenize(self, tokens) -> np.ndarray:
        """Decode any prefix of 1..h_l valid ids; positions beyond the prefix
        are MASK-padded, so the map is total on its declared token space."""
        ids = np.asarray(tokens, dtype=np.int64)
        if ids.ndim != 1 or not 1 <= ids.shape[0] <= self.config.h_l:
            raise BoundsError(
                f"token prefix length must lie in [1, {self.config.h_l}], got {ids.shape}"
            )
        return self.detokenize_many(ids[None])[0]

    @torch.no_grad()
    def detokenize_many(self, token_rows: np.ndarray, batch_size: int = 512) -> np.ndarray:
        """(B, K) ids with a common prefix length K -> (B, h_a, d_a) chunks."""
        cfg = self.config
        rows = np.asarray(token_rows, dtype=np.int64)
        if rows.ndim != 2 or not 1 <= rows.shape[1] <= cfg.h_l:
            raise BoundsError(f"expected (B, K<= {cfg.h_l}) ids, got {rows.shape}")
        if rows.min(initial=0) < 0 or rows.max(initial=0) >= cfg.vocab_size:
            raise OutOfVocabularyError(f"token ids must lie in [0, {cfg.vocab_size})")
        k = rows.shape[1]
        out = []
        for start in range(0, len(rows), batch_size):
            ids = rows[start : start + batch_size]
            emb = np.zeros((len(ids), cfg.h_l, cfg.d_l), dtype=np.float32)
            emb[:, :k] = code_embedding(index_to_code(ids, cfg.levels), cfg.levels)
            keep = torch.full((len(ids),), k, dtype=torch.long)
            mem = self.token_memory(torch.from_numpy(emb), keep)
            out.append(self.decode_embeddings(mem).numpy().astype(np.float64))
        return np.concatenate(out, axis=0)


def train_oat(
    chunks: np.ndarray,
    config: OatConfig,
    seed: int,
    steps: int,
    batch_size: int = 64,
    lr: float = 5e-5,
    ordered: bool = True,
) -> tuple[OatTokenizer, np.ndarray]:
    """Joint encoder/decoder training on mean squared reconstruction error.

    `ordered=False` disables nested dropout (every step trains the full
    token sequence), giving the unordered comparison variant. Deterministic
    for a fixed seed: init, batch order and prefix draws all derive from it.
    """
    chunks = np.asarray(chunks, dtype=np.float64)
    if chunks.ndim != 3 or chunks.shape[1:] != (config.h_a, config.d_a):
        raise ShapeError(f"chunks must be (N, {config.h_a}, {config.d_a}), got {chunks.shape}")
    torch.manual_seed(seed)
    model = OatTokenizer(config)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    rng = np.random.default_rng(seed)
    data = torch.as_tensor(chunks, dtype=torch.float32)
    losses = np.empty(steps)
    for step in range(steps):
        batch = data[rng.integers(0, len(data), size=batch_size)]
        if ordered:
            keep = torch.as_tensor(
                sample_prefix_lengths(config.dropout_dist, config.h_l, batch_size, rng)
            )
        else:
            keep = None
        recon = model(batch, keep)
        loss = ((recon - batch) ** 2).mean()
        if not torch.isfinite(loss):
            raise TrainingDivergedError(step)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses[step] = loss.item()
    model.eval()
    return model, losses


# -- optional rectified-flow decoder -----------------------------------------


def _require_flow(model: OatTokenizer) -> None:
    from .errors import FeatureDisabledError

    if not model.config.flow_decoder:
        raise FeatureDisabledError("flow decoder is disabled; set flow_decoder=True")


def flow_velocity(model: OatTokenizer, memory: torch.Tensor, noised: torch.Tensor) -> torch.Tensor:
    """Predict the flow from token memory plus the noised action sequence."""
    act = model.flow_action_embed(noised) + model.pos_actions
    full_memory = torch.cat([memory, act], dim=1)
    q = model.pos_actions.expand(memory.shape[0], -1, -1)
    for blk in model.flow_blocks:
        q = blk(q, full_memory)
    return model.flow_head(model.flow_norm(q))


def noised_actions(chunks: torch.Tensor, t: torch.Tensor, eps: torch.Tensor) -> torch.Tensor:
    """Straight-path interpolation (1-t)*a0 + t*eps; t=0 gives the clean
    chunk, t=1 gives pure noise."""
    tt = t[:, None, None]
    return (1.0 - tt) * chunks + tt * eps


def flow_train_step(
    model: OatTokenizer,
    chunks: torch.Tensor,
    t: torch.Tensor,
    eps: torch.Tensor,
    keep: torch.Tensor | None = None,
) -> torch.Tensor:
    """Rectified-flow objective on a^t = (1-t) a^0 + t eps with target
    v = eps - a^0; returns the mean squared velocity error."""
    _require_flow(model)
    noised = noised_actions(chunks, t, eps)
    z = model.encode(chunks)
    ste = fsq_quantize(z, model.config.levels).ste_value
    memory = model.token_memory(ste, keep)
    v_hat = flow_velocity(model, memory, noised)
    return ((v_hat - (eps - chunks)) ** 2).mean()


def train_flow_decoder(
    model: OatTokenizer,
    chunks: np.ndarray,
    seed: int,
    steps: int,
    batch_size: int = 64,
    lr: float = 5e-5,
) -> np.ndarray:
    """Fit the flow decoder on top of a trained tokenizer (encoder frozen)."""
    _require_flow(model)
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    data = torch.as_tensor(np.asarray(chunks), dtype=torch.float32)
    flow_params = (
        list(model.flow_action_embed.parameters())
        + list(model.flow_blocks.parameters())
        + list(model.flow_norm.parameters())
        + list(model.flow_head.parameters())
    )
    opt = torch.optim.Adam(flow_params, lr=lr)
    losses = np.empty(steps)
    for step in range(steps):
        batch = data[rng.integers(0, len(data), size=batch_size)]
        t = torch.as_tensor(rng.random(batch_size), dtype=torch.float32)
        eps = torch.as_tensor(
            rng.standard_normal(batch.shape), dtype=torch.float32
        )
        keep = torch.as_tensor(
            sample_prefix_lengths(model.config.dropout_dist, model.config.h_l, batch_size, rng)
        )
        loss = flow_train_step(model, batch, t, eps, keep)
        if not torch.isfinite(loss):
            raise TrainingDivergedError(step)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses[step] = loss.item()
    return losses


@torch.no_grad()
def flow_decode(
    model: OatTokenizer,
    tokens,
    n_steps: int,
    rng: np.random.Generator | None = None,
    eps: np.ndarray | None = None,
) -> np.ndarray:
    """Integrate from noise at t=1 to t=0 with n uniform explicit-Euler steps."""
    _require_flow(model)
    cfg = model.config
    ids = np.asarray(tokens, dtype=np.int64)
    if not 1 <= ids.shape[0] <= cfg.h_l:
        raise BoundsError(f"token prefix length must lie in [1, {cfg.h_l}]")
    if eps is None:
        eps = (rng or np.random.default_rng(0)).standard_normal((cfg.h_a, cfg.d_a))
    emb = np.zeros((1, cfg.h_l, cfg.d_l), dtype=np.float32)
    emb[0, : ids.shape[0]] = code_embedding(index_to_code(ids, cfg.levels), cfg.levels)
    keep = torch.tensor([ids.shape[0]], dtype=torch.long)
    memory = model.token_memory(torch.from_numpy(emb), keep)
    a = torch.as_tensor(eps, dtype=torch.float32)[None]
    for _ in range(n_steps):
        a = a - flow_velocity(model, memory, a) / n_steps
    return a[0].numpy().astype(np.float64)


# -- checkpoint io ------------------------------------------------------------


def save_oat(model: OatTokenizer, path, seed: int, ordered: bool = True) -> None:
    cfg = model.config
    header = {
        "scheme": "oat",
        "H_a": cfg.h_a,
        "D_a": cfg.d_a,
        "H_l": cfg.h_l,
        "D_l": cfg.d_l,
        "levels": list(cfg.levels),
        "enc_layers": cfg.enc_layers,
        "dec_layers": cfg.dec_layers,
        "model_dim": cfg.model_dim,
        "head_dim": cfg.head_dim,
        "ffn_ratio": cfg.ffn_ratio,
        "seed": seed,
        "ordered": ordered,
        "flow_decoder": cfg.flow_decoder,
        "keep_all_prob": cfg.dropout_dist.keep_all_prob,
        "format_version": 1,
    }
    write_checkpoint(path, header, model)


def load_oat(path) -> tuple[OatTokenizer, dict]:
    header, blob = read_checkpoint(path)
    if header.get("scheme") != "oat":
        raise ConfigError(f"not an oat checkpoint: scheme={header.get('scheme')!r}")
    config = OatConfig(
        h_a=header["H_a"],
        d_a=header["D_a"],
        h_l=header["H_l"],
        d_l=header["D_l"],
        levels=tuple(header["levels"]),
        enc_layers=header["enc_layers"],
        dec_layers=header["dec_layers"],
        model_dim=header["model_dim"],
        head_dim=header["head_dim"],
        ffn_ratio=header.get("ffn_ratio", 2),
        dropout_dist=NestedDropoutDist(keep_all_prob=header.get("keep_all_prob", 0.0)),
        flow_decoder=header.get("flow_decoder", False),
    )
    model = OatTokenizer(config)
    load_parameters(model, blob)
    model.eval()
    return model, header
