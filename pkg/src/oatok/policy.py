"""Autoregressive next-token policy over a bound tokenizer's vocabulary.

Observations are encoded and prepended as context positions before a BOS
token; a causal transformer predicts token ids one at a time. With the
ordered tokenizer binding, generation may stop after any prefix length K
and still detokenize; the binning/frequency bindings always generate full
sequences, and a frequency-domain decode failure falls back to a no-op
chunk that repeats the last executed action.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from .binning import BinConfig, bin_detokenize
from .checkpoint import load_parameters, read_checkpoint, write_checkpoint
from .errors import (
    BindingError,
    BoundsError,
    ConfigError,
    ShapeError,
    TrainingDivergedError,
)
from .fast import DecodeError, FastTokenizer
from .nets import EncoderBlock, causal_mask, sinusoidal_positions
from .oat import OatTokenizer

BINDINGS = ("oat", "bin", "fast")


@dataclass
class PolicyConfig:
    binding: str
    vocab_ids: list[int]
    token_horizon: int
    obs_dim: int
    h_a: int
    d_a: int
    h_o: int = 2
    model_dim: int = 256
    head_dim: int = 64
    n_layers: int = 4
    ffn_ratio: int = 2
    sampling: str = "greedy"
    temperature: float = 1.0
    execute_steps: int | None = None

    def __post_init__(self):
        if self.binding not in BINDINGS:
            raise ConfigError(f"unknown binding {self.binding!r}")
        if self.sampling not in ("greedy", "categorical"):
            raise ConfigError(f"unknown sampling mode {self.sampling!r}")
        if self.execute_steps is None:
            self.execute_steps = max(1, self.h_a // 2)
        if self.execute_steps > self.h_a:
            raise ConfigError("execute_steps cannot exceed the chunk horizon")
        if self.model_dim % self.head_dim != 0:
            raise ConfigError("model_dim must be divisible by head_dim")

    @property
    def has_eos(self) -> bool:
        # frequency-domain sequences are variable length and need a stop token
        return self.binding == "fast"

    @property
    def n_vocab(self) -> int:
        return len(self.vocab_ids) + (1 if self.has_eos else 0)

    @property
    def eos_index(self) -> int | None:
        return len(self.vocab_ids) if self.has_eos else None


def config_for_oat(tokenizer: OatTokenizer, obs_dim: int, **overrides) -> PolicyConfig:
    cfg = tokenizer.config
    return PolicyConfig(
        binding="oat",
        vocab_ids=list(range(cfg.vocab_size)),
        token_horizon=cfg.h_l,
        obs_dim=obs_dim,
        h_a=cfg.h_a,
        d_a=cfg.d_a,
        **overrides,
    )


def config_for_bin(bin_config: BinConfig, h_a: int, d_a: int, obs_dim: int, **overrides) -> PolicyConfig:
    return PolicyConfig(
        binding="bin",
        vocab_ids=list(range(bin_config.n_bins)),
        token_horizon=h_a * d_a,
        obs_dim=obs_dim,
        h_a=h_a,
        d_a=d_a,
        **overrides,
    )


def config_for_fast(tokenizer: FastTokenizer, obs_dim: int, **overrides) -> PolicyConfig:
    cfg = tokenizer.config
    return PolicyConfig(
        binding="fast",
        vocab_ids=list(tokenizer.vocab.token_ids),
        token_horizon=cfg.h_a * cfg.d_a,  # expansions are >= 1 symbol each
        obs_dim=obs_dim,
        h_a=cfg.h_a,
        d_a=cfg.d_a,
        **overrides,
    )


class PolicyNet(nn.Module):
    # Registration order defines the checkpoint blob order; keep stable.

    def __init__(self, config: PolicyConfig):
        super().__init__()
        self.config = config
        d = config.model_dim
        self.obs_encoder = nn.Sequential(
            nn.Linear(config.obs_dim, d), nn.GELU(), nn.Linear(d, d)
        )
        self.token_embed = nn.Embedding(config.n_vocab, d)
        self.bos = nn.Parameter(torch.randn(d) * 0.02)
        self.blocks = nn.ModuleList(
            EncoderBlock(d, config.head_dim, config.ffn_ratio) for _ in range(config.n_layers)
        )
        self.norm = nn.LayerNorm(d)
        self.head = nn.Linear(d, config.n_vocab)
        # start from uniform next-token logits
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)
        max_seq = config.h_o + 1 + config.token_horizon
        self.register_buffer("pos", sinusoidal_positions(max_seq, d), persistent=False)
        self.register_buffer("mask", causal_mask(max_seq), persistent=False)
        self._id_to_index = {tid: i for i, tid in enumerate(config.vocab_ids)}

    def forward(self, obs: torch.Tensor, token_indices: torch.Tensor) -> torch.Tensor:
        """(B, h_o, obs_dim) and (B, L) -> (B, L+1, n_vocab) next-token logits
        for positions BOS, t_1, ..., t_L. Pad entries of -1 embed as index 0;
        their predictions are causally downstream and ignored by the loss."""
        cfg = self.config
        if obs.ndim != 3 or obs.shape[1:] != (cfg.h_o, cfg.obs_dim):
            raise ShapeError(f"expected (B, {cfg.h_o}, {cfg.obs_dim}) observations")
        b, l = token_indices.shape
        if l > cfg.token_horizon:
            raise BoundsError(f"token prefix length {l} exceeds horizon {cfg.token_horizon}")
        o = self.obs_encoder(obs)
        t = self.token_embed(token_indices.clamp(min=0))
        x = torch.cat([o, self.bos.expand(b, 1, -1), t], dim=1)
        n = x.shape[1]
        x = x + self.pos[:n]
        for blk in self.blocks:
            x = blk(x, self.mask[:n, :n])
        return self.head(self.norm(x[:, cfg.h_o :]))

    def tokens_to_indices(self, token_ids) -> list[int]:
        try:
            return [self._id_to_index[int(t)] for t in token_ids]
        except KeyError as exc:
            raise BindingError(f"token id {exc.args[0]} not in the bound vocabulary")


def policy_logits(prefix_token_ids, observations: np.ndarray, net: PolicyNet) -> np.ndarray:
    """Next-token logits given a (possibly empty) prefix of tokenizer ids."""
    cfg = net.config
    prefix = list(prefix_token_ids)
    if len(prefix) >= cfg.token_horizon:
        raise BoundsError(f"prefix length {len(prefix)} >= horizon {cfg.token_horizon}")
    obs = torch.as_tensor(np.asarray(observations), dtype=torch.float32)[None]
    idx = torch.tensor([net.tokens_to_indices(prefix)], dtype=torch.long).view(1, len(prefix))
    with torch.no_grad():
        logits = net(obs, idx)
    return logits[0, -1].numpy().astype(np.float64)


def policy_train(
    obs_histories: np.ndarray,
    target_sequences: list[list[int]],
    config: PolicyConfig,
    seed: int,
    steps: int,
    batch_size: int = 64,
    lr: float = 5e-5,
) -> tuple[PolicyNet, np.ndarray]:
    """Teacher-forced cross-entropy on (observation history, token sequence)
    pairs produced by the bound tokenizer on expert chunks."""
    obs = np.asarray(obs_histories, dtype=np.float64)
    if obs.ndim != 3 or obs.shape[1:] != (config.h_o, config.obs_dim):
        raise ShapeError(f"expected (N, {config.h_o}, {config.obs_dim}) observations")
    if len(target_sequences) != obs.shape[0]:
        raise ShapeError("observation/target counts differ")
    torch.manual_seed(seed)
    net = PolicyNet(config)

    max_len = config.token_horizon + (1 if config.has_eos else 0)
    targets = np.full((len(target_sequences), max_len), -1, dtype=np.int64)
    for i, seq in enumerate(target_sequences):
        idx = net.tokens_to_indices(seq)
        if config.has_eos:
            idx = idx + [config.eos_index]
        if len(idx) > max_len:
            raise BindingError(f"target sequence {i} longer than horizon {config.token_horizon}")
        targets[i, : len(idx)] = idx

    data_obs = torch.as_tensor(obs, dtype=torch.float32)
    data_tgt = torch.as_tensor(targets)
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    rng = np.random.default_rng(seed)
    losses = np.empty(steps)
    for step in range(steps):
        sel = rng.integers(0, len(data_tgt), size=batch_size)
        tgt = data_tgt[sel]
        logits = net(data_obs[sel], tgt[:, :-1])
        loss = nn.functional.cross_entropy(
            logits.reshape(-1, config.n_vocab), tgt.reshape(-1), ignore_index=-1
        )
        if not torch.isfinite(loss):
            raise TrainingDivergedError(step)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses[step] = loss.item()
    net.eval()
    return net, losses


def _sample_index(logits: np.ndarray, config: PolicyConfig, rng) -> int:
    if config.sampling == "greedy":
        return int(np.argmax(logits))
    if rng is None:
        raise ConfigError("categorical sampling needs an rng")
    z = logits / config.temperature
    z = z - z.max()
    p = np.exp(z)
    p /= p.sum()
    return int(rng.choice(len(p), p=p))


def _generate_indices(obs: torch.Tensor, net: PolicyNet, n_tokens: int, rng, stop_at_eos: bool):
    cfg = net.config
    indices: list[int] = []
    with torch.no_grad():
        for _ in range(n_tokens):
            idx = torch.tensor([indices], dtype=torch.long).view(1, len(indices))
            logits = net(obs, idx)[0, -1].numpy().astype(np.float64)
            nxt = _sample_index(logits, cfg, rng)
            if stop_at_eos and nxt == cfg.eos_index:
                break
            indices.append(nxt)
    return indices


def policy_infer(
    observations: np.ndarray,
    K: int,
    net: PolicyNet,
    tokenizer=None,
    rng=None,
    last_action: np.ndarray | None = None,
) -> np.ndarray:
    """Sample tokens and detokenize to a normalized action chunk.

    K is the prefix length for the ordered binding; the bin and fast
    bindings are not prefix-decodable, so they always generate full-length
    sequences and K is ignored. A fast decode failure returns a chunk
    repeating `last_action` (zeros if none) instead of crashing.
    """
    cfg = net.config
    obs = torch.as_tensor(np.asarray(observations), dtype=torch.float32)[None]

    if cfg.binding == "oat":
        if not isinstance(tokenizer, OatTokenizer):
            raise BindingError("oat binding needs an OatTokenizer")
        if not 1 <= K <= cfg.token_horizon:
            raise BoundsError(f"prefix K must lie in [1, {cfg.token_horizon}], got {K}")
        indices = _generate_indices(obs, net, K, rng, stop_at_eos=False)
        ids = np.array([cfg.vocab_ids[i] for i in indices], dtype=np.int64)
        return tokenizer.detokenize(ids)

    if cfg.binding == "bin":
        indices = _generate_indices(obs, net, cfg.token_horizon, rng, stop_at_eos=False)
        ids = np.array([cfg.vocab_ids[i] for i in indices], dtype=np.int64)
        return bin_detokenize(ids, cfg.h_a, cfg.d_a, BinConfig(n_bins=len(cfg.vocab_ids)))

    if not isinstance(tokenizer, FastTokenizer):
        raise BindingError("fast binding needs a FastTokenizer")
    indices = _generate_indices(obs, net, cfg.token_horizon, rng, stop_at_eos=True)
    ids = [cfg.vocab_ids[i] for i in indices]
    chunk = tokenizer.detokenize(ids)
    if isinstance(chunk, DecodeError):
        if last_action is None:
            return np.zeros((cfg.h_a, cfg.d_a))
        return np.tile(np.asarray(last_action, dtype=np.float64), (cfg.h_a, 1))
    return chunk


def autoregressive_step_count(config: PolicyConfig, K: int, sampled_length: int | None = None) -> int:
    """Autoregressive forward passes one inference costs under each binding."""
    if config.binding == "oat":
        if not 1 <= K <= config.token_horizon:
            raise BoundsError(f"K must lie in [1, {config.token_horizon}]")
        return K
    if config.binding == "bin":
        return config.h_a * config.d_a
    if sampled_length is None:
        raise ConfigError("fast binding produces variable-length sequences; pass sampled_length")
    return sampled_length


# -- training-pair assembly ----------------------------------------------------


def make_training_pairs(
    episodes: list[tuple[np.ndarray, np.ndarray]],
    tokenize_fn,
    h_o: int,
    h_a: int,
    stride: int | None = None,
) -> tuple[np.ndarray, list[list[int]]]:
    """Slice (observations, actions) episodes into (obs history, token
    sequence) pairs. `tokenize_fn` maps a raw (h_a, d_a) action chunk to
    token ids (normalization belongs inside the callable). Histories before
    step h_o-1 repeat the first observation."""
    histories, sequences = [], []
    if stride is None:
        stride = max(1, h_a // 2)
    for observations, actions in episodes:
        T = actions.shape[0]
        for t in range(0, T - h_a + 1, stride):
            hist = np.stack([observations[max(0, t - (h_o - 1) + i)] for i in range(h_o)])
            histories.append(hist)
            sequences.append(list(tokenize_fn(actions[t : t + h_a])))
    return np.stack(histories), sequences


# -- checkpoint io ---------------------------------------------------------------


def save_policy(net: PolicyNet, path, seed: int) -> None:
    cfg = net.config
    header = {
        "scheme": "policy",
        "binding": cfg.binding,
        "vocab_ids": list(cfg.vocab_ids),
        "token_horizon": cfg.token_horizon,
        "obs_dim": cfg.obs_dim,
        "H_a": cfg.h_a,
        "D_a": cfg.d_a,
        "H_o": cfg.h_o,
        "model_dim": cfg.model_dim,
        "head_dim": cfg.head_dim,
        "n_layers": cfg.n_layers,
        "ffn_ratio": cfg.ffn_ratio,
        "sampling": cfg.sampling,
        "temperature": cfg.temperature,
        "execute_steps": cfg.execute_steps,
        "seed": seed,
        "format_version": 1,
    }
    write_checkpoint(path, header, net)


def load_policy(path) -> tuple[PolicyNet, dict]:
    header, blob = read_checkpoint(path)
    if header.get("scheme") != "policy":
        raise ConfigError(f"not a policy checkpoint: scheme={header.get('scheme')!r}")
    config = PolicyConfig(
        binding=header["binding"],
        vocab_ids=list(header["vocab_ids"]),
        token_horizon=header["token_horizon"],
        obs_dim=header["obs_dim"],
        h_a=header["H_a"],
        d_a=header["D_a"],
        h_o=header["H_o"],
        model_dim=header["model_dim"],
        head_dim=header["head_dim"],
        n_layers=header["n_layers"],
        ffn_ratio=header.get("ffn_ratio", 2),
        sampling=header["sampling"],
        temperature=header["temperature"],
        execute_steps=header["execute_steps"],
    )
    net = PolicyNet(config)
    load_parameters(net, blob)
    net.eval()
    return net, header
