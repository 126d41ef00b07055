"""Shared builders for small trained fixtures used across test modules."""

import numpy as np

from oatok.data import (
    DatasetConfig,
    NormStats,
    dataset_chunks,
    fit_normalizer,
    generate_synthetic_dataset,
    normalize,
)
from oatok.env import scripted_episode
from oatok.oat import OatConfig

TINY = dict(h_a=8, d_a=2, h_l=4, d_l=3, levels=(4, 3, 3), enc_layers=2,
            dec_layers=2, model_dim=32, head_dim=16)

PM = dict(h_a=8, d_a=3, h_o=2)
SMALL_NET = dict(model_dim=32, head_dim=16, n_layers=2)


def tiny_config(**overrides) -> OatConfig:
    return OatConfig(**{**TINY, **overrides})


def tiny_chunks(n=64, seed=0, h_a=8, d_a=2):
    ds = generate_synthetic_dataset(DatasetConfig(max(2, n // 4), h_a * 4, d_a), seed)
    stats = fit_normalizer(ds)
    chunks = dataset_chunks(ds, h_a, h_a // 2)
    return np.stack([normalize(c, stats) for c in chunks])[:n]


def expert_episodes(n, seed=0, length=64):
    rng = np.random.default_rng(seed)
    return [scripted_episode(rng, length)[:2] for _ in range(n)]


def expert_setup(n_episodes=30, seed=0, length=64, h_a=8):
    """Episodes plus action stats and normalized chunks for tokenizer training."""
    episodes = expert_episodes(n_episodes, seed, length)
    actions = np.concatenate([a for _, a in episodes])
    stats = NormStats(min=actions.min(0) - 1e-9, max=actions.max(0) + 1e-9)
    chunks = np.stack([
        normalize(acts[t : t + h_a], stats)
        for _, acts in episodes
        for t in range(0, len(acts) - h_a + 1, h_a // 2)
    ])
    return episodes, stats, chunks
