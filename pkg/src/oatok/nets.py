"""Minimal transformer pieces shared by the tokenizer and the policy.

Pre-LN blocks with explicit boolean attention masks (True = may attend),
built from plain linear layers so masking semantics stay fully visible.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn


def sinusoidal_positions(n: int, dim: int) -> torch.Tensor:
    """Fixed sin/cos position table, (n, dim) float32."""
    pos = torch.arange(n, dtype=torch.float32)[:, None]
    half = torch.arange(dim // 2, dtype=torch.float32)
    freq = torch.exp(-math.log(10000.0) * 2.0 * half / dim)
    angles = pos * freq[None, :]
    table = torch.zeros(n, dim)
    table[:, 0::2] = torch.sin(angles)
    table[:, 1::2] = torch.cos(angles)
    return table


def causal_mask(n: int) -> torch.Tensor:
    return torch.tril(torch.ones(n, n, dtype=torch.bool))


class Attention(nn.Module):
    def __init__(self, dim: int, head_dim: int):
        super().__init__()
        if dim % head_dim != 0:
            raise ValueError(f"model dim {dim} not divisible by head dim {head_dim}")
        self.n_heads = dim // head_dim
        self.head_dim = head_dim
        self.q = nn.Linear(dim, dim)
        self.k = nn.Linear(dim, dim)
        self.v = nn.Linear(dim, dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, query, memory, mask: torch.Tensor | None = None):
        # query (B, Lq, d), memory (B, Lk, d), mask (Lq, Lk) bool, True = attend
        b, lq, d = query.shape
        lk = memory.shape[1]
        q = self.q(query).view(b, lq, self.n_heads, self.head_dim).transpose(1, 2)
        k = self.k(memory).view(b, lk, self.n_heads, self.head_dim).transpose(1, 2)
        v = self.v(memory).view(b, lk, self.n_heads, self.head_dim).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        if mask is not None:
            scores = scores.masked_fill(~mask[None, None], float("-inf"))
        w = torch.softmax(scores, dim=-1)
        h = (w @ v).transpose(1, 2).reshape(b, lq, d)
        return self.out(h)


class FeedForward(nn.Module):
    def __init__(self, dim: int, ffn_ratio: int = 2):
        super().__init__()
        hidden = ffn_ratio * dim
        self.net = nn.Sequential(nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, dim))

    def forward(self, x):
        return self.net(x)


class EncoderBlock(nn.Module):
    """Self-attention block; the mask carries all structural constraints."""

    def __init__(self, dim: int, head_dim: int, ffn_ratio: int = 2):
        super().__init__()
        self.ln1 = nn.LayerNorm(dim)
        self.attn = Attention(dim, head_dim)
        self.ln2 = nn.LayerNorm(dim)
        self.ff = FeedForward(dim, ffn_ratio)

    def forward(self, x, mask=None):
        h = self.ln1(x)
        x = x + self.attn(h, h, mask)
        return x + self.ff(self.ln2(x))


class DecoderBlock(nn.Module):
    """Self-attention over queries, then cross-attention into a memory."""

    def __init__(self, dim: int, head_dim: int, ffn_ratio: int = 2):
        super().__init__()
        self.ln1 = nn.LayerNorm(dim)
        self.self_attn = Attention(dim, head_dim)
        self.ln2 = nn.LayerNorm(dim)
        self.ln_mem = nn.LayerNorm(dim)
        self.cross_attn = Attention(dim, head_dim)
        self.ln3 = nn.LayerNorm(dim)
        self.ff = FeedForward(dim, ffn_ratio)

    def forward(self, x, memory):
        h = self.ln1(x)
        x = x + self.self_attn(h, h)
        x = x + self.cross_attn(self.ln2(x), self.ln_mem(memory))
        return x + self.ff(self.ln3(x))
