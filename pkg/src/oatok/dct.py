"""Orthonormal DCT-II and its inverse via a precomputed basis matrix.

basis[k, n] = s_k * cos(pi * (2n + 1) * k / (2N)) with s_0 = sqrt(1/N) and
s_k = sqrt(2/N) for k > 0, so basis @ basis.T = I and the inverse transform
is the plain transpose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class DctPlan:
    length: int
    basis: np.ndarray  # (length, length), orthonormal


def make_dct_plan(length: int) -> DctPlan:
    if length < 1:
        raise ConfigError(f"DCT length must be >= 1, got {length}")
    n = np.arange(length)
    k = n[:, None]
    basis = np.cos(np.pi * (2 * n[None, :] + 1) * k / (2 * length))
    scale = np.full(length, np.sqrt(2.0 / length))
    scale[0] = np.sqrt(1.0 / length)
    return DctPlan(length=length, basis=scale[:, None] * basis)


def dct2(signal: np.ndarray, plan: DctPlan) -> np.ndarray:
    """Forward transform along axis 0; accepts a vector or a (length, D) matrix."""
    x = np.asarray(signal, dtype=np.float64)
    if x.shape[0] != plan.length:
        raise ShapeError(f"signal length {x.shape[0]} != plan length {plan.length}")
    return plan.basis @ x


def idct(coeffs: np.ndarray, plan: DctPlan) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    if c.shape[0] != plan.length:
        raise ShapeError(f"coefficient length {c.shape[0]} != plan length {plan.length}")
    return plan.basis.T @ c
