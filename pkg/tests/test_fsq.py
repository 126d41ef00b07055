import itertools

import numpy as np
import pytest
import torch

from oatok.errors import BoundsError, ConfigError
from oatok.fsq import (
    code_embedding,
    code_to_index,
    codebook_size,
    fsq_bound,
    fsq_quantize,
    index_to_code,
)

LEVELS = (8, 5, 5, 5)
TABLE_LEVELS = [(8, 6, 5), (8, 8, 8), (8, 5, 5, 5), (8, 8, 6, 5), (7, 5, 5, 5, 5)]


@pytest.mark.parametrize(
    "levels,size",
    [((8, 6, 5), 240), ((8, 8, 8), 512), ((8, 5, 5, 5), 1000),
     ((8, 8, 6, 5), 1920), ((7, 5, 5, 5, 5), 4375), ((2,), 2)],
)
def test_codebook_sizes(levels, size):
    assert codebook_size(levels) == size


def test_invalid_levels_rejected():
    with pytest.raises(ConfigError):
        codebook_size((8, 1))
    with pytest.raises(ConfigError):
        codebook_size(())


def test_bound_at_zero_is_midpoint():
    b = fsq_bound(torch.zeros(4, dtype=torch.float64), LEVELS)
    assert torch.allclose(b, torch.tensor([3.5, 2.0, 2.0, 2.0], dtype=torch.float64))


def test_bound_limits():
    b_hi = fsq_bound(torch.full((4,), 40.0, dtype=torch.float64), LEVELS)
    b_lo = fsq_bound(torch.full((4,), -40.0, dtype=torch.float64), LEVELS)
    assert torch.allclose(b_hi, torch.tensor([7.0, 4.0, 4.0, 4.0], dtype=torch.float64))
    assert torch.allclose(b_lo, torch.zeros(4, dtype=torch.float64))


def test_bound_derivative_matches_finite_differences():
    rng = np.random.default_rng(0)
    z = torch.tensor(rng.standard_normal(16).reshape(4, 4), dtype=torch.float64)
    h = 1e-5
    for c in range(4):
        analytic = (LEVELS[c] - 1) / 2.0 / np.cosh(z[:, c].numpy()) ** 2
        zp, zm = z.clone(), z.clone()
        zp[:, c] += h
        zm[:, c] -= h
        fd = (fsq_bound(zp, LEVELS)[:, c] - fsq_bound(zm, LEVELS)[:, c]).numpy() / (2 * h)
        assert np.abs((fd - analytic) / analytic).max() < 1e-6


def test_quantize_at_zero_rounds_half_away():
    res = fsq_quantize(torch.zeros(4, dtype=torch.float64), LEVELS)
    assert res.code.tolist() == [4, 2, 2, 2]  # 3.5 rounds away from zero to 4


def test_quantize_idempotent_on_lattice_preimages():
    lv = np.array(LEVELS)
    rng = np.random.default_rng(4)
    codes = np.stack([rng.integers(0, L, size=32) for L in lv], axis=1)
    emb = code_embedding(codes, LEVELS)  # in [-1, 1]
    # pre-image of the embedding under the bound: atanh(embedding)
    z = torch.tensor(np.arctanh(np.clip(emb, -0.999999, 0.999999)), dtype=torch.float64)
    res = fsq_quantize(z, LEVELS)
    assert np.array_equal(res.code.numpy(), codes)


def test_ste_value_equals_centered_code_embedding():
    rng = np.random.default_rng(8)
    z = torch.tensor(rng.standard_normal((6, 4)), dtype=torch.float64)
    res = fsq_quantize(z, LEVELS)
    expected = code_embedding(res.code.numpy(), LEVELS)
    assert np.allclose(res.ste_value.detach().numpy(), expected)
    assert res.ste_value.detach().abs().max() <= 1.0


def test_ste_gradient_matches_surrogate_finite_differences():
    rng = np.random.default_rng(1)
    z0 = rng.standard_normal((5, 4))
    z = torch.tensor(z0, dtype=torch.float64, requires_grad=True)
    fsq_quantize(z, LEVELS).ste_value.sum().backward()
    grad = z.grad.numpy()
    assert np.all(np.abs(grad) > 0)

    def surrogate_sum(arr):
        b = fsq_bound(torch.tensor(arr, dtype=torch.float64), LEVELS)
        lv = torch.tensor(LEVELS, dtype=torch.float64)
        return (2.0 * b / (lv - 1.0) - 1.0).sum().item()

    h = 1e-5
    fd = np.zeros_like(z0)
    for idx in np.ndindex(z0.shape):
        zp, zm = z0.copy(), z0.copy()
        zp[idx] += h
        zm[idx] -= h
        fd[idx] = (surrogate_sum(zp) - surrogate_sum(zm)) / (2 * h)
    assert np.abs((grad - fd) / fd).max() < 1e-6


def test_forward_gap_is_rounding_residual():
    rng = np.random.default_rng(2)
    z = torch.tensor(rng.standard_normal((3, 4)), dtype=torch.float64)
    res = fsq_quantize(z, LEVELS)
    lv = torch.tensor(LEVELS, dtype=torch.float64)
    soft = 2.0 * fsq_bound(z, LEVELS) / (lv - 1.0) - 1.0
    residual = 2.0 * (res.code.to(torch.float64) - fsq_bound(z, LEVELS)) / (lv - 1.0)
    assert torch.allclose(res.ste_value - soft, residual)


def test_radix_extremes():
    assert code_to_index(np.zeros(4, dtype=np.int64), LEVELS) == 0
    top = np.array([7, 4, 4, 4])
    assert code_to_index(top, LEVELS) == 999


def test_worked_mixed_radix_example():
    # 7 + 4*8 + 4*40 + 4*200 = 999
    assert code_to_index(np.array([7, 4, 4, 4]), LEVELS) == 7 + 32 + 160 + 800


@pytest.mark.parametrize("levels", TABLE_LEVELS)
def test_bijection_exhaustive(levels):
    size = codebook_size(levels)
    all_codes = np.array(list(itertools.product(*[range(L) for L in levels])))
    idx = code_to_index(all_codes, levels)
    assert sorted(idx.tolist()) == list(range(size))
    back = index_to_code(idx, levels)
    assert np.array_equal(back, all_codes)


def test_out_of_range_code_and_index_rejected():
    with pytest.raises(BoundsError):
        code_to_index(np.array([8, 0, 0, 0]), LEVELS)
    with pytest.raises(BoundsError):
        index_to_code(1000, LEVELS)
    with pytest.raises(BoundsError):
        index_to_code(-1, LEVELS)
