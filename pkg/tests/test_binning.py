import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oatok.binning import BinConfig, bin_detokenize, bin_tokenize
from oatok.errors import ConfigError, InvalidInputError, OutOfVocabularyError, ShapeError

CFG = BinConfig(n_bins=256)


def test_sequence_length_is_horizon_times_dims():
    chunk = np.zeros((32, 7))
    assert bin_tokenize(chunk, CFG).shape == (224,)


def test_boundary_values_clamp_into_end_bins():
    chunk = np.array([[-1.0, 1.0]])
    assert bin_tokenize(chunk, CFG).tolist() == [0, 255]


def test_zero_maps_to_bin_128():
    # floor((0 + 1) / 2 * 256) = 128
    assert bin_tokenize(np.array([[0.0]]), CFG).tolist() == [128]


def test_flattening_is_time_major():
    chunk = np.array([[-1.0, 0.0], [1.0, -1.0]])
    toks = bin_tokenize(chunk, CFG)
    assert toks.tolist() == [0, 128, 255, 0]


def test_non_finite_rejected():
    with pytest.raises(InvalidInputError):
        bin_tokenize(np.array([[np.nan]]), CFG)


def test_token_zero_decodes_to_lowest_bin_center():
    chunk = bin_detokenize(np.zeros(1, dtype=np.int64), 1, 1, CFG)
    assert np.isclose(chunk[0, 0], -1.0 + 1.0 / 256)


def test_all_zero_tokens_give_constant_chunk():
    chunk = bin_detokenize(np.zeros(12, dtype=np.int64), 4, 3, CFG)
    assert np.all(chunk == chunk[0, 0])


def test_round_trip_error_within_half_bin_over_10k_values():
    rng = np.random.default_rng(2)
    x = rng.uniform(-1.0, 1.0, size=(10_000, 1))
    toks = bin_tokenize(x, CFG)
    back = bin_detokenize(toks, 10_000, 1, CFG)
    assert np.abs(back - x).max() <= 1.0 / CFG.n_bins


def test_wrong_length_raises():
    with pytest.raises(ShapeError):
        bin_detokenize(np.zeros(7, dtype=np.int64), 2, 4, CFG)


def test_out_of_vocabulary_token_raises():
    with pytest.raises(OutOfVocabularyError):
        bin_detokenize(np.array([256]), 1, 1, CFG)
    with pytest.raises(OutOfVocabularyError):
        bin_detokenize(np.array([-1]), 1, 1, CFG)


def test_n_bins_below_two_rejected():
    with pytest.raises(ConfigError):
        BinConfig(n_bins=1)


@given(st.integers(0, 255))
@settings(max_examples=50, deadline=None)
def test_totality_every_token_decodes_in_range(token):
    chunk = bin_detokenize(np.full(6, token, dtype=np.int64), 3, 2, CFG)
    assert np.all(np.isfinite(chunk))
    assert np.all((chunk >= -1.0) & (chunk <= 1.0))
