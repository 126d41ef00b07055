import numpy as np
import pytest

from oatok.env import OBS_DIM
from oatok.oat import OatConfig, train_oat
from oatok.policy import config_for_oat, make_training_pairs, policy_train
from oatok.data import normalize

from tests.helpers import PM, SMALL_NET, expert_setup, tiny_chunks, tiny_config


@pytest.fixture(scope="session")
def trained_tiny():
    """Small smooth-fourier tokenizer shared by tokenizer/evaluation tests."""
    model, losses = train_oat(tiny_chunks(96), tiny_config(), seed=0, steps=120, batch_size=16)
    return model, losses


@pytest.fixture(scope="session")
def point_mass_setup():
    episodes, stats, chunks = expert_setup(n_episodes=30, h_a=PM["h_a"])
    tok, _ = train_oat(
        chunks,
        OatConfig(h_a=PM["h_a"], d_a=PM["d_a"], h_l=4, d_l=3, levels=(4, 3, 3),
                  enc_layers=1, dec_layers=2, model_dim=32, head_dim=16),
        seed=0,
        steps=150,
        batch_size=16,
    )
    obs_hist, targets = make_training_pairs(
        episodes, lambda c: tok.tokenize(normalize(c, stats)), PM["h_o"], PM["h_a"]
    )
    config = config_for_oat(tok, OBS_DIM, **SMALL_NET)
    return tok, stats, config, obs_hist, targets


@pytest.fixture(scope="session")
def trained_policy(point_mass_setup):
    tok, stats, config, obs_hist, targets = point_mass_setup
    net, losses = policy_train(obs_hist, targets, config, seed=1, steps=600, batch_size=16)
    return tok, stats, net, losses
