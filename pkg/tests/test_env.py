import numpy as np

from oatok.env import ToyEnv, ToyEnvConfig, scripted_episode, scripted_expert


def test_scripted_expert_always_succeeds():
    rng = np.random.default_rng(0)
    assert all(scripted_episode(rng, 200)[2] for _ in range(100))


def test_episode_is_deterministic_given_rng_state():
    obs_a, act_a, _ = scripted_episode(np.random.default_rng(4), 120)
    obs_b, act_b, _ = scripted_episode(np.random.default_rng(4), 120)
    assert np.array_equal(obs_a, obs_b)
    assert np.array_equal(act_a, act_b)


def test_transition_is_deterministic():
    env_a, env_b = ToyEnv(), ToyEnv()
    env_a.reset(np.random.default_rng(1))
    env_b.reset(np.random.default_rng(1))
    action = np.array([0.3, -0.2, 0.0])
    for _ in range(10):
        oa, _ = env_a.step(action)
        ob, _ = env_b.step(action)
        assert np.array_equal(oa, ob)


def test_closed_gripper_grabs_only_within_radius():
    env = ToyEnv()
    env.reset(np.random.default_rng(2))
    env.p = env.obj + np.array([0.5, 0.0])  # too far to grasp
    env.v = np.zeros(2)
    env.step(np.array([0.0, 0.0, 1.0]))
    assert not env.attached
    # still closed: passing near the object picks it up
    env.p = env.obj.copy()
    env.step(np.array([0.0, 0.0, 1.0]))
    assert env.attached
    # opening releases it
    env.step(np.array([0.0, 0.0, 0.0]))
    assert not env.attached


def test_success_requires_release_inside_goal():
    env = ToyEnv()
    env.reset(np.random.default_rng(3))
    env.p = env.obj.copy()
    env.v = np.zeros(2)
    env.step(np.array([0.0, 0.0, 1.0]))
    assert env.attached
    env.p = env.goal.copy()
    env.obj = env.p.copy()
    env.v = np.zeros(2)
    _, success_while_held = env.step(np.array([0.0, 0.0, 1.0]))
    assert not success_while_held
    _, success_after_release = env.step(np.array([0.0, 0.0, 0.0]))
    assert success_after_release


def test_velocity_clamp():
    env = ToyEnv(ToyEnvConfig(v_max=0.1))
    env.reset(np.random.default_rng(5))
    for _ in range(50):
        env.step(np.array([1.0, 1.0, 0.0]))
    assert np.all(np.abs(env.v) <= 0.1 + 1e-12)


def test_expert_idles_after_success():
    rng = np.random.default_rng(6)
    obs, acts, success = scripted_episode(rng, 200)
    assert success
    tail = acts[-20:]
    assert np.abs(tail[:, :2]).max() < 1e-2
    assert np.all(tail[:, 2] == 0.0)


def test_expert_is_stateless_function_of_observation():
    rng = np.random.default_rng(7)
    obs, _, _ = scripted_episode(rng, 80)
    a1 = scripted_expert(obs[10])
    a2 = scripted_expert(obs[10])
    assert np.array_equal(a1, a2)
