"""Point-mass pick-and-place environment and its scripted expert.

A 2D double-integrator "hand" must pick up an object and carry it into a
goal region. Actions are [ax, ay, grip] where ax/ay are accelerations and
grip >= 0.5 commands the gripper closed. The object attaches only if the
gripper closes while the hand is within grasp radius; success requires the
object released inside the goal region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OBS_DIM = 9  # px, py, vx, vy, ox, oy, gx, gy, grip
ACTION_DIM = 3  # ax, ay, grip command


@dataclass
class ToyEnvConfig:
    dt: float = 0.1
    a_max: float = 1.0
    v_max: float = 0.4
    grasp_radius: float = 0.12
    goal_radius: float = 0.08
    max_steps: int = 200


class ToyEnv:
    """Deterministic double-integrator pick-and-place task.

    All randomness lives in `reset(rng)`; `step` is a pure function of the
    current state and action.
    """

    def __init__(self, config: ToyEnvConfig | None = None):
        self.config = config or ToyEnvConfig()
        self._state_ready = False

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.p = rng.uniform([0.1, 0.1], [0.35, 0.35])
        self.v = np.zeros(2)
        self.obj = rng.uniform([0.55, 0.1], [0.9, 0.45])
        self.goal = rng.uniform([0.55, 0.65], [0.9, 0.9])
        self.grip = 0.0
        self.attached = False
        self._state_ready = True
        return self.observe()

    def observe(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.obj, self.goal, [self.grip]])

    def step(self, action: np.ndarray) -> tuple[np.ndarray, bool]:
        """Advance one step; returns (observation, success)."""
        assert self._state_ready, "call reset() first"
        cfg = self.config
        a = np.clip(np.asarray(action, dtype=float)[:2], -cfg.a_max, cfg.a_max)
        grip_cmd = 1.0 if float(action[2]) >= 0.5 else 0.0

        self.v = np.clip(self.v + a * cfg.dt, -cfg.v_max, cfg.v_max)
        self.p = np.clip(self.p + self.v * cfg.dt, 0.0, 1.0)

        if grip_cmd == 1.0:
            # a closed gripper holds the object whenever it passes near enough
            if not self.attached and np.linalg.norm(self.p - self.obj) <= cfg.grasp_radius:
                self.attached = True
        else:
            self.attached = False
        self.grip = grip_cmd

        if self.attached:
            self.obj = self.p.copy()

        success = (
            not self.attached
            and self.grip == 0.0
            and np.linalg.norm(self.obj - self.goal) <= cfg.goal_radius
        )
        return self.observe(), bool(success)


def scripted_expert(obs: np.ndarray, config: ToyEnvConfig | None = None) -> np.ndarray:
    """Stateless reach -> grasp -> transport -> release controller.

    Phase is inferred from the observation alone: carrying is detected by a
    closed gripper co-located with the object, so the controller can be
    replayed from recorded observations. Paths arc with a curvature keyed to
    the scene layout, giving each episode a distinct fine trajectory shape on
    top of the shared reach/carry structure.
    """
    cfg = config or ToyEnvConfig()
    p, v = obs[0:2], obs[2:4]
    obj, goal = obs[4:6], obs[6:8]
    grip = obs[8]
    kp, kd = 4.0, 3.0
    curve = 0.30 * np.sin(29.0 * obj[0] + 47.0 * obj[1] + 31.0 * goal[0] + 17.0 * goal[1])

    def pd(target: np.ndarray) -> np.ndarray:
        delta = target - p
        d = np.linalg.norm(delta)
        if d > 1e-12:
            # detour shrinks with distance, so the controller still converges
            target = target + curve * d * np.array([-delta[1], delta[0]]) / d
        return np.clip(kp * (target - p) - kd * v, -cfg.a_max, cfg.a_max)

    carrying = grip >= 0.5 and np.linalg.norm(p - obj) < 1e-9
    placed = not carrying and np.linalg.norm(obj - goal) <= 0.9 * cfg.goal_radius

    if placed:
        return np.array([*np.clip(-kd * v, -cfg.a_max, cfg.a_max), 0.0])
    if carrying:
        settled = np.linalg.norm(p - goal) <= 0.4 * cfg.goal_radius
        return np.array([*pd(goal), 0.0 if settled else 1.0])
    if grip >= 0.5:
        # closed on air: reopen and retry the approach
        return np.array([*pd(obj), 0.0])
    near = np.linalg.norm(p - obj) <= 0.5 * cfg.grasp_radius
    slow = np.linalg.norm(v) <= 0.5 * cfg.v_max
    if near and slow:
        return np.array([*pd(obj), 1.0])  # close
    return np.array([*pd(obj), 0.0])


def scripted_episode(
    rng: np.random.Generator, length: int, config: ToyEnvConfig | None = None
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Run the expert for exactly `length` steps.

    Returns (observations, actions, success) with observations[t] the state
    the controller saw before actions[t]. After task completion the expert
    idles, so trailing actions decay toward zero.
    """
    env = ToyEnv(config)
    obs = env.reset(rng)
    observations = np.empty((length, OBS_DIM))
    actions = np.empty((length, ACTION_DIM))
    success = False
    for t in range(length):
        act = scripted_expert(obs, env.config)
        observations[t] = obs
        actions[t] = act
        obs, ok = env.step(act)
        success = success or ok
    return observations, actions, success
