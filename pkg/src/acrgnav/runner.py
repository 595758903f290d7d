"""Episode runner and the evaluation policies (trained, random, expert)."""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from .config import Config
from .layout import RoomLayout
from .metrics import EpisodeTrace, EvalReport
from .network import NavModel
from .policy import select_action
from .world import DONE, GridWorld, TrajectoryLog

log = logging.getLogger(__name__)


class RandomPolicy:
    """Uniform action choice each step."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def begin_episode(self, env: GridWorld) -> None:
        pass

    def action(self, obs) -> int:
        return int(self.rng.integers(6))


class ExpertPolicy:
    """Replays the planner's minimal plan; optimal by construction."""

    def __init__(self):
        self._plan = None

    def begin_episode(self, env: GridWorld) -> None:
        self._plan = env.planner.plan(env.pose, env.target)

    def action(self, obs) -> int:
        if not self._plan:
            return DONE
        return self._plan.pop(0)


class ModelPolicy:
    """Greedy (or sampled) rollouts of a trained model."""

    def __init__(self, model: NavModel, mode: str = "greedy",
                 rng: Optional[np.random.Generator] = None):
        self.model = model
        self.mode = mode
        self.rng = rng
        self._lstm = None
        self._prev = None
        self._target = None

    def begin_episode(self, env: GridWorld) -> None:
        self._lstm = self.model.initial_lstm()
        self._prev = None
        self._target = env.target

    def action(self, obs) -> int:
        state = self.model.representation(obs, self._target)
        logits, _, self._lstm = self.model.policy_step(state, self._prev,
                                                       self._lstm)
        choice = select_action(logits.values, self.mode, self.rng)
        self._prev = choice
        return choice


def run_episodes(policy, layouts: Sequence[RoomLayout], targets: Sequence[int],
                 episodes: int, seed: int, cfg: Config,
                 step_log: Optional[TrajectoryLog] = None):
    """Rolls episodes with seeded layout/target/start draws.

    Returns (traces, excluded) where excluded counts unreachable-target
    episodes that were skipped rather than scored.
    """
    rng = np.random.default_rng(seed)
    traces = []
    excluded = 0
    produced = 0
    while produced < episodes:
        layout = layouts[int(rng.integers(len(layouts)))]
        target = int(targets[int(rng.integers(len(targets)))])
        env = GridWorld(layout, target, cfg)
        env.reset(seed=int(rng.integers(2 ** 62)))
        optimal = env.planner.optimal_action_count(env.pose, target)
        if optimal is None:
            excluded += 1
            log.warning("%s: excluded episode with unreachable target %d",
                        layout.layout_id, target)
            produced += 1
            continue
        start = env.pose.as_tuple()
        policy.begin_episode(env)
        obs = env.observe()
        actions = []
        rewards = []
        success = 0
        while not env.terminated:
            a = policy.action(obs)
            pose_before = env.pose
            obs, reward, terminated, s = env.step(a)
            actions.append(a)
            rewards.append(reward)
            if step_log is not None:
                step_log.append(pose_before, a, reward, terminated)
            if terminated:
                success = int(s)
        traces.append(EpisodeTrace(layout.layout_id, target, start, actions,
                                   rewards, success, optimal))
        produced += 1
    return traces, excluded


def evaluate(policy, layouts, targets, episodes, seed, cfg,
             step_log: Optional[TrajectoryLog] = None) -> EvalReport:
    traces, excluded = run_episodes(policy, layouts, targets, episodes, seed,
                                    cfg, step_log=step_log)
    return EvalReport(traces, excluded, cfg.fingerprint(), seed)


def make_policy(kind: str, cfg: Config, model: Optional[NavModel] = None,
                seed: int = 0):
    if kind == "random":
        return RandomPolicy(np.random.default_rng(seed))
    if kind == "expert":
        return ExpertPolicy()
    if kind == "trained":
        if model is None:
            raise ValueError("trained policy needs a model")
        return ModelPolicy(model, mode="greedy")
    raise ValueError(f"unknown policy kind {kind!r}")
