"""Expert demonstrations from the shortest-path planner.

Each episode replays a minimal-length plan through the simulator and emits one
(observation, expert action) pair per step, so every recorded action is the
first action of a minimal successful plan from its state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from .config import Config
from .layout import RoomLayout
from .world import GridWorld, Observation

log = logging.getLogger(__name__)


@dataclass
class ExpertDataset:
    """Column-stacked samples; observation(i) rebuilds the i-th bundle."""
    visible: np.ndarray      # (N, C) uint8
    confidence: np.ndarray   # (N, C) float64
    bbox: np.ndarray         # (N, C, 4) float64
    depth: np.ndarray        # (N, R, R) float64
    ego: np.ndarray          # (N, K, K, C+1) uint8
    target: np.ndarray      # (N,) int64
    action: np.ndarray      # (N,) int64
    episode: np.ndarray     # (N,) int64, groups one trajectory
    step: np.ndarray        # (N,) int64, order within the trajectory
    pose: np.ndarray        # (N, 4) int64 provenance: x, y, heading, pitch
    layout_ids: List[str]   # per episode index
    optimal_len: np.ndarray  # (N,) int64, plan length of the episode

    def __len__(self) -> int:
        return int(self.action.shape[0])

    def observation(self, i: int) -> Observation:
        return Observation(self.visible[i], self.confidence[i], self.bbox[i],
                           self.depth[i], self.ego[i])

    def num_episodes(self) -> int:
        return len(self.layout_ids)

    def episode_slices(self) -> List[np.ndarray]:
        """Sample index arrays per episode, each in step order."""
        out = []
        for e in range(self.num_episodes()):
            idx = np.nonzero(self.episode == e)[0]
            out.append(idx[np.argsort(self.step[idx])])
        return out

    def save(self, path: Union[str, Path]) -> None:
        np.savez_compressed(
            path, visible=self.visible, confidence=self.confidence,
            bbox=self.bbox, depth=self.depth, ego=self.ego,
            target=self.target, action=self.action, episode=self.episode,
            step=self.step, pose=self.pose, optimal_len=self.optimal_len,
            layout_ids=np.array(self.layout_ids))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExpertDataset":
        z = np.load(path, allow_pickle=False)
        return cls(z["visible"], z["confidence"], z["bbox"], z["depth"],
                   z["ego"], z["target"], z["action"], z["episode"],
                   z["step"], z["pose"], [str(s) for s in z["layout_ids"]],
                   z["optimal_len"])


def generate_expert_dataset(layouts: Sequence[RoomLayout],
                            targets: Sequence[int],
                            episodes_per_layout: int, seed: int,
                            cfg: Config) -> ExpertDataset:
    """Deterministic expert rollouts over all layouts.

    Unreachable starts are skipped with a warning; every kept trajectory is
    verified to succeed in exactly its planned length.
    """
    rng = np.random.default_rng(seed)
    cols = {k: [] for k in ("visible", "confidence", "bbox", "depth", "ego",
                            "target", "action", "episode", "step", "pose",
                            "optimal_len")}
    layout_ids: List[str] = []
    episode_index = 0
    for layout in layouts:
        for _ in range(episodes_per_layout):
            target = int(targets[int(rng.integers(len(targets)))])
            env = GridWorld(layout, target, cfg)
            obs = env.reset(seed=int(rng.integers(2 ** 62)))
            plan = env.planner.plan(env.pose, target)
            if plan is None:
                log.warning("%s: skipping unreachable target %d from %s",
                            layout.layout_id, target, env.pose)
                continue
            for step_i, action in enumerate(plan):
                cols["visible"].append(obs.visible.copy())
                cols["confidence"].append(obs.confidence.copy())
                cols["bbox"].append(obs.bbox.copy())
                cols["depth"].append(obs.depth.copy())
                cols["ego"].append(obs.ego.copy())
                cols["target"].append(target)
                cols["action"].append(action)
                cols["episode"].append(episode_index)
                cols["step"].append(step_i)
                cols["pose"].append(env.pose.as_tuple())
                cols["optimal_len"].append(len(plan))
                obs, _, terminated, success = env.step(action)
            if not (terminated and success == 1):
                raise AssertionError(f"{layout.layout_id}: expert plan failed "
                                     f"for target {target}")
            layout_ids.append(layout.layout_id)
            episode_index += 1
    if episode_index == 0:
        raise RuntimeError("expert dataset generation produced no episodes")
    return ExpertDataset(
        np.stack(cols["visible"]), np.stack(cols["confidence"]),
        np.stack(cols["bbox"]), np.stack(cols["depth"]),
        np.stack(cols["ego"]), np.array(cols["target"], dtype=np.int64),
        np.array(cols["action"], dtype=np.int64),
        np.array(cols["episode"], dtype=np.int64),
        np.array(cols["step"], dtype=np.int64),
        np.array(cols["pose"], dtype=np.int64), layout_ids,
        np.array(cols["optimal_len"], dtype=np.int64))
