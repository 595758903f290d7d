"""Deterministic gridworld simulator: kinematics, observations, reward.

The agent lives on 0.25 m cells with 8 headings (45 degree turns) and 3
camera pitches (30 degree looks). Every action costs the step penalty; a
successful Done adds the full success reward; episodes cap at the maximum
length. Observations bundle per-category detections, a depth map, and an
egocentric occupancy patch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from . import kernels
from .config import Config
from .layout import RoomLayout
from .planner import ShortestPathPlanner

MOVE_AHEAD, ROTATE_LEFT, ROTATE_RIGHT, LOOK_UP, LOOK_DOWN, DONE = range(6)
ACTION_NAMES = ("MoveAhead", "RotateLeft", "RotateRight", "LookUp",
                "LookDown", "Done")
NUM_ACTIONS = 6
PITCH_DEGREES = (-30, 0, 30)


@dataclass(frozen=True)
class Pose:
    x: int
    y: int
    heading: int  # 0..7, angle = 45 * heading degrees
    pitch: int    # 0..2 indexing PITCH_DEGREES

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.x, self.y, self.heading, self.pitch)


@dataclass
class Observation:
    """Per-step sensory bundle.

    visible/confidence/bbox have one slot per category (best instance wins);
    invisible slots carry confidence 0 and the default all-zero box. depth is
    metric meters, ego is the egocentric {0,1} occupancy patch.
    """
    visible: np.ndarray      # (C,) uint8
    confidence: np.ndarray   # (C,) float64
    bbox: np.ndarray         # (C, 4) float64, [h1, y1, h2, y2] in [0, 1]
    depth: np.ndarray        # (R, R) float64 meters
    ego: np.ndarray          # (K, K, C+1) uint8

    def h_center(self) -> np.ndarray:
        return (self.bbox[:, 0] + self.bbox[:, 2]) / 2.0

    def v_center(self) -> np.ndarray:
        return (self.bbox[:, 1] + self.bbox[:, 3]) / 2.0


def bbox_mean_depth(depth: np.ndarray, bbox: np.ndarray) -> float:
    """Mean depth over the pixels covered by a normalized bounding box."""
    res = depth.shape[0]
    h1, y1, h2, y2 = bbox
    c0 = min(max(int(math.floor(h1 * res)), 0), res - 1)
    c1 = min(max(int(math.ceil(h2 * res)) - 1, c0), res - 1)
    r0 = min(max(int(math.floor(y1 * res)), 0), res - 1)
    r1 = min(max(int(math.ceil(y2 * res)) - 1, r0), res - 1)
    return float(depth[r0:r1 + 1, c0:c1 + 1].mean())


class GridWorld:
    """One episode-at-a-time world for a fixed (layout, target) pair."""

    def __init__(self, layout: RoomLayout, target: int, config: Config):
        if not any(o.category == target for o in layout.objects):
            raise ValueError(f"target category {target} not present in "
                             f"layout {layout.layout_id}")
        self.layout = layout
        self.target = int(target)
        self.config = config
        self.planner = ShortestPathPlanner.for_layout(layout, config)
        self._pose: Optional[Pose] = None
        self._steps = 0
        self._terminated = True
        self._rng = np.random.default_rng(0)

    @property
    def pose(self) -> Pose:
        if self._pose is None:
            raise RuntimeError("world not reset yet")
        return self._pose

    @property
    def steps(self) -> int:
        return self._steps

    @property
    def terminated(self) -> bool:
        return self._terminated

    def reset(self, seed: int) -> Observation:
        """Uniform draw over valid, not-already-successful start poses."""
        starts = self.planner.valid_starts(self.target)
        if len(starts) == 0:
            raise RuntimeError(f"{self.layout.layout_id}: no valid start state "
                               f"for target {self.target}")
        self._rng = np.random.default_rng(seed)
        state = int(starts[int(self._rng.integers(len(starts)))])
        self._pose = Pose(*self.planner.pose_of(state))
        self._steps = 0
        self._terminated = False
        return self.observe()

    def place(self, pose: Pose) -> Observation:
        """Starts an episode at an explicit pose (tests and inspection)."""
        _, blocked, *_ = self.layout.arrays()
        if blocked[pose.y, pose.x]:
            raise ValueError(f"pose {pose} sits on a blocked cell")
        self._pose = pose
        self._steps = 0
        self._terminated = False
        return self.observe()

    def success_now(self) -> bool:
        """Success predicate at the current pose (Done is handled by step)."""
        walls, blocked, solid, ox, oy, oh, ocat, _ = self.layout.arrays()
        p = self.pose
        return bool(kernels.pose_success(
            walls, ox, oy, oh, ocat, self.target, p.x, p.y, p.heading,
            p.pitch, self.config.fov_degrees, self.config.max_range_cells,
            self.config.success_radius_cells))

    def step(self, action: int):
        """Applies one action; returns (obs, reward, terminated, success).

        success is None while the episode continues, else 0/1.
        """
        if self._terminated:
            raise RuntimeError("step() on a terminated episode")
        if not 0 <= action < NUM_ACTIONS:
            raise ValueError(f"unknown action {action}")
        reward = self.config.step_penalty
        success: Optional[int] = None
        if action == DONE:
            self._terminated = True
            success = 1 if self.success_now() else 0
            if success:
                reward += self.config.success_reward
        else:
            _, blocked, *_ = self.layout.arrays()
            p = self._pose
            nx, ny, nh, npitch = kernels.apply_move(
                blocked, self.layout.width, self.layout.height,
                p.x, p.y, p.heading, p.pitch, action)
            self._pose = Pose(int(nx), int(ny), int(nh), int(npitch))
        self._steps += 1
        if not self._terminated and self._steps >= self.config.max_episode_len:
            self._terminated = True
            success = 0
        return self.observe(), reward, self._terminated, success

    def observe(self) -> Observation:
        cfg = self.config
        walls, blocked, solid, ox, oy, oh, ocat, cat_grid = self.layout.arrays()
        p = self.pose
        n_cat = cfg.num_categories

        vis, bearing, dist = kernels.object_visibility(
            walls, ox, oy, oh, p.x, p.y, p.heading, p.pitch,
            cfg.fov_degrees, cfg.max_range_cells)
        dist_m = dist * cfg.cell_meters
        conf = np.where(vis == 1, 1.0 - dist_m / cfg.max_range_meters, 0.0)
        if cfg.confidence_noise > 0.0:
            noise = self._rng.normal(0.0, cfg.confidence_noise, len(conf))
            conf = np.where(vis == 1, np.clip(conf + noise, 0.0, 1.0), 0.0)

        visible = np.zeros(n_cat, dtype=np.uint8)
        confidence = np.zeros(n_cat, dtype=np.float64)
        bbox = np.zeros((n_cat, 4), dtype=np.float64)
        for c in range(n_cat):
            idxs = np.nonzero((ocat == c) & (vis == 1))[0]
            if len(idxs) == 0:
                continue
            best = int(idxs[np.argmax(conf[idxs])])
            visible[c] = 1
            confidence[c] = conf[best]
            bbox[c] = self._bbox_for(bearing[best], dist_m[best], int(oh[best]))

        cols = kernels.depth_columns(
            solid, p.x, p.y, p.heading, cfg.fov_degrees,
            cfg.depth_resolution, cfg.max_range_cells)
        pitch_scale = 1.0 / math.cos(math.radians(PITCH_DEGREES[p.pitch]))
        row = np.minimum(cols * cfg.cell_meters * pitch_scale,
                         cfg.max_range_meters)
        depth = np.tile(row, (cfg.depth_resolution, 1))

        ego = kernels.ego_occupancy(walls, cat_grid, p.x, p.y, p.heading,
                                    cfg.ego_size, n_cat)
        return Observation(visible, confidence, bbox, depth, ego)

    def _bbox_for(self, bearing: float, dist_m: float, height_level: int) -> np.ndarray:
        cfg = self.config
        hc = 0.5 + bearing / cfg.fov_degrees
        width = min(max(0.125 / max(dist_m, 1e-9), 0.02), 0.5)
        v_base = (0.75, 0.5, 0.25)[height_level]
        vc = v_base + (PITCH_DEGREES[self.pose.pitch] / 30.0) * 0.25
        vh = min(max(0.15 / max(dist_m, 1e-9), 0.02), 0.5)
        h1 = min(max(hc - width / 2.0, 0.0), 1.0)
        h2 = min(max(hc + width / 2.0, 0.0), 1.0)
        y1 = min(max(vc - vh / 2.0, 0.0), 1.0)
        y2 = min(max(vc + vh / 2.0, 0.0), 1.0)
        return np.array([h1, y1, h2, y2])


def random_observation(cfg: Config, rng: np.random.Generator,
                       visible_prob: float = 0.5) -> Observation:
    """Synthetic observation with valid invariants, for gradient checks and
    dead-parameter probes that should not depend on a particular layout."""
    c = cfg.num_categories
    res = cfg.depth_resolution
    visible = (rng.random(c) < visible_prob).astype(np.uint8)
    confidence = np.where(visible == 1, rng.uniform(0.05, 1.0, c), 0.0)
    bbox = np.zeros((c, 4))
    for i in range(c):
        if not visible[i]:
            continue
        hc, vc = rng.uniform(0.1, 0.9, 2)
        w, h = rng.uniform(0.02, 0.3, 2)
        bbox[i] = [max(hc - w, 0.0), max(vc - h, 0.0),
                   min(hc + w, 1.0), min(vc + h, 1.0)]
    depth = rng.uniform(0.25, cfg.max_range_meters, (res, res))
    ego = (rng.random((cfg.ego_size, cfg.ego_size, c + 1)) < 0.2).astype(np.uint8)
    return Observation(visible, confidence, bbox, depth, ego)


class TrajectoryLog:
    """Append-only line-delimited log of per-step records."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, pose: Pose, action: int, reward: float,
               terminated: bool) -> None:
        rec = {"x": pose.x, "y": pose.y, "heading": pose.heading,
               "pitch": pose.pitch, "action": ACTION_NAMES[action],
               "reward": reward, "terminated": terminated}
        self._fh.write(json.dumps(rec) + "\n")

    def close(self) -> None:
        self._fh.flush()
        self._fh.close()
