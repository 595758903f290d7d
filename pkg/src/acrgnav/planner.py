"""Shortest paths over the (cell, heading, pitch) pose graph.

Actions all cost one, so breadth-first search is the shortest-path-first
search here. The distance field counts non-Done actions to the nearest pose
where Done would succeed; optimal episode length adds one for Done itself.
Expert actions greedily descend the field with a fixed action-order
tie-break, which keeps generated demonstrations deterministic.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import kernels
from .config import Config
from .layout import RoomLayout

log = logging.getLogger(__name__)

# expert tie-break order: looks, then rotations, then MoveAhead. All minimal
# plans are equally valid; preferring camera alignment first keeps the target
# inside the field of view for most of the walk, which makes demonstrations
# far more predictable from single observations.
_MOVE_ACTIONS = (3, 4, 1, 2, 0)
_DONE = 5


class ShortestPathPlanner:
    def __init__(self, layout: RoomLayout, config: Config):
        self.layout = layout
        self.config = config
        self._fields: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    @classmethod
    def for_layout(cls, layout: RoomLayout, config: Config) -> "ShortestPathPlanner":
        key = ("planner", config.fingerprint())
        if key not in layout._cache:
            layout._cache[key] = cls(layout, config)
        return layout._cache[key]

    def state_index(self, pose) -> int:
        x, y, h, p = pose if isinstance(pose, tuple) else pose.as_tuple()
        return ((y * self.layout.width + x) * kernels.N_HEADINGS + h) \
            * kernels.N_PITCHES + p

    def pose_of(self, state: int) -> Tuple[int, int, int, int]:
        p = state % kernels.N_PITCHES
        state //= kernels.N_PITCHES
        h = state % kernels.N_HEADINGS
        state //= kernels.N_HEADINGS
        x = state % self.layout.width
        y = state // self.layout.width
        return (x, y, h, p)

    def field(self, target: int) -> Tuple[np.ndarray, np.ndarray]:
        """(distance, success mask) over all pose indices, cached per target."""
        if target not in self._fields:
            cfg = self.config
            walls, blocked, solid, ox, oy, oh, ocat, _ = self.layout.arrays()
            succ = kernels.success_mask(
                walls, blocked, ox, oy, oh, ocat, target,
                self.layout.width, self.layout.height, cfg.fov_degrees,
                cfg.max_range_cells, cfg.success_radius_cells)
            dist = kernels.distance_field(blocked, succ, self.layout.width,
                                          self.layout.height)
            self._fields[target] = (dist, succ)
        return self._fields[target]

    def valid_starts(self, target: int) -> np.ndarray:
        """Pose indices that are on free cells and not already successful."""
        dist, succ = self.field(target)
        _, blocked, *_ = self.layout.arrays()
        n = self.layout.width * self.layout.height * kernels.POSES_PER_CELL
        states = np.arange(n, dtype=np.int64)
        cells = states // kernels.POSES_PER_CELL
        xs = cells % self.layout.width
        ys = cells // self.layout.width
        free = blocked[ys, xs] == 0
        return states[free & (succ == 0)]

    def optimal_action_count(self, pose, target: int) -> Optional[int]:
        """Minimum actions to finish successfully (Done included); None if
        the target cannot be reached from this pose."""
        dist, _ = self.field(target)
        d = int(dist[self.state_index(pose)])
        if d < 0:
            log.warning("%s: target %d unreachable from pose %s",
                        self.layout.layout_id, target, pose)
            return None
        return d + 1

    def expert_action(self, pose, target: int) -> Optional[int]:
        """First action of a minimal-length successful plan from this pose."""
        dist, succ = self.field(target)
        s = self.state_index(pose)
        if succ[s]:
            return _DONE
        d = int(dist[s])
        if d < 0:
            return None
        x, y, h, p = pose if isinstance(pose, tuple) else pose.as_tuple()
        _, blocked, *_ = self.layout.arrays()
        for a in _MOVE_ACTIONS:
            nx, ny, nh, npp = kernels.apply_move(
                blocked, self.layout.width, self.layout.height, x, y, h, p, a)
            ns = ((ny * self.layout.width + nx) * kernels.N_HEADINGS + nh) \
                * kernels.N_PITCHES + npp
            if dist[ns] == d - 1:
                return a
        raise AssertionError("distance field inconsistent: no descending move")

    def plan(self, pose, target: int) -> Optional[List[int]]:
        """Full minimal action sequence ending in Done, or None if unreachable."""
        dist, _ = self.field(target)
        s = self.state_index(pose)
        if dist[s] < 0:
            return None
        actions: List[int] = []
        cur = pose if isinstance(pose, tuple) else pose.as_tuple()
        for _ in range(int(dist[s]) + 1):
            a = self.expert_action(cur, target)
            actions.append(a)
            if a == _DONE:
                return actions
            x, y, h, p = cur
            _, blocked, *_ = self.layout.arrays()
            cur = tuple(int(v) for v in kernels.apply_move(
                blocked, self.layout.width, self.layout.height, x, y, h, p, a))
        raise AssertionError("plan exceeded its own optimal length")
