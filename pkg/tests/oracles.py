"""Independent test oracles, deliberately sharing no code with the package
paths they verify."""

from collections import deque

from acrgnav.config import Config
from acrgnav.world import GridWorld, Pose

_DIRS = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def bfs_moves(layout, state):
    """All pose successors under the five movement actions."""
    x, y, h, p = state
    _, blocked, *_ = layout.arrays()
    out = []
    dx, dy = _DIRS[h]
    nx, ny = x + dx, y + dy
    if 0 <= nx < layout.width and 0 <= ny < layout.height \
            and not blocked[ny, nx]:
        out.append((nx, ny, h, p))
    else:
        out.append((x, y, h, p))
    out.append((x, y, (h - 1) % 8, p))
    out.append((x, y, (h + 1) % 8, p))
    out.append((x, y, h, min(p + 1, 2)))
    out.append((x, y, h, max(p - 1, 0)))
    return out


def success_at(layout, target, state, cfg=None):
    env = GridWorld(layout, target, cfg or Config())
    env.place(Pose(*state))
    return env.success_now()


def bfs_optimal_actions(layout, start, target, cfg=None):
    """Minimal action count (Done included) by forward breadth-first
    enumeration over the pose graph; None when unreachable."""
    start = tuple(start)
    if success_at(layout, target, start, cfg):
        return 1
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        state, depth = frontier.popleft()
        for nxt in bfs_moves(layout, state):
            if nxt in seen:
                continue
            seen.add(nxt)
            if success_at(layout, target, nxt, cfg):
                return depth + 2
            frontier.append((nxt, depth + 1))
    return None
