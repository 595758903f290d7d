"""Geometry and search kernels for the gridworld.

The simulator's inner loops (ray casts, per-pose visibility, breadth-first
search over the pose graph) are compiled with numba when available. Setting
``ACRGNAV_NUMBA=0`` forces the interpreted path; both paths run the exact same
function bodies, so results are identical either way.

Conventions: cells are unit squares centered on integer (x, y); heading index
``h`` means an angle of ``45*h`` degrees measured from +x toward +y; pitch
index ``p`` in {0, 1, 2} maps to {-30, 0, +30} degrees. All distances here are
in cell units; metric conversion happens in the caller.
"""

import math
import os

import numpy as np

try:
    from numba import njit as _numba_njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    _HAVE_NUMBA = False

_FLAG = os.environ.get("ACRGNAV_NUMBA", "1").strip().lower()
NUMBA_ENABLED = _HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off")


def backend() -> str:
    """Name of the active kernel backend: "numba" or "numpy"."""
    return "numba" if NUMBA_ENABLED else "numpy"


def _jit(fn):
    if NUMBA_ENABLED:
        return _numba_njit(cache=True)(fn)
    return fn


N_HEADINGS = 8
N_PITCHES = 3
POSES_PER_CELL = N_HEADINGS * N_PITCHES
N_MOVE_ACTIONS = 5  # MoveAhead, RotateLeft, RotateRight, LookUp, LookDown

# heading index -> unit step on the 8-neighborhood
DIR_X = np.array([1, 1, 0, -1, -1, -1, 0, 1], dtype=np.int64)
DIR_Y = np.array([0, 1, 1, 1, 0, -1, -1, -1], dtype=np.int64)


@_jit
def wrap_angle(deg):
    # wraps into [-180, 180)
    return (deg + 180.0) % 360.0 - 180.0


@_jit
def _cell_of(v):
    # explicit half-up rounding so jitted and interpreted paths agree
    return int(math.floor(v + 0.5))


@_jit
def ray_clear(occluders, x0, y0, x1, y1):
    """True when no occluding cell lies strictly between the two centers."""
    dx = x1 - x0
    dy = y1 - y0
    steps = 4 * max(abs(dx), abs(dy))
    if steps <= 0:
        return True
    for k in range(1, steps):
        t = k / steps
        cx = _cell_of(x0 + t * dx)
        cy = _cell_of(y0 + t * dy)
        if (cx == x0 and cy == y0) or (cx == x1 and cy == y1):
            continue
        if occluders[cy, cx] != 0:
            return False
    return True


@_jit
def object_visibility(occluders, obj_x, obj_y, obj_height, agent_x, agent_y,
                      heading, pitch, fov_deg, max_range_cells):
    """Visibility flag, bearing (deg) and center distance (cells) per object.

    An object is visible when it is within range, inside the horizontal field
    of view, its height level is compatible with the camera pitch (low needs
    -30, high needs +30, mid works at any pitch), and the sight line is not
    blocked by a solid cell.
    """
    n = obj_x.shape[0]
    visible = np.zeros(n, np.uint8)
    bearing = np.zeros(n, np.float64)
    dist = np.zeros(n, np.float64)
    heading_deg = 45.0 * heading
    for i in range(n):
        dxc = float(obj_x[i] - agent_x)
        dyc = float(obj_y[i] - agent_y)
        d = math.sqrt(dxc * dxc + dyc * dyc)
        dist[i] = d
        if d <= 0.0 or d > max_range_cells:
            continue
        b = wrap_angle(math.degrees(math.atan2(dyc, dxc)) - heading_deg)
        bearing[i] = b
        if abs(b) > 0.5 * fov_deg:
            continue
        lvl = obj_height[i]
        if lvl == 0 and pitch != 0:
            continue
        if lvl == 2 and pitch != 2:
            continue
        if not ray_clear(occluders, agent_x, agent_y, obj_x[i], obj_y[i]):
            continue
        visible[i] = 1
    return visible, bearing, dist


@_jit
def depth_columns(solid, agent_x, agent_y, heading, fov_deg, n_cols,
                  max_range_cells):
    """Center-to-center distance (cells) to the first solid cell per column.

    Columns sweep the field of view left to right; rays march in quarter-cell
    steps and clamp to the maximum range when nothing is hit.
    """
    out = np.full(n_cols, max_range_cells, np.float64)
    heading_deg = 45.0 * heading
    grid_h = solid.shape[0]
    grid_w = solid.shape[1]
    for j in range(n_cols):
        rel = -0.5 * fov_deg + fov_deg * (j + 0.5) / n_cols
        ang = math.radians(heading_deg + rel)
        ux = math.cos(ang)
        uy = math.sin(ang)
        t = 0.25
        while t <= max_range_cells:
            cx = _cell_of(agent_x + t * ux)
            cy = _cell_of(agent_y + t * uy)
            if cx < 0 or cx >= grid_w or cy < 0 or cy >= grid_h:
                break
            if (cx != agent_x or cy != agent_y) and solid[cy, cx] != 0:
                ddx = float(cx - agent_x)
                ddy = float(cy - agent_y)
                d = math.sqrt(ddx * ddx + ddy * ddy)
                if d < max_range_cells:
                    out[j] = d
                break
            t += 0.25
    return out


@_jit
def ego_occupancy(walls, cat_grid, agent_x, agent_y, heading, size,
                  num_categories):
    """Egocentric occupancy patch, heading pointing up, agent at the center.

    Channels 0..C-1 mark object categories, channel C marks walls and
    out-of-bounds cells. 45-degree headings round sampled offsets to the
    nearest cell.
    """
    half = size // 2
    ang = math.radians(45.0 * heading)
    ux = math.cos(ang)
    uy = math.sin(ang)
    rx = -math.sin(ang)
    ry = math.cos(ang)
    out = np.zeros((size, size, num_categories + 1), np.uint8)
    grid_h = walls.shape[0]
    grid_w = walls.shape[1]
    for i in range(size):
        for j in range(size):
            fwd = float(half - i)
            lat = float(j - half)
            wx = _cell_of(agent_x + fwd * ux + lat * rx)
            wy = _cell_of(agent_y + fwd * uy + lat * ry)
            if wx < 0 or wx >= grid_w or wy < 0 or wy >= grid_h:
                out[i, j, num_categories] = 1
                continue
            if walls[wy, wx] != 0:
                out[i, j, num_categories] = 1
            c = cat_grid[wy, wx]
            if c >= 0:
                out[i, j, c] = 1
    return out


@_jit
def pose_success(occluders, obj_x, obj_y, obj_height, obj_cat, target,
                 x, y, heading, pitch, fov_deg, max_range_cells,
                 success_radius_cells):
    """Whether Done would succeed at this pose: some target instance is
    visible and strictly closer than the success radius."""
    heading_deg = 45.0 * heading
    for i in range(obj_x.shape[0]):
        if obj_cat[i] != target:
            continue
        dxc = float(obj_x[i] - x)
        dyc = float(obj_y[i] - y)
        d = math.sqrt(dxc * dxc + dyc * dyc)
        if d <= 0.0 or d >= success_radius_cells or d > max_range_cells:
            continue
        b = wrap_angle(math.degrees(math.atan2(dyc, dxc)) - heading_deg)
        if abs(b) > 0.5 * fov_deg:
            continue
        lvl = obj_height[i]
        if lvl == 0 and pitch != 0:
            continue
        if lvl == 2 and pitch != 2:
            continue
        if ray_clear(occluders, x, y, obj_x[i], obj_y[i]):
            return True
    return False


@_jit
def success_mask(occluders, blocked, obj_x, obj_y, obj_height, obj_cat, target,
                 width, height, fov_deg, max_range_cells,
                 success_radius_cells):
    """Success flag for every (cell, heading, pitch) pose; blocked cells 0."""
    n = width * height * POSES_PER_CELL
    mask = np.zeros(n, np.uint8)
    for y in range(height):
        for x in range(width):
            if blocked[y, x] != 0:
                continue
            for h in range(N_HEADINGS):
                for p in range(N_PITCHES):
                    if pose_success(occluders, obj_x, obj_y, obj_height, obj_cat,
                                    target, x, y, h, p, fov_deg,
                                    max_range_cells, success_radius_cells):
                        s = ((y * width + x) * N_HEADINGS + h) * N_PITCHES + p
                        mask[s] = 1
    return mask


@_jit
def apply_move(blocked, width, height, x, y, heading, pitch, action):
    """Pose after one non-Done action; blocked MoveAhead keeps the pose."""
    if action == 0:
        nx = x + DIR_X[heading]
        ny = y + DIR_Y[heading]
        if 0 <= nx < width and 0 <= ny < height and blocked[ny, nx] == 0:
            return nx, ny, heading, pitch
        return x, y, heading, pitch
    if action == 1:
        return x, y, (heading + N_HEADINGS - 1) % N_HEADINGS, pitch
    if action == 2:
        return x, y, (heading + 1) % N_HEADINGS, pitch
    if action == 3:
        return x, y, heading, min(pitch + 1, N_PITCHES - 1)
    return x, y, heading, max(pitch - 1, 0)


@_jit
def distance_field(blocked, succ, width, height):
    """Minimum count of non-Done actions from every pose to a success pose.

    Multi-source BFS over the reversed pose graph; unreachable poses get -1.
    The optimal episode length is this value plus one for the Done action.
    """
    n = width * height * POSES_PER_CELL
    nxt = np.full(n * N_MOVE_ACTIONS, -1, np.int32)
    for y in range(height):
        for x in range(width):
            if blocked[y, x] != 0:
                continue
            for h in range(N_HEADINGS):
                for p in range(N_PITCHES):
                    s = ((y * width + x) * N_HEADINGS + h) * N_PITCHES + p
                    for a in range(N_MOVE_ACTIONS):
                        nx, ny, nh, npp = apply_move(blocked, width, height,
                                                     x, y, h, p, a)
                        t = ((ny * width + nx) * N_HEADINGS + nh) * N_PITCHES + npp
                        nxt[s * N_MOVE_ACTIONS + a] = t

    indeg = np.zeros(n + 1, np.int32)
    for e in range(n * N_MOVE_ACTIONS):
        t = nxt[e]
        if t >= 0:
            indeg[t + 1] += 1
    for i in range(n):
        indeg[i + 1] += indeg[i]
    fill = indeg[:n].copy()
    pred = np.empty(indeg[n], np.int32)
    for s in range(n):
        for a in range(N_MOVE_ACTIONS):
            t = nxt[s * N_MOVE_ACTIONS + a]
            if t >= 0:
                pred[fill[t]] = s
                fill[t] += 1

    dist = np.full(n, -1, np.int32)
    queue = np.empty(n, np.int32)
    head = 0
    tail = 0
    for s in range(n):
        if succ[s] != 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        s = queue[head]
        head += 1
        nd = dist[s] + 1
        for k in range(indeg[s], indeg[s + 1]):
            ps = pred[k]
            if dist[ps] < 0:
                dist[ps] = nd
                queue[tail] = ps
                tail += 1
    return dist


def interpreted(fn):
    """Plain-python version of a kernel, for benchmarks and parity checks."""
    return getattr(fn, "py_func", fn)
