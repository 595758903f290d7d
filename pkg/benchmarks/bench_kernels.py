"""Benchmark the simulator kernels: numba backend vs pure-numpy fallback.

Runs the same workload twice in subprocesses, once with ACRGNAV_NUMBA=1 and
once with ACRGNAV_NUMBA=0, so each side gets a clean import (the backend is
chosen at import time). Numba JIT compilation happens before timing starts.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys

_WORKLOAD = r"""
import json
import time

import numpy as np

from acrgnav import kernels
from acrgnav.config import Config
from acrgnav.layout import random_layout
from acrgnav.planner import ShortestPathPlanner
from acrgnav.world import GridWorld

REPEATS = {repeats}

cfg = Config()
rng = np.random.default_rng(0)
layout = random_layout(rng, "bench")
walls, blocked, solid, ox, oy, oh, ocat, cat_grid = layout.arrays()

def timed(fn, n):
    fn()  # warm up (and JIT-compile on the numba side)
    t0 = time.perf_counter()
    for _ in range(n):
        fn()
    return (time.perf_counter() - t0) / n

results = {{"backend": kernels.backend()}}
results["object_visibility_us"] = 1e6 * timed(
    lambda: kernels.object_visibility(walls, ox, oy, oh, 2, 2, 1, 1,
                                      cfg.fov_degrees, cfg.max_range_cells),
    200 * REPEATS)
results["depth_columns_us"] = 1e6 * timed(
    lambda: kernels.depth_columns(solid, 2, 2, 1, cfg.fov_degrees,
                                  cfg.depth_resolution, cfg.max_range_cells),
    200 * REPEATS)
results["ego_occupancy_us"] = 1e6 * timed(
    lambda: kernels.ego_occupancy(walls, cat_grid, 2, 2, 3, cfg.ego_size,
                                  cfg.num_categories),
    200 * REPEATS)

succ = kernels.success_mask(walls, blocked, ox, oy, oh, ocat, 0,
                            layout.width, layout.height, cfg.fov_degrees,
                            cfg.max_range_cells, cfg.success_radius_cells)
results["success_mask_us"] = 1e6 * timed(
    lambda: kernels.success_mask(walls, blocked, ox, oy, oh, ocat, 0,
                                 layout.width, layout.height, cfg.fov_degrees,
                                 cfg.max_range_cells,
                                 cfg.success_radius_cells),
    5 * REPEATS)
results["distance_field_us"] = 1e6 * timed(
    lambda: kernels.distance_field(blocked, succ, layout.width,
                                   layout.height),
    5 * REPEATS)

env = GridWorld(layout, 0, cfg)
env.reset(seed=1)
actions = iter([])
def env_step():
    if env.terminated:
        env.reset(seed=2)
    env.step(1)
results["env_step_us"] = 1e6 * timed(env_step, 100 * REPEATS)

print(json.dumps(results))
"""

KERNELS = ("object_visibility", "depth_columns", "ego_occupancy",
           "success_mask", "distance_field", "env_step")


def run_backend(flag: str, repeats: int) -> dict:
    env = dict(os.environ, ACRGNAV_NUMBA=flag)
    code = _WORKLOAD.format(repeats=repeats)
    proc = subprocess.run([sys.executable, "-c", code], env=env,
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(proc.stderr)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=1,
                        help="workload repetition multiplier")
    args = parser.parse_args()

    print("timing numba backend...")
    jit = run_backend("1", args.repeats)
    if jit["backend"] != "numba":
        print("warning: numba unavailable, both columns are the numpy path")
    print("timing numpy fallback...")
    plain = run_backend("0", args.repeats)

    header = f"{'kernel':<20} {'numba (us)':>12} {'numpy (us)':>12} {'speedup':>9}"
    print()
    print(header)
    print("-" * len(header))
    for name in KERNELS:
        a = jit[f"{name}_us"]
        b = plain[f"{name}_us"]
        print(f"{name:<20} {a:>12.1f} {b:>12.1f} {b / a:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
