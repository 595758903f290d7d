"""Room layouts: grid of walls plus placed objects, with a text file format.

The file format is one char per cell ('#' wall, '.' floor, letters for
objects) plus a header table mapping object chars to category and height
level. Object cells are impassable to the agent and register as surfaces in
the depth map, but only wall cells occlude sight lines (furniture does not
hide things behind it).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

log = logging.getLogger(__name__)

HEIGHT_NAMES = ("low", "mid", "high")
HEIGHT_LOW, HEIGHT_MID, HEIGHT_HIGH = 0, 1, 2

_OBJECT_CHARS = ("ABCDEFGHIJKLMNOPQRSTUVWXYZ"
                 "abcdefghijklmnopqrstuvwxyz0123456789")


@dataclass(frozen=True)
class PlacedObject:
    category: int
    x: int
    y: int
    height: int  # index into HEIGHT_NAMES


@dataclass
class RoomLayout:
    layout_id: str
    walls: np.ndarray  # (H, W) uint8
    objects: List[PlacedObject]
    num_categories: int = 16
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def height(self) -> int:
        return int(self.walls.shape[0])

    @property
    def width(self) -> int:
        return int(self.walls.shape[1])

    def validate(self, required_categories: Sequence[int] = ()) -> "RoomLayout":
        if self.width < 8 or self.height < 8:
            raise ValueError(f"{self.layout_id}: grid must be at least 8x8, "
                             f"got {self.width}x{self.height}")
        seen_cells = set()
        present = set()
        for obj in self.objects:
            if not (0 <= obj.x < self.width and 0 <= obj.y < self.height):
                raise ValueError(f"{self.layout_id}: object outside grid at "
                                 f"({obj.x}, {obj.y})")
            if self.walls[obj.y, obj.x]:
                raise ValueError(f"{self.layout_id}: object on a wall cell at "
                                 f"({obj.x}, {obj.y})")
            if (obj.x, obj.y) in seen_cells:
                raise ValueError(f"{self.layout_id}: two objects share cell "
                                 f"({obj.x}, {obj.y})")
            seen_cells.add((obj.x, obj.y))
            if not 0 <= obj.category < self.num_categories:
                raise ValueError(f"{self.layout_id}: category {obj.category} "
                                 f"outside [0, {self.num_categories})")
            if obj.height not in (0, 1, 2):
                raise ValueError(f"{self.layout_id}: bad height level {obj.height}")
            present.add(obj.category)
        missing = sorted(set(required_categories) - present)
        if missing:
            raise ValueError(f"{self.layout_id}: missing required target "
                             f"categories {missing}")
        return self

    def arrays(self):
        """Cached kernel-facing arrays.

        Returns (walls, blocked, solid, obj_x, obj_y, obj_height, obj_cat,
        cat_grid): walls occlude sight lines, blocked (walls plus objects)
        stops movement, solid (same cells as blocked) are the surfaces depth
        rays hit.
        """
        if "arrays" not in self._cache:
            walls = np.ascontiguousarray(self.walls, dtype=np.uint8)
            blocked = walls.copy()
            cat_grid = np.full((self.height, self.width), -1, dtype=np.int16)
            n = len(self.objects)
            obj_x = np.zeros(n, dtype=np.int64)
            obj_y = np.zeros(n, dtype=np.int64)
            obj_h = np.zeros(n, dtype=np.int64)
            obj_cat = np.zeros(n, dtype=np.int64)
            for i, obj in enumerate(self.objects):
                obj_x[i], obj_y[i] = obj.x, obj.y
                obj_h[i], obj_cat[i] = obj.height, obj.category
                blocked[obj.y, obj.x] = 1
                cat_grid[obj.y, obj.x] = obj.category
            solid = blocked
            self._cache["arrays"] = (walls, blocked, solid, obj_x, obj_y,
                                     obj_h, obj_cat, cat_grid)
        return self._cache["arrays"]

    def free_cells(self) -> np.ndarray:
        """(n, 2) array of (x, y) cells the agent may occupy."""
        _, blocked, *_ = self.arrays()
        ys, xs = np.nonzero(blocked == 0)
        return np.stack([xs, ys], axis=1)


def save_layout(path: Union[str, Path], layout: RoomLayout) -> None:
    if len(layout.objects) > len(_OBJECT_CHARS):
        raise ValueError(f"{layout.layout_id}: too many objects for the text format")
    lines = ["# acrgnav layout v1",
             f"id: {layout.layout_id}",
             f"categories: {layout.num_categories}",
             "objects:"]
    char_at = {}
    for i, obj in enumerate(layout.objects):
        ch = _OBJECT_CHARS[i]
        char_at[(obj.x, obj.y)] = ch
        lines.append(f"{ch} {obj.category} {HEIGHT_NAMES[obj.height]}")
    lines.append("grid:")
    for y in range(layout.height):
        row = []
        for x in range(layout.width):
            if (x, y) in char_at:
                row.append(char_at[(x, y)])
            elif layout.walls[y, x]:
                row.append("#")
            else:
                row.append(".")
        lines.append("".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_layout(path: Union[str, Path]) -> RoomLayout:
    text = Path(path).read_text()
    lines = [ln.rstrip("\n") for ln in text.splitlines()]
    if not lines or not lines[0].startswith("# acrgnav layout v1"):
        raise ValueError(f"{path}: missing layout format header")
    layout_id = None
    num_categories = None
    obj_table: Dict[str, Tuple[int, int]] = {}
    grid_rows: List[str] = []
    section = "header"
    for ln in lines[1:]:
        if not ln.strip() and section != "grid":
            continue
        if section == "header":
            if ln.startswith("id:"):
                layout_id = ln.split(":", 1)[1].strip()
            elif ln.startswith("categories:"):
                num_categories = int(ln.split(":", 1)[1].strip())
            elif ln.strip() == "objects:":
                section = "objects"
            else:
                raise ValueError(f"{path}: unexpected header line {ln!r}")
        elif section == "objects":
            if ln.strip() == "grid:":
                section = "grid"
                continue
            parts = ln.split()
            if len(parts) != 3:
                raise ValueError(f"{path}: bad object line {ln!r}")
            ch, cat, height_name = parts
            if height_name not in HEIGHT_NAMES:
                raise ValueError(f"{path}: bad height {height_name!r}")
            obj_table[ch] = (int(cat), HEIGHT_NAMES.index(height_name))
        else:
            if ln.strip():
                grid_rows.append(ln)
    if layout_id is None or num_categories is None or not grid_rows:
        raise ValueError(f"{path}: incomplete layout file")
    width = len(grid_rows[0])
    if any(len(r) != width for r in grid_rows):
        raise ValueError(f"{path}: ragged grid rows")
    walls = np.zeros((len(grid_rows), width), dtype=np.uint8)
    objects: List[PlacedObject] = []
    for y, row in enumerate(grid_rows):
        for x, ch in enumerate(row):
            if ch == "#":
                walls[y, x] = 1
            elif ch == ".":
                continue
            elif ch in obj_table:
                cat, height = obj_table[ch]
                objects.append(PlacedObject(cat, x, y, height))
            else:
                raise ValueError(f"{path}: unknown grid char {ch!r} at ({x}, {y})")
    return RoomLayout(layout_id, walls, objects,
                      num_categories=num_categories).validate()


def _connected(blocked: np.ndarray) -> bool:
    """All non-blocked cells mutually reachable over the 8-neighborhood."""
    free = np.argwhere(blocked == 0)
    if len(free) == 0:
        return False
    seen = np.zeros_like(blocked, dtype=bool)
    stack = [(int(free[0][0]), int(free[0][1]))]
    seen[free[0][0], free[0][1]] = True
    h, w = blocked.shape
    while stack:
        y, x = stack.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and not seen[ny, nx] \
                        and blocked[ny, nx] == 0:
                    seen[ny, nx] = True
                    stack.append((ny, nx))
    return bool(seen[blocked == 0].all())


def random_layout(rng: np.random.Generator, layout_id: str, width: int = 10,
                  height: int = 10, num_categories: int = 16,
                  target_categories: Sequence[int] = (0, 1, 2, 3),
                  num_distractors: int = 6, num_wall_cells: int = 3,
                  target_mid_prob: float = 1.0,
                  max_attempts: int = 200) -> RoomLayout:
    """Bordered random room with every target category placed at least once.

    Retries until the free space is connected, so any start can reach any
    object's neighborhood. Target instances default to mid height (visible
    at any camera pitch: low or high targets force a pitch hunt that
    dominates failures on unseen rooms); distractor heights stay uniform so
    the pitch mechanics are still exercised.
    """
    for _ in range(max_attempts):
        walls = np.zeros((height, width), dtype=np.uint8)
        walls[0, :] = walls[-1, :] = 1
        walls[:, 0] = walls[:, -1] = 1
        interior = [(x, y) for y in range(1, height - 1)
                    for x in range(1, width - 1)]
        for _ in range(num_wall_cells):
            x, y = interior[rng.integers(len(interior))]
            walls[y, x] = 1

        free = [(x, y) for (x, y) in interior if not walls[y, x]]
        n_objects = len(target_categories) + num_distractors
        if len(free) < n_objects + 8:
            continue
        picks = rng.choice(len(free), size=n_objects, replace=False)
        cells = [free[int(i)] for i in picks]
        categories = list(target_categories)
        other = [c for c in range(num_categories) if c not in target_categories]
        for _ in range(num_distractors):
            pool = other if other else list(range(num_categories))
            categories.append(int(pool[rng.integers(len(pool))]))
        objects = []
        for cat, (x, y) in zip(categories, cells):
            if cat in target_categories and rng.random() < target_mid_prob:
                level = HEIGHT_MID
            else:
                level = int(rng.integers(3))
            objects.append(PlacedObject(cat, x, y, level))

        blocked = walls.copy()
        for obj in objects:
            blocked[obj.y, obj.x] = 1
        if not _connected(blocked):
            continue
        layout = RoomLayout(layout_id, walls, objects,
                            num_categories=num_categories)
        try:
            layout.validate(required_categories=target_categories)
        except ValueError:
            continue
        return layout
    raise RuntimeError(f"could not generate a connected layout after "
                       f"{max_attempts} attempts")


def generate_suite(out_dir: Union[str, Path], num_train: int, num_test: int,
                   seed: int, **layout_kwargs) -> dict:
    """Writes train/test layout files plus a suite manifest; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    targets = list(layout_kwargs.get("target_categories", (0, 1, 2, 3)))
    manifest = {"version": 1, "seed": seed, "target_categories": targets,
                "train": [], "test": []}
    for split, count in (("train", num_train), ("test", num_test)):
        for i in range(count):
            layout = random_layout(rng, f"{split}_{i:02d}", **layout_kwargs)
            fname = f"{split}_{i:02d}.layout"
            save_layout(out / fname, layout)
            manifest[split].append(fname)
    import json
    (out / "suite.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def load_suite(suite_dir: Union[str, Path]):
    """Loads a generated suite: (train layouts, test layouts, target categories)."""
    import json
    suite_dir = Path(suite_dir)
    manifest = json.loads((suite_dir / "suite.json").read_text())
    if manifest.get("version") != 1:
        raise ValueError(f"{suite_dir}: unsupported suite version")
    train = [load_layout(suite_dir / f) for f in manifest["train"]]
    test = [load_layout(suite_dir / f) for f in manifest["test"]]
    overlap = {l.layout_id for l in train} & {l.layout_id for l in test}
    if overlap:
        raise ValueError(f"train/test layout overlap: {sorted(overlap)}")
    return train, test, tuple(manifest["target_categories"])
