import os

# pin BLAS pools before numpy loads anywhere; bit-reproducibility of the
# training tests depends on single-threaded reductions
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from acrgnav.config import Config
from acrgnav.layout import PlacedObject, RoomLayout


@pytest.fixture(scope="session")
def cfg():
    return Config()


def corridor_layout(length=14, target_cell=None, height_level=1,
                    layout_id="corridor", extra_objects=()):
    """Bordered 1-cell-wide corridor along y=1 with one target object."""
    walls = np.ones((3, length + 2), dtype=np.uint8)
    walls[1, 1:length + 1] = 0
    objects = []
    if target_cell is not None:
        objects.append(PlacedObject(0, target_cell, 1, height_level))
    objects.extend(extra_objects)
    return RoomLayout(layout_id, walls, list(objects), num_categories=16)


def open_room(size=10, objects=(), layout_id="room", num_categories=16):
    walls = np.zeros((size, size), dtype=np.uint8)
    walls[0, :] = walls[-1, :] = 1
    walls[:, 0] = walls[:, -1] = 1
    return RoomLayout(layout_id, walls, list(objects),
                      num_categories=num_categories)


@pytest.fixture
def corridor():
    return corridor_layout
