"""Run configuration: one flat, versioned, human-readable key/value file."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Tuple, Union

VARIANTS = ("acrg", "ohrg", "atdrg", "multidepth", "vertical")
ADJACENCY_MODES = ("dynamic", "static")


@dataclass
class Config:
    config_version: int = 1

    # world geometry
    grid_width: int = 10
    grid_height: int = 10
    num_categories: int = 16
    target_categories: Tuple[int, ...] = (0, 1, 2, 3)
    ego_size: int = 7
    depth_resolution: int = 16
    cell_meters: float = 0.25
    max_range_meters: float = 5.0
    fov_degrees: float = 90.0
    success_distance_meters: float = 1.5
    max_episode_len: int = 50
    confidence_noise: float = 0.0

    # model dimensions and ablation switches
    graph_dim: int = 64
    adjacency_dim: int = 32
    repr_dim: int = 64
    lstm_dim: int = 128
    variant: str = "acrg"
    adjacency_mode: str = "dynamic"

    # reward scheme
    step_penalty: float = -0.01
    success_reward: float = 5.0

    # training
    seed: int = 0
    workers: int = 4
    sync: bool = True
    gamma: float = 0.99
    n_step: int = 5
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    grad_clip: float = 40.0
    lr: float = 1e-4
    expert_episodes_per_layout: int = 400
    pretrain_epochs: int = 10
    pretrain_lr: float = 3e-3
    pretrain_batch: int = 32
    pretrain_holdout: float = 0.1
    policy_bc_epochs: int = 6
    policy_bc_lr: float = 1e-3
    a3c_freeze_repr: bool = False
    a3c_episodes: int = 6000
    eval_episodes: int = 250
    eval_every: int = 1000
    report_every: int = 50

    def validate(self) -> "Config":
        if self.grid_width < 8 or self.grid_height < 8:
            raise ValueError("grid must be at least 8x8")
        if self.num_categories < 1:
            raise ValueError("num_categories must be positive")
        for t in self.target_categories:
            if not 0 <= t < self.num_categories:
                raise ValueError(f"target category {t} outside [0, {self.num_categories})")
        if self.ego_size % 2 != 1 or self.ego_size < 3:
            raise ValueError("ego_size must be odd and >= 3")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.adjacency_mode not in ADJACENCY_MODES:
            raise ValueError(f"adjacency_mode must be one of {ADJACENCY_MODES}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.lr <= 0 or self.pretrain_lr <= 0 or self.policy_bc_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.n_step < 1:
            raise ValueError("n_step must be >= 1")
        if self.max_episode_len < 1:
            raise ValueError("max_episode_len must be >= 1")
        if not 0.0 <= self.pretrain_holdout < 1.0:
            raise ValueError("pretrain_holdout must be in [0, 1)")
        return self

    # derived sizes
    @property
    def success_radius_cells(self) -> float:
        return self.success_distance_meters / self.cell_meters

    @property
    def max_range_cells(self) -> float:
        return self.max_range_meters / self.cell_meters

    @property
    def num_tokens(self) -> int:
        return self.ego_size * self.ego_size

    def to_dict(self) -> Dict:
        d = dataclasses.asdict(self)
        d["target_categories"] = list(self.target_categories)
        return d

    def to_file(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, data: Dict) -> "Config":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        if data.get("config_version", 1) != 1:
            raise ValueError(f"unsupported config_version {data['config_version']!r}")
        data = dict(data)
        if "target_categories" in data:
            data["target_categories"] = tuple(data["target_categories"])
        return cls(**data).validate()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "Config":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def replace(self, **changes) -> "Config":
        if "target_categories" in changes:
            changes["target_categories"] = tuple(changes["target_categories"])
        return dataclasses.replace(self, **changes).validate()

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]
