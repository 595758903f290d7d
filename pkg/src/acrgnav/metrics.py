"""Navigation metrics: success rate, SPL, and the hard-episode split."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union


@dataclass
class EpisodeTrace:
    layout_id: str
    target: int
    start_pose: Tuple[int, int, int, int]
    actions: List[int]
    rewards: List[float]
    success: int                 # 0 or 1
    optimal_length: Optional[int]  # None only when the target was unreachable

    @property
    def length(self) -> int:
        return len(self.actions)

    def to_json(self) -> str:
        return json.dumps({
            "layout_id": self.layout_id, "target": self.target,
            "start_pose": list(self.start_pose), "actions": self.actions,
            "rewards": self.rewards, "success": self.success,
            "optimal_length": self.optimal_length})

    @classmethod
    def from_json(cls, line: str) -> "EpisodeTrace":
        d = json.loads(line)
        return cls(d["layout_id"], d["target"], tuple(d["start_pose"]),
                   list(d["actions"]), [float(r) for r in d["rewards"]],
                   int(d["success"]), d["optimal_length"])


def success_rate(traces: Sequence[EpisodeTrace]) -> float:
    if not traces:
        raise ValueError("success_rate over an empty trace list")
    return sum(t.success for t in traces) / len(traces)


def spl(traces: Sequence[EpisodeTrace]) -> float:
    """Success weighted by path length: mean of S * L_opt / max(L, L_opt)."""
    if not traces:
        raise ValueError("spl over an empty trace list")
    total = 0.0
    for t in traces:
        if not t.success:
            continue
        if t.optimal_length is None or t.optimal_length < 1:
            raise ValueError(f"successful trace on {t.layout_id} lacks a "
                             "valid optimal length")
        total += t.optimal_length / max(t.length, t.optimal_length)
    return total / len(traces)


def filter_min_optimal(traces: Sequence[EpisodeTrace],
                       min_len: int = 5) -> List[EpisodeTrace]:
    """Hard-episode subset: optimal plans of at least min_len actions."""
    return [t for t in traces
            if t.optimal_length is not None and t.optimal_length >= min_len]


def save_traces(path: Union[str, Path], traces: Sequence[EpisodeTrace]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in traces:
            fh.write(t.to_json() + "\n")


def load_traces(path: Union[str, Path]) -> List[EpisodeTrace]:
    with open(path, encoding="utf-8") as fh:
        return [EpisodeTrace.from_json(line) for line in fh if line.strip()]


@dataclass
class EvalReport:
    traces: List[EpisodeTrace]
    excluded_unreachable: int
    config_fingerprint: str
    seed: int
    success: float = field(init=False)
    spl_value: float = field(init=False)
    hard_count: int = field(init=False)
    hard_success: Optional[float] = field(init=False)
    hard_spl: Optional[float] = field(init=False)

    def __post_init__(self):
        self.success = success_rate(self.traces)
        self.spl_value = spl(self.traces)
        hard = filter_min_optimal(self.traces)
        self.hard_count = len(hard)
        self.hard_success = success_rate(hard) if hard else None
        self.hard_spl = spl(hard) if hard else None

    def summary(self) -> Dict:
        return {"episodes": len(self.traces),
                "excluded_unreachable": self.excluded_unreachable,
                "success": self.success, "spl": self.spl_value,
                "hard_episodes": self.hard_count,
                "hard_success": self.hard_success, "hard_spl": self.hard_spl,
                "config_fingerprint": self.config_fingerprint,
                "seed": self.seed}

    def save(self, out_dir: Union[str, Path], label: str = "eval") -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_traces(out / f"{label}_traces.jsonl", self.traces)
        (out / f"{label}_summary.json").write_text(
            json.dumps(self.summary(), indent=2) + "\n")


def format_table(rows: Dict[str, EvalReport]) -> str:
    """Fixed-width comparison table over ALL and the L>=5 split."""
    def fmt(v, pct=False):
        if v is None:
            return "   -  "
        return f"{v * 100:5.1f}%" if pct else f"{v:6.3f}"

    lines = [f"{'method':<14} {'Success':>8} {'SPL':>7}   "
             f"{'Success(L>=5)':>13} {'SPL(L>=5)':>9}"]
    lines.append("-" * len(lines[0]))
    for label, rep in rows.items():
        lines.append(f"{label:<14} {fmt(rep.success, True):>8} "
                     f"{fmt(rep.spl_value):>7}   "
                     f"{fmt(rep.hard_success, True):>13} "
                     f"{fmt(rep.hard_spl):>9}")
    return "\n".join(lines)
