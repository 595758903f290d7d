"""End-to-end training pipeline: expert data, pretraining, actor-critic."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np

from .a3c import SharedParamStore, a3c_train
from .checkpoint import restore_into, save_params
from .config import Config
from .expert import ExpertDataset, generate_expert_dataset
from .imitation import behavior_clone_policy, pretrain_imitation
from .layout import RoomLayout
from .network import NavModel
from .runner import ModelPolicy, evaluate

log = logging.getLogger(__name__)


class ReportWriter:
    """Line-delimited training report records."""

    def __init__(self, path: Optional[Union[str, Path]]):
        self._fh = open(path, "w", encoding="utf-8") if path else None

    def write(self, kind: str, **fields) -> None:
        if self._fh is None:
            return
        self._fh.write(json.dumps({"kind": kind, **fields}) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()


def run_training(cfg: Config, train_layouts: Sequence[RoomLayout],
                 eval_layouts: Sequence[RoomLayout],
                 out_dir: Optional[Union[str, Path]] = None,
                 dataset: Optional[ExpertDataset] = None,
                 skip_pretrain: bool = False) -> Dict:
    """Full pipeline; returns the trained model plus stage reports.

    Train and eval layout sets must be disjoint. Pretraining can be skipped
    (flagged in the report); the actor-critic stage always runs.
    """
    cfg.validate()
    overlap = ({l.layout_id for l in train_layouts}
               & {l.layout_id for l in eval_layouts})
    if overlap:
        raise ValueError(f"train/eval layout overlap: {sorted(overlap)}")
    out = Path(out_dir) if out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        cfg.to_file(out / "config.json")
    report = ReportWriter(out / "train_report.jsonl" if out else None)
    targets = list(cfg.target_categories)
    t_start = time.time()

    model = NavModel(cfg, np.random.default_rng(cfg.seed))
    summary: Dict = {"config_fingerprint": cfg.fingerprint(),
                     "skip_pretrain": bool(skip_pretrain)}

    if skip_pretrain:
        log.info("pretraining disabled by configuration")
        report.write("pretrain_skipped")
    else:
        if dataset is None:
            log.info("generating expert dataset (%d episodes per layout)",
                     cfg.expert_episodes_per_layout)
            dataset = generate_expert_dataset(
                train_layouts, targets, cfg.expert_episodes_per_layout,
                cfg.seed, cfg)
            if out:
                dataset.save(out / "expert_data.npz")
        summary["expert_samples"] = len(dataset)
        pre = pretrain_imitation(model, dataset, cfg.pretrain_epochs,
                                 cfg.pretrain_lr, cfg.pretrain_batch,
                                 seed=cfg.seed,
                                 holdout_frac=cfg.pretrain_holdout)
        summary["pretrain"] = pre
        for epoch, (loss, acc) in enumerate(zip(pre["epoch_loss"],
                                                pre["holdout_accuracy"]), 1):
            report.write("pretrain", epoch=epoch, loss=loss, accuracy=acc)
        if cfg.policy_bc_epochs > 0:
            bc = behavior_clone_policy(model, dataset, cfg.policy_bc_epochs,
                                       cfg.policy_bc_lr, seed=cfg.seed)
            summary["behavior_clone"] = bc
            for epoch, loss in enumerate(bc["epoch_loss"], 1):
                report.write("behavior_clone", epoch=epoch, loss=loss)
        if out:
            save_params(out / "pretrained.ckpt", model.params,
                        meta={"config_fingerprint": cfg.fingerprint(),
                              "stage": "pretrain"})

    store = SharedParamStore(model.snapshot(), lr=cfg.lr)
    recent = []
    checkpointed = [0]

    def on_episode(n, result, losses):
        recent.append(result.success)
        if len(recent) > 200:
            recent.pop(0)
        if n % cfg.report_every == 0:
            report.write("a3c", episode=n, success_ma=float(np.mean(recent)),
                         **{k: float(v) for k, v in losses.items()})
        if out and cfg.eval_every > 0 \
                and n // cfg.eval_every > checkpointed[0]:
            checkpointed[0] = n // cfg.eval_every
            save_params(out / f"ckpt_ep{n:06d}.ckpt", store.snapshot(),
                        meta={"config_fingerprint": cfg.fingerprint(),
                              "stage": "a3c", "episode": n})

    log.info("actor-critic stage: %d episodes, %d workers, %s mode",
             cfg.a3c_episodes, cfg.workers, "sync" if cfg.sync else "async")
    history = a3c_train(cfg, train_layouts, targets, store,
                        episode_budget=cfg.a3c_episodes,
                        on_episode=on_episode)
    model.load_values(store.snapshot())
    summary["a3c_episodes"] = history["episodes"]
    summary["a3c_success_tail"] = float(np.mean(recent)) if recent else None
    summary["loss_log"] = history["loss_log"]

    if out:
        save_params(out / "final.ckpt", model.params,
                    meta={"config_fingerprint": cfg.fingerprint(),
                          "stage": "final"})
    if eval_layouts and cfg.eval_episodes > 0:
        rep = evaluate(ModelPolicy(model), eval_layouts, targets,
                       cfg.eval_episodes, seed=cfg.seed + 999, cfg=cfg)
        summary["eval"] = rep.summary()
        report.write("eval", **rep.summary())
        if out:
            rep.save(out, label="eval")
    summary["wall_seconds"] = time.time() - t_start
    report.close()
    return {"model": model, "summary": summary, "dataset": dataset}


def load_model(cfg: Config, checkpoint_path: Union[str, Path]) -> NavModel:
    from .checkpoint import load_params
    model = NavModel(cfg, np.random.default_rng(cfg.seed))
    arrays, meta = load_params(checkpoint_path)
    if meta.get("config_fingerprint") not in (None, cfg.fingerprint()):
        log.warning("checkpoint %s was written under a different config "
                    "fingerprint", checkpoint_path)
    restore_into(model.params, arrays)
    return model
