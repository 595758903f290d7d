"""Imitation pretraining on expert actions.

Two stages: first a single-step classification head over the pooled
representation (the LSTM stays out of the loop), which forces the graph and
attention weights to become informative; then optional behavior cloning of
whole expert trajectories through the recurrent policy so actor-critic
fine-tuning starts from a competent controller rather than from scratch.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .expert import ExpertDataset
from .network import NavModel
from .optim import Adam

log = logging.getLogger(__name__)


def split_holdout(n: int, holdout_frac: float, rng: np.random.Generator):
    """Shuffled train/holdout index split."""
    order = rng.permutation(n)
    n_holdout = int(round(n * holdout_frac))
    return order[n_holdout:], order[:n_holdout]


def imitation_accuracy(model: NavModel, dataset: ExpertDataset,
                       indices: Sequence[int]) -> float:
    hits = 0
    for i in indices:
        state = model.representation(dataset.observation(i),
                                     int(dataset.target[i]))
        logits = model.imitation_logits(state)
        hits += int(np.argmax(logits.values) == dataset.action[i])
    return hits / max(len(indices), 1)


def _mean_loss(model: NavModel, dataset: ExpertDataset,
               indices: Sequence[int]) -> float:
    total = 0.0
    for i in indices:
        state = model.representation(dataset.observation(i),
                                     int(dataset.target[i]))
        loss = ad.cross_entropy(model.imitation_logits(state),
                                int(dataset.action[i]))
        total += loss.item()
    return total / max(len(indices), 1)


def pretrain_imitation(model: NavModel, dataset: ExpertDataset, epochs: int,
                       lr: float, batch_size: int, seed: int,
                       holdout_frac: float = 0.1,
                       eval_cap: int = 2000) -> Dict:
    """Minimizes expert-action cross-entropy on the pooled state vector.

    Returns a report with the pre-training loss, per-epoch mean training
    losses, and per-epoch holdout accuracy. Raises on divergence.
    """
    rng = np.random.default_rng(seed)
    train_idx, holdout_idx = split_holdout(len(dataset), holdout_frac, rng)
    if len(train_idx) == 0:
        raise ValueError("empty training split")
    eval_train = train_idx[:min(eval_cap, len(train_idx))]
    params = model.subset(model.repr_param_names()
                          + model.imitation_param_names())
    opt = Adam(params, lr=lr)

    initial_loss = _mean_loss(model, dataset, eval_train)
    report = {"initial_loss": initial_loss, "epoch_loss": [],
              "holdout_accuracy": [], "train_samples": int(len(train_idx)),
              "holdout_samples": int(len(holdout_idx))}
    log.info("pretrain: %d train / %d holdout samples, initial loss %.4f",
             len(train_idx), len(holdout_idx), initial_loss)

    for epoch in range(epochs):
        order = rng.permutation(train_idx)
        losses = []
        for start in range(0, len(order), batch_size):
            batch = order[start:start + batch_size]
            opt.zero_grad()
            batch_loss = 0.0
            for i in batch:
                state = model.representation(dataset.observation(i),
                                             int(dataset.target[i]))
                loss = ad.cross_entropy(model.imitation_logits(state),
                                        int(dataset.action[i]))
                ad.backward(ad.scale(loss, 1.0 / len(batch)))
                batch_loss += loss.item()
            batch_loss /= len(batch)
            if not np.isfinite(batch_loss):
                raise RuntimeError(f"pretraining diverged at epoch {epoch}: "
                                   f"batch loss {batch_loss}")
            if not opt.step():
                raise RuntimeError(f"pretraining diverged at epoch {epoch}: "
                                   "non-finite gradients")
            losses.append(batch_loss)
        acc = imitation_accuracy(model, dataset, holdout_idx) \
            if len(holdout_idx) else float("nan")
        report["epoch_loss"].append(float(np.mean(losses)))
        report["holdout_accuracy"].append(acc)
        log.info("pretrain epoch %d: loss %.4f, holdout accuracy %.3f",
                 epoch + 1, report["epoch_loss"][-1], acc)
    return report


def expert_returns(episode_len: int, gamma: float, step_penalty: float,
                   success_reward: float) -> List[float]:
    """Discounted returns along a successful expert trajectory.

    Every step costs the penalty; the final (Done) step adds the success
    reward. Terminal bootstrap is zero.
    """
    rewards = [step_penalty] * episode_len
    rewards[-1] += success_reward
    out = [0.0] * episode_len
    acc = 0.0
    for i in reversed(range(episode_len)):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


def behavior_clone_policy(model: NavModel, dataset: ExpertDataset,
                          epochs: int, lr: float, seed: int,
                          episodes_per_step: int = 4,
                          value_coef: float = 0.5) -> Dict:
    """Clones expert trajectories through the recurrent policy.

    The LSTM is unrolled over each trajectory in step order with the true
    previous actions fed back, exactly as the policy will see them at
    rollout time. The critic is regressed onto the expert's discounted
    returns at the same time, so actor-critic fine-tuning starts from
    near-zero advantages instead of trashing the cloned policy.
    """
    rng = np.random.default_rng(seed)
    cfg = model.cfg
    params = model.subset(model.repr_param_names()
                          + model.policy_param_names())
    opt = Adam(params, lr=lr)
    slices = dataset.episode_slices()
    report = {"epoch_loss": [], "epoch_value_loss": []}
    for epoch in range(epochs):
        order = rng.permutation(len(slices))
        losses = []
        value_losses = []
        opt.zero_grad()
        pending = 0
        for count, e in enumerate(order, start=1):
            idx = slices[e]
            returns = expert_returns(len(idx), cfg.gamma, cfg.step_penalty,
                                     cfg.success_reward)
            lstm = model.initial_lstm()
            prev: Optional[int] = None
            total = None
            vtotal = 0.0
            for i, ret in zip(idx, returns):
                state = model.representation(dataset.observation(i),
                                             int(dataset.target[i]))
                logits, value, lstm = model.policy_step(state, prev, lstm)
                diff = ad.sub(value, ad.Tensor([[ret]]))
                term = ad.add(ad.cross_entropy(logits, int(dataset.action[i])),
                              ad.scale(ad.mul(diff, diff), value_coef))
                vtotal += (value.item() - ret) ** 2
                total = term if total is None else ad.add(total, term)
                prev = int(dataset.action[i])
            episode_loss = ad.scale(total, 1.0 / len(idx))
            ad.backward(ad.scale(episode_loss, 1.0 / episodes_per_step))
            losses.append(episode_loss.item())
            value_losses.append(vtotal / len(idx))
            pending += 1
            if pending == episodes_per_step or count == len(order):
                if not np.isfinite(losses[-1]):
                    raise RuntimeError("behavior cloning diverged")
                if not opt.step():
                    raise RuntimeError("behavior cloning diverged: "
                                       "non-finite gradients")
                opt.zero_grad()
                pending = 0
        report["epoch_loss"].append(float(np.mean(losses)))
        report["epoch_value_loss"].append(float(np.mean(value_losses)))
        log.info("behavior clone epoch %d: loss %.4f (value mse %.4f)",
                 epoch + 1, report["epoch_loss"][-1],
                 report["epoch_value_loss"][-1])
    return report
