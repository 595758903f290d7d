"""Asynchronous advantage actor-critic over the shared parameter store.

Workers follow the hogwild contract: parameter reads are unsynchronized
snapshots that may be stale, writes land as atomic whole-gradient Adam steps
under the store lock. Synchronous mode steps the same workers round-robin on
one thread, which makes training bit-reproducible and is what the tests use.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .config import Config
from .layout import RoomLayout
from .network import NavModel
from .optim import adam_update, clip_grads
from .policy import select_action
from .world import GridWorld

log = logging.getLogger(__name__)


def compute_returns(rewards: Sequence[float], gamma: float,
                    bootstrap: float) -> List[float]:
    """n-step discounted returns, R_i = r_i + gamma * R_{i+1}."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    returns = [0.0] * len(rewards)
    acc = float(bootstrap)
    for i in reversed(range(len(rewards))):
        acc = float(rewards[i]) + gamma * acc
        returns[i] = acc
    return returns


class SharedParamStore:
    """Authoritative parameters plus Adam state and the episode counter.

    apply() validates and commits one whole gradient atomically; the
    on_apply hook exists so tests can checksum committed updates.
    """

    def __init__(self, params: Dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.values = {k: np.array(v, dtype=np.float64, copy=True)
                       for k, v in params.items()}
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self._m = {k: np.zeros_like(v) for k, v in self.values.items()}
        self._v = {k: np.zeros_like(v) for k, v in self.values.items()}
        self.t = 0
        self.episodes = 0
        self.updates = 0
        self.rejected = 0
        self.lock = threading.Lock()
        self.on_apply: Optional[Callable[[Dict[str, np.ndarray]], None]] = None

    def snapshot_into(self, model: NavModel) -> None:
        # unsynchronized read by design: may interleave with a concurrent
        # apply and observe a stale or mixed snapshot (hogwild contract)
        for k, p in model.params.items():
            np.copyto(p.values, self.values[k])

    def snapshot(self) -> Dict[str, np.ndarray]:
        with self.lock:
            return {k: v.copy() for k, v in self.values.items()}

    def apply(self, grads: Dict[str, np.ndarray],
              episodes_done: int = 0) -> bool:
        for g in grads.values():
            if not np.all(np.isfinite(g)):
                with self.lock:
                    self.rejected += 1
                return False
        with self.lock:
            self.t += 1
            for name in sorted(grads):
                adam_update(self.values[name], grads[name], self._m[name],
                            self._v[name], self.t, self.lr, self.beta1,
                            self.beta2, self.eps)
            self.updates += 1
            self.episodes += episodes_done
            if self.on_apply is not None:
                self.on_apply(grads)
        return True

    def count_episodes(self, n: int = 1) -> None:
        with self.lock:
            self.episodes += n


@dataclass
class EpisodeResult:
    success: int
    length: int
    undiscounted_return: float


class A3CWorker:
    """One rollout-and-update loop over its own model replica and worlds."""

    def __init__(self, worker_id: int, cfg: Config,
                 layouts: Sequence[RoomLayout], targets: Sequence[int],
                 store: SharedParamStore, seed: int):
        self.worker_id = worker_id
        self.cfg = cfg
        self.layouts = list(layouts)
        self.targets = list(targets)
        self.store = store
        self.rng = np.random.default_rng(seed)
        self.model = NavModel(cfg, np.random.default_rng(seed))
        names = list(self.model.policy_param_names())
        if not cfg.a3c_freeze_repr:
            names += self.model.repr_param_names()
        self.trainable = sorted(names)
        self.env: Optional[GridWorld] = None
        self.lstm = None
        self.prev_action: Optional[int] = None
        self.episode_reward = 0.0
        self.obs = None
        self.last_losses: Dict[str, float] = {}

    def _begin_episode(self) -> None:
        layout = self.layouts[int(self.rng.integers(len(self.layouts)))]
        target = int(self.targets[int(self.rng.integers(len(self.targets)))])
        self.env = GridWorld(layout, target, self.cfg)
        self.obs = self.env.reset(seed=int(self.rng.integers(2 ** 62)))
        self.lstm = self.model.initial_lstm()
        self.prev_action = None
        self.episode_reward = 0.0

    def run_segment(self) -> Optional[EpisodeResult]:
        """Rolls out up to n_step transitions, commits one gradient.

        Returns the finished episode's result when the segment ended an
        episode, else None.
        """
        if self.env is None or self.env.terminated:
            self._begin_episode()
        self.store.snapshot_into(self.model)
        ad.zero_grads(self.model.params.values())

        steps = []
        terminated = False
        success = None
        for _ in range(self.cfg.n_step):
            state = self.model.representation(self.obs, self.env.target)
            logits, value, self.lstm = self.model.policy_step(
                state, self.prev_action, self.lstm)
            action = select_action(logits.values, "stochastic", self.rng)
            self.obs, reward, terminated, success = self.env.step(action)
            self.episode_reward += reward
            steps.append((logits, value, action, reward))
            self.prev_action = action
            if terminated:
                break

        if terminated:
            bootstrap = 0.0
        else:
            state = self.model.representation(self.obs, self.env.target)
            _, boot_value, _ = self.model.policy_step(
                state, self.prev_action, self.lstm)
            bootstrap = boot_value.item()
        # truncated BPTT: the carried hidden state does not backpropagate
        # across segment boundaries
        self.lstm = (self.lstm[0].detach(), self.lstm[1].detach())

        rewards = [s[3] for s in steps]
        returns = compute_returns(rewards, self.cfg.gamma, bootstrap)
        loss = None
        policy_term = value_term = entropy_term = 0.0
        for (logits, value, action, _), ret in zip(steps, returns):
            advantage = ret - value.item()
            pg = ad.scale(ad.cross_entropy(logits, action), advantage)
            diff = ad.sub(value, ad.Tensor([[ret]]))
            vloss = ad.scale(ad.mul(diff, diff), self.cfg.value_coef)
            ent = ad.entropy_rows(logits)
            term = ad.sub(ad.add(pg, vloss),
                          ad.scale(ent, self.cfg.entropy_coef))
            loss = term if loss is None else ad.add(loss, term)
            policy_term += pg.item()
            value_term += vloss.item()
            entropy_term += ent.item()
        # per-step mean keeps the update magnitude independent of segment
        # length and commensurate with the pretraining stages
        loss = ad.scale(loss, 1.0 / len(steps))

        if not np.isfinite(loss.item()):
            log.warning("worker %d: non-finite segment loss, dropping",
                        self.worker_id)
            self.last_losses = {}
            return self._finish(terminated, success)
        ad.backward(loss)
        grads = {k: self.model.params[k].grad.copy() for k in self.trainable}
        clip_grads(grads, self.cfg.grad_clip)
        if not self.store.apply(grads, episodes_done=1 if terminated else 0):
            log.warning("worker %d: store rejected non-finite gradients",
                        self.worker_id)
            self.store.count_episodes(1 if terminated else 0)
        self.last_losses = {"loss": loss.item(), "policy": policy_term,
                            "value": value_term, "entropy": entropy_term,
                            "steps": float(len(steps))}
        if terminated:
            return EpisodeResult(int(success), self.env.steps,
                                 self.episode_reward)
        return None

    def _finish(self, terminated, success):
        if terminated:
            self.store.count_episodes(1)
            return EpisodeResult(int(success), self.env.steps,
                                 self.episode_reward)
        return None


def a3c_train(cfg: Config, layouts: Sequence[RoomLayout],
              targets: Sequence[int], store: SharedParamStore,
              episode_budget: int, sync: Optional[bool] = None,
              on_episode: Optional[Callable[[int, EpisodeResult, Dict], None]] = None,
              seed: Optional[int] = None) -> Dict:
    """Runs workers until the shared episode counter reaches the budget.

    Sync mode rotates workers on the calling thread (deterministic); async
    mode runs one thread per worker against the same store.
    """
    sync = cfg.sync if sync is None else sync
    seed = cfg.seed if seed is None else seed
    workers = [A3CWorker(i, cfg, layouts, targets, store,
                         seed=seed * 10007 + i) for i in range(cfg.workers)]
    history = {"successes": 0, "episodes": 0, "loss_log": []}

    def handle(result, worker):
        if result is None:
            return
        history["episodes"] += 1
        history["successes"] += result.success
        if on_episode is not None:
            on_episode(history["episodes"], result, worker.last_losses)

    if sync:
        i = 0
        while store.episodes < episode_budget:
            worker = workers[i % len(workers)]
            handle(worker.run_segment(), worker)
            if worker.last_losses:
                history["loss_log"].append(worker.last_losses["loss"])
            i += 1
    else:
        def loop(worker):
            while store.episodes < episode_budget:
                handle(worker.run_segment(), worker)

        threads = [threading.Thread(target=loop, args=(w,), daemon=True)
                   for w in workers]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    return history
