"""Recurrent actor-critic head over the representation's state vector."""

from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np

from .autodiff import (Tensor, add, concat_cols, matmul, mul, sigmoid, tanh)

NUM_ACTIONS = 6

LstmState = Tuple[Tensor, Tensor]


def initial_lstm_state(lstm_dim: int) -> LstmState:
    """Zero hidden and cell state, used at every episode start."""
    return (Tensor(np.zeros((1, lstm_dim))), Tensor(np.zeros((1, lstm_dim))))


def action_one_hot(action: Optional[int]) -> np.ndarray:
    """One-hot previous-action feedback; all-zero before any action."""
    row = np.zeros((1, NUM_ACTIONS))
    if action is not None:
        row[0, int(action)] = 1.0
    return row


def lstm_step(params: Dict[str, Tensor], x: Tensor, state: LstmState) -> LstmState:
    """Single LSTM cell update with separate per-gate weight matrices."""
    h, c = state

    def gate(name, fn):
        pre = add(add(matmul(x, params[f"lstm_w_{name}"]),
                      matmul(h, params[f"lstm_u_{name}"])),
                  params[f"lstm_b_{name}"])
        return fn(pre)

    i = gate("i", sigmoid)
    f = gate("f", sigmoid)
    o = gate("o", sigmoid)
    g = gate("g", tanh)
    c_new = add(mul(f, c), mul(i, g))
    h_new = mul(o, tanh(c_new))
    return (h_new, c_new)


def policy_forward(params: Dict[str, Tensor], state_vec: Tensor,
                   prev_action: Optional[int], lstm_state: LstmState):
    """(logits, value, new lstm state) from state vector and action feedback."""
    x = concat_cols(state_vec, Tensor(action_one_hot(prev_action)))
    h, c = lstm_step(params, x, lstm_state)
    logits = add(matmul(h, params["actor_w"]), params["actor_b"])
    value = add(matmul(h, params["critic_w"]), params["critic_b"])
    return logits, value, (h, c)


def softmax_probabilities(logits_row: np.ndarray) -> np.ndarray:
    z = logits_row - logits_row.max()
    e = np.exp(z)
    return e / e.sum()


def select_action(logits_row: np.ndarray, mode: str = "greedy",
                  rng: Optional[np.random.Generator] = None) -> int:
    """Greedy argmax (lowest index wins ties) or seeded softmax sampling."""
    row = np.asarray(logits_row).reshape(-1)
    if mode == "greedy":
        return int(np.argmax(row))
    if mode == "stochastic":
        if rng is None:
            raise ValueError("stochastic selection needs a random generator")
        probs = softmax_probabilities(row)
        cum = np.cumsum(probs)
        r = rng.random()
        return int(min(np.searchsorted(cum, r, side="right"), len(row) - 1))
    raise ValueError(f"unknown selection mode {mode!r}")
