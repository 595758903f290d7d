"""Model container: parameter initialization and the full forward passes."""

from __future__ import annotations

from typing import Dict, List, Optional

import numpy as np

from .autodiff import Tensor, add, backward, matmul, relu, sum_all, zero_grads
from .config import Config
from .policy import (LstmState, initial_lstm_state, policy_forward)
from .representation import build_representation, global_readout_width
from .world import Observation


def _uniform(rng, rows, cols, limit=None):
    if limit is None:
        limit = 1.0 / np.sqrt(rows)
    return rng.uniform(-limit, limit, (rows, cols))


def _orthogonal(rng, n):
    a = rng.normal(0.0, 1.0, (n, n))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))


# Initialization scales. Near-zero query/key weights would start every
# learned adjacency at the uniform distribution, which averages the one-hot
# node rows down to 1/C and collapses the downstream attention maps into
# row-identical matrices (the state vector then ignores the ego map and the
# target entirely). The boosted scales below keep the attention maps diverse
# at initialization while staying well inside the activations' linear range.
_QUERY_KEY_GAIN = 8.0
_GRAPH_EMBED_GAIN = 2.0
_PROJ_GAIN = 8.0
_BILINEAR_DIAG = 4.0
_BILINEAR_NOISE = 0.05


def init_params(cfg: Config, rng: np.random.Generator) -> Dict[str, Tensor]:
    """All learnable weights for the configured variant, freshly initialized.

    Recurrent matrices are orthogonal, heads are small-uniform, biases zero.
    """
    c = cfg.num_categories
    d_h = c + 3 if cfg.variant == "vertical" else c + 2
    d_d = c + 2
    d_g, d_a, d, d_p = (cfg.graph_dim, cfg.adjacency_dim, cfg.repr_dim,
                        cfg.lstm_dim)
    p: Dict[str, np.ndarray] = {}
    p["hgraph_embed"] = _uniform(rng, d_h, d_g, _GRAPH_EMBED_GAIN / np.sqrt(d_h))
    p["hgraph_query"] = _uniform(rng, d_h, d_a, _QUERY_KEY_GAIN / np.sqrt(d_h))
    p["hgraph_key"] = _uniform(rng, d_h, d_a, _QUERY_KEY_GAIN / np.sqrt(d_h))
    p["dgraph_embed"] = _uniform(rng, d_d, d_g, _GRAPH_EMBED_GAIN / np.sqrt(d_d))
    p["dgraph_query"] = _uniform(rng, d_d, d_a, _QUERY_KEY_GAIN / np.sqrt(d_d))
    p["dgraph_key"] = _uniform(rng, d_d, d_a, _QUERY_KEY_GAIN / np.sqrt(d_d))
    p["fuse_weight"] = _uniform(rng, 2 * d_g, d_g,
                                _GRAPH_EMBED_GAIN / np.sqrt(2 * d_g))
    p["attn_bilinear"] = _BILINEAR_DIAG * np.eye(d_g) + \
        rng.uniform(-_BILINEAR_NOISE, _BILINEAR_NOISE, (d_g, d_g))
    p["det_embed"] = _uniform(rng, c + 6, d_g)
    p["global_embed"] = _uniform(rng, c + 1, d)
    p["global_readout"] = _uniform(rng, global_readout_width(cfg), d)
    p["repr_proj"] = _uniform(rng, d_g, d, _PROJ_GAIN / np.sqrt(d_g))
    if cfg.adjacency_mode == "static":
        p["hgraph_static"] = np.zeros((c, c))
        p["dgraph_static"] = np.zeros((c, c))
    lstm_in = d + 6
    for gate in "ifog":
        p[f"lstm_w_{gate}"] = _uniform(rng, lstm_in, d_p)
        p[f"lstm_u_{gate}"] = _orthogonal(rng, d_p)
        p[f"lstm_b_{gate}"] = np.zeros((1, d_p))
    p["actor_w"] = _uniform(rng, d_p, 6, limit=0.01)
    p["actor_b"] = np.zeros((1, 6))
    p["critic_w"] = _uniform(rng, d_p, 1, limit=0.01)
    p["critic_b"] = np.zeros((1, 1))
    # two-layer imitation head; the hidden layer carries the single-step
    # classification load that the policy otherwise spreads over the LSTM
    p["imitation_hidden_w"] = _uniform(rng, d, d)
    p["imitation_hidden_b"] = np.zeros((1, d))
    p["imitation_w"] = _uniform(rng, d, 6, limit=0.01)
    p["imitation_b"] = np.zeros((1, 6))
    return {k: Tensor(v, requires_grad=True, op="param") for k, v in p.items()}


class NavModel:
    """Representation plus policy plus imitation head over one parameter dict."""

    def __init__(self, cfg: Config, rng: Optional[np.random.Generator] = None,
                 params: Optional[Dict[str, Tensor]] = None):
        cfg.validate()
        self.cfg = cfg
        if params is None:
            params = init_params(cfg, rng or np.random.default_rng(cfg.seed))
        self.params = params

    def representation(self, obs: Observation, target: int,
                       trace: Optional[dict] = None,
                       overrides: Optional[dict] = None) -> Tensor:
        return build_representation(self.params, self.cfg, obs, target,
                                    trace=trace, overrides=overrides)

    def policy_step(self, state_vec: Tensor, prev_action: Optional[int],
                    lstm_state: LstmState):
        return policy_forward(self.params, state_vec, prev_action, lstm_state)

    def imitation_logits(self, state_vec: Tensor) -> Tensor:
        hidden = relu(add(matmul(state_vec, self.params["imitation_hidden_w"]),
                          self.params["imitation_hidden_b"]))
        return add(matmul(hidden, self.params["imitation_w"]),
                   self.params["imitation_b"])

    def initial_lstm(self) -> LstmState:
        return initial_lstm_state(self.cfg.lstm_dim)

    # parameter grouping -------------------------------------------------
    def repr_param_names(self) -> List[str]:
        """Representation weights actually used by the configured variant."""
        variant = self.cfg.variant
        names = ["attn_bilinear", "det_embed", "global_embed",
                 "global_readout", "repr_proj"]
        use_h = variant != "atdrg"
        use_d = variant != "ohrg"
        if use_h:
            names.append("hgraph_embed")
        if use_d:
            names.append("dgraph_embed")
        if self.cfg.adjacency_mode == "static":
            if use_h:
                names.append("hgraph_static")
            if use_d:
                names.append("dgraph_static")
        else:
            if use_h:
                names += ["hgraph_query", "hgraph_key"]
            if use_d:
                names += ["dgraph_query", "dgraph_key"]
        if use_h and use_d:
            names.append("fuse_weight")
        return sorted(names)

    def policy_param_names(self) -> List[str]:
        names = [f"lstm_{kind}_{gate}" for kind in ("w", "u", "b")
                 for gate in "ifog"]
        names += ["actor_w", "actor_b", "critic_w", "critic_b"]
        return sorted(names)

    def imitation_param_names(self) -> List[str]:
        return ["imitation_b", "imitation_hidden_b", "imitation_hidden_w",
                "imitation_w"]

    def active_param_names(self) -> List[str]:
        return sorted(self.repr_param_names() + self.policy_param_names()
                      + self.imitation_param_names())

    def subset(self, names) -> Dict[str, Tensor]:
        return {k: self.params[k] for k in names}

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {k: p.values.copy() for k, p in self.params.items()}

    def load_values(self, arrays: Dict[str, np.ndarray]) -> None:
        for k, p in self.params.items():
            np.copyto(p.values, arrays[k])

    def check_live_gradients(self, observations, target: int) -> List[str]:
        """Names of active representation/policy parameters that received no
        gradient from any of the probe observations; empty list means no dead
        parameters at initialization."""
        watched = self.repr_param_names() + self.policy_param_names()
        zero_grads(self.params.values())
        for obs in observations:
            # unroll a few steps: recurrent weights and the forget gate only
            # see gradients once the hidden and cell states are nonzero
            lstm = self.initial_lstm()
            prev = None
            total = None
            for step in range(3):
                state = self.representation(obs, target)
                logits, value, lstm = self.policy_step(state, prev, lstm)
                term = add(sum_all(logits), sum_all(value))
                total = term if total is None else add(total, term)
                prev = step % 6
            backward(total)
        dead = [k for k in watched
                if not np.any(self.params[k].grad)]
        zero_grads(self.params.values())
        return dead
