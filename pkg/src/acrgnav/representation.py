"""Two-graph visual representation with attention fusion.

Pipeline per observation: build per-category node rows for the horizontal
relation graph (bbox h-center, one-hot category, confidence; never any depth
or vertical coordinate) and for the agent-target depth graph (depth only at
the target row, zero elsewhere); run one graph layer over each with a learned
adjacency; fuse by concatenation through a fully connected layer; turn the
fused encoding into a row-stochastic attention map over embedded detection
features; finally fuse with position-encoded egocentric tokens via scaled
dot-product attention, mean-pool, and add a learned direct readout of the
egocentric patch and center depth row to form the policy's state vector.

Ablation variants rewire this pipeline: "ohrg" keeps only the horizontal
graph, "atdrg" only the depth graph, "multidepth" gives every node its own
depth instead of masking, "vertical" appends the bbox v-center to horizontal
node rows.
"""

from __future__ import annotations

import functools
import math
from typing import Dict, Optional

import numpy as np

from .autodiff import (Tensor, concat_cols, matmul, mean_rows, relu, scale,
                       softmax_rows, transpose)
from .config import Config
from .world import Observation, bbox_mean_depth


def horizontal_node_matrix(obs: Observation, num_categories: int,
                           include_vertical: bool = False) -> np.ndarray:
    """Node rows [h-center, one-hot category, confidence(, v-center)].

    Reads only horizontal bbox position, category and confidence; depth and
    vertical coordinates stay out of this graph unless the vertical-relation
    variant is switched on.
    """
    c = num_categories
    width = c + 3 if include_vertical else c + 2
    nodes = np.zeros((c, width))
    vis = obs.visible.astype(bool)
    nodes[:, 0] = np.where(vis, obs.h_center(), 0.0)
    nodes[np.arange(c), 1 + np.arange(c)] = 1.0
    nodes[:, c + 1] = obs.confidence
    if include_vertical:
        nodes[:, c + 2] = np.where(vis, obs.v_center(), 0.0)
    return nodes


def depth_node_matrix(obs: Observation, target: int, num_categories: int,
                      multi_depth: bool = False) -> np.ndarray:
    """Node rows [depth, one-hot category, confidence].

    Default masking keeps depth only at the target row (mean depth over the
    target bbox), and only when the target is visible. The multi-depth
    variant instead gives every visible slot its own bbox depth.
    """
    c = num_categories
    nodes = np.zeros((c, c + 2))
    nodes[np.arange(c), 1 + np.arange(c)] = 1.0
    nodes[:, c + 1] = obs.confidence
    if multi_depth:
        for i in range(c):
            if obs.visible[i]:
                nodes[i, 0] = bbox_mean_depth(obs.depth, obs.bbox[i])
    elif obs.visible[target]:
        nodes[target, 0] = bbox_mean_depth(obs.depth, obs.bbox[target])
    return nodes


def detection_feature_inputs(obs: Observation, num_categories: int,
                             target: int) -> np.ndarray:
    """Embedding inputs per detection slot:
    [one-hot, h1, y1, h2, y2, c, is-target].

    The trailing flag marks the sought category's slot whether or not it is
    currently visible; without it the whole representation is blind to the
    task whenever the target is out of view, and single-observation action
    prediction caps out well below its achievable accuracy.
    """
    c = num_categories
    feats = np.zeros((c, c + 6))
    feats[np.arange(c), np.arange(c)] = 1.0
    feats[:, c:c + 4] = obs.bbox
    feats[:, c + 4] = obs.confidence
    feats[target, c + 5] = 1.0
    return feats


def ego_token_matrix(obs: Observation) -> np.ndarray:
    """Flattened ego patch, one token per cell, channels as features."""
    k = obs.ego.shape[0]
    return obs.ego.reshape(k * k, obs.ego.shape[2]).astype(np.float64)


def global_readout_vector(obs: Observation, target: int) -> np.ndarray:
    """Flat observation summary for the direct global pathway.

    Concatenates the ego patch (plus a target-category channel, so the
    sought object's position around the agent is selectable by a linear
    map) with one depth row. Token attention alone reduces the global
    feature to mixture weights over detection rows, which loses the spatial
    arrangement the policy needs; this pathway carries it directly.
    """
    k = obs.ego.shape[0]
    flat_ego = obs.ego.reshape(k * k, -1).astype(np.float64)
    target_channel = obs.ego[:, :, target].reshape(k * k, 1).astype(np.float64)
    depth_row = obs.depth[obs.depth.shape[0] // 2] / 5.0
    return np.concatenate([flat_ego.ravel(), target_channel.ravel(),
                           depth_row]).reshape(1, -1)


def global_readout_width(cfg: Config) -> int:
    k = cfg.ego_size
    return k * k * (cfg.num_categories + 2) + cfg.depth_resolution


@functools.lru_cache(maxsize=8)
def position_encoding(size: int, dim: int) -> np.ndarray:
    """Fixed 2-D sinusoidal position encoding for a size x size token grid.

    Half the channels encode the row index, half the column index; depends
    only on the grid position, never on content.
    """
    half = dim // 2
    pe = np.zeros((size * size, dim))
    for idx in range(size * size):
        i, j = divmod(idx, size)
        for axis, pos, off in ((0, i, 0), (1, j, half)):
            n = half if axis == 0 else dim - half
            for k in range(n):
                freq = 1.0 / (10000.0 ** (2 * (k // 2) / max(n, 1)))
                ang = pos * freq
                pe[idx, off + k] = math.sin(ang) if k % 2 == 0 else math.cos(ang)
    return pe


def adjacency(nodes: Tensor, query_w: Tensor, key_w: Tensor) -> Tensor:
    """Input-conditioned row-stochastic adjacency over node rows.

    softmax_rows((X Q)(X K)^T / sqrt(d_a)); identical node rows give a
    uniform adjacency by symmetry.
    """
    q = matmul(nodes, query_w)
    k = matmul(nodes, key_w)
    scores = scale(matmul(q, transpose(k)), 1.0 / math.sqrt(q.shape[1]))
    return softmax_rows(scores)


def relation_layer(nodes: Tensor, adj: Tensor, weight: Tensor) -> Tensor:
    """One graph layer: relu(A X W)."""
    return relu(matmul(matmul(adj, nodes), weight))


def fuse_graphs(z_h: Tensor, z_d: Tensor, weight: Tensor) -> Tensor:
    """Fused encoding: relu((Z_h ++ Z_d) W), columns concatenated."""
    return relu(matmul(concat_cols(z_h, z_d), weight))


def map_attention(z_t: Tensor, det_features: Tensor, bilinear: Tensor,
                  attention_override: Optional[Tensor] = None):
    """Fused graph encoding applied as an attention map over detections.

    The C x C map is softmax_rows(Z W Z^T / sqrt(d_g)); the bilinear form
    keeps the whole operation equivariant to consistent row permutations of
    (Z_t, detection features). Returns (relu(A F), A).
    """
    if attention_override is not None:
        att = attention_override
    else:
        scores = scale(matmul(matmul(z_t, bilinear), transpose(z_t)),
                       1.0 / math.sqrt(z_t.shape[1]))
        att = softmax_rows(scores)
    return relu(matmul(att, det_features)), att


def token_fuse(tokens: Tensor, features: Tensor):
    """Scaled dot-product attention of global tokens over projected features.

    softmax_rows(G F^T / sqrt(d)) F; returns (fused tokens, attention).
    """
    d = features.shape[1]
    att = softmax_rows(scale(matmul(tokens, transpose(features)),
                             1.0 / math.sqrt(d)))
    return matmul(att, features), att


def build_representation(params: Dict[str, Tensor], cfg: Config,
                         obs: Observation, target: int,
                         trace: Optional[dict] = None,
                         overrides: Optional[Dict[str, Tensor]] = None) -> Tensor:
    """Observation to 1 x repr_dim state vector; pure in (obs, target, params)."""
    overrides = overrides or {}
    c = cfg.num_categories
    variant = cfg.variant

    def graph_adjacency(nodes, prefix):
        if prefix + "_adjacency" in overrides:
            return overrides[prefix + "_adjacency"]
        if cfg.adjacency_mode == "static":
            return softmax_rows(params[prefix + "_static"])
        return adjacency(nodes, params[prefix + "_query"],
                         params[prefix + "_key"])

    z_t = None
    if variant != "atdrg":
        x_h = Tensor(horizontal_node_matrix(obs, c, variant == "vertical"))
        a_h = graph_adjacency(x_h, "hgraph")
        z_h = relation_layer(x_h, a_h, params["hgraph_embed"])
        if trace is not None:
            trace["horizontal_adjacency"] = a_h.values.copy()
        z_t = z_h
    if variant != "ohrg":
        x_d = Tensor(depth_node_matrix(obs, target, c,
                                       multi_depth=variant == "multidepth"))
        a_d = graph_adjacency(x_d, "dgraph")
        z_d = relation_layer(x_d, a_d, params["dgraph_embed"])
        if trace is not None:
            trace["depth_adjacency"] = a_d.values.copy()
        z_t = z_d if z_t is None else fuse_graphs(z_t, z_d,
                                                  params["fuse_weight"])

    det = Tensor(detection_feature_inputs(obs, c, target))
    det_features = matmul(det, params["det_embed"])
    attended, map_att = map_attention(
        z_t, det_features, params["attn_bilinear"],
        attention_override=overrides.get("map_attention"))

    projected = matmul(attended, params["repr_proj"])
    ego = Tensor(ego_token_matrix(obs))
    tokens = matmul(ego, params["global_embed"]) + \
        Tensor(position_encoding(cfg.ego_size, cfg.repr_dim))
    fused, token_att = token_fuse(tokens, projected)
    if trace is not None:
        trace["map_attention"] = map_att.values.copy()
        trace["token_attention"] = token_att.values.copy()
    state = mean_rows(fused)
    direct = matmul(Tensor(global_readout_vector(obs, target)),
                    params["global_readout"])
    return state + direct
