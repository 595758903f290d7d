"""Minimal reverse-mode automatic differentiation over dense 2-D tensors.

Everything is float64. A Tensor wraps a (rows, cols) array plus an optional
gradient buffer; applying an op records parents and a backward closure, so the
computation record is rebuilt from scratch on every forward pass. Gradients
accumulate into ``.grad`` until explicitly zeroed, which is what lets shared
parameters pick up contributions from every timestep of an unrolled network.

Broadcasting is deliberately narrow: ``add`` and ``mul`` accept equal shapes
or a 1 x n row vector against an m x n matrix (the row is repeated over rows,
and its gradient is summed back over rows). Anything else must be materialized
by the caller.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Optional, Tuple

import numpy as np


class ShapeError(ValueError):
    """Operand shapes incompatible with the requested operation."""


_node_counter = itertools.count()


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "node_id", "op",
                 "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False, op: str = "leaf",
                 _parents: Tuple["Tensor", ...] = (),
                 _backward: Optional[Callable[[np.ndarray], None]] = None):
        v = np.asarray(values, dtype=np.float64)
        if v.ndim == 0:
            v = v.reshape(1, 1)
        elif v.ndim == 1:
            v = v.reshape(1, -1)
        if v.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got array of shape {v.shape}")
        self.values = v
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(v) if self.requires_grad else None
        self.node_id = next(_node_counter)
        self.op = op
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.values[0, 0])

    def detach(self) -> "Tensor":
        return Tensor(self.values.copy())

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op!r}, grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(values, rng: Optional[np.random.Generator] = None) -> Tensor:
    """Leaf tensor that participates in differentiation."""
    return Tensor(values, requires_grad=True, op="param")


def _make(values, parents: Tuple[Tensor, ...], op: str,
          backward: Callable[[np.ndarray], None]) -> Tensor:
    requires = any(p.requires_grad for p in parents)
    if not requires:
        return Tensor(values, op=op)
    out = Tensor(values, requires_grad=True, op=op, _parents=parents,
                 _backward=backward)
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    out_values = a.values @ b.values

    def backward(g):
        if a.requires_grad:
            a.grad += g @ b.values.T
        if b.requires_grad:
            b.grad += a.values.T @ g

    return _make(out_values, (a, b), "matmul", backward)


def _broadcast_pair(a: Tensor, b: Tensor, op: str):
    """Returns (b_values_broadcast, reduce_b) honoring the row-vector rule."""
    if a.shape == b.shape:
        return b.values, False
    if b.shape == (1, a.shape[1]) and a.shape[0] > 1:
        return b.values, True
    raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} are not "
                     "equal and the second is not a broadcastable row vector")


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and a.shape == (1, b.shape[1]) and b.shape[0] > 1:
        return add(b, a)
    b_values, reduce_b = _broadcast_pair(a, b, "add")
    out_values = a.values + b_values

    def backward(g):
        if a.requires_grad:
            a.grad += g
        if b.requires_grad:
            b.grad += g.sum(axis=0, keepdims=True) if reduce_b else g

    return _make(out_values, (a, b), "add", backward)


def sub(a, b) -> Tensor:
    return add(a, scale(as_tensor(b), -1.0))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and a.shape == (1, b.shape[1]) and b.shape[0] > 1:
        return mul(b, a)
    b_values, reduce_b = _broadcast_pair(a, b, "mul")
    out_values = a.values * b_values

    def backward(g):
        if a.requires_grad:
            a.grad += g * b_values
        if b.requires_grad:
            gb = g * a.values
            b.grad += gb.sum(axis=0, keepdims=True) if reduce_b else gb

    return _make(out_values, (a, b), "mul", backward)


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    out_values = a.values * c

    def backward(g):
        if a.requires_grad:
            a.grad += g * c

    return _make(out_values, (a,), "scale", backward)


def relu(a) -> Tensor:
    a = as_tensor(a)
    out_values = np.maximum(a.values, 0.0)
    mask = a.values > 0.0  # subgradient at 0 taken as 0

    def backward(g):
        if a.requires_grad:
            a.grad += g * mask

    return _make(out_values, (a,), "relu", backward)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.values
    out_values = np.where(x >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                          np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def backward(g):
        if a.requires_grad:
            a.grad += g * out_values * (1.0 - out_values)

    return _make(out_values, (a,), "sigmoid", backward)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out_values = np.tanh(a.values)

    def backward(g):
        if a.requires_grad:
            a.grad += g * (1.0 - out_values * out_values)

    return _make(out_values, (a,), "tanh", backward)


def softmax_rows(a) -> Tensor:
    """Row-wise softmax with max-subtraction stabilization."""
    a = as_tensor(a)
    shifted = a.values - a.values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out_values = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        if a.requires_grad:
            inner = (g * out_values).sum(axis=1, keepdims=True)
            a.grad += out_values * (g - inner)

    return _make(out_values, (a,), "softmax_rows", backward)


def concat_cols(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat_cols: row counts differ, {a.shape} vs {b.shape}")
    split = a.shape[1]
    out_values = np.concatenate([a.values, b.values], axis=1)

    def backward(g):
        if a.requires_grad:
            a.grad += g[:, :split]
        if b.requires_grad:
            b.grad += g[:, split:]

    return _make(out_values, (a, b), "concat_cols", backward)


def transpose(a) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        if a.requires_grad:
            a.grad += g.T

    return _make(a.values.T.copy(), (a,), "transpose", backward)


def sum_all(a) -> Tensor:
    a = as_tensor(a)
    out_values = np.array([[a.values.sum()]])

    def backward(g):
        if a.requires_grad:
            a.grad += g[0, 0]

    return _make(out_values, (a,), "sum_all", backward)


def mean_rows(a) -> Tensor:
    """Mean over rows: (m, n) -> (1, n)."""
    a = as_tensor(a)
    m = a.shape[0]
    out_values = a.values.mean(axis=0, keepdims=True)

    def backward(g):
        if a.requires_grad:
            a.grad += np.repeat(g, m, axis=0) / m

    return _make(out_values, (a,), "mean_rows", backward)


def cross_entropy(logits, target: int) -> Tensor:
    """Negative log-softmax of a 1 x A logits row at the target index."""
    logits = as_tensor(logits)
    if logits.shape[0] != 1:
        raise ShapeError(f"cross_entropy: logits must be 1 x A, got {logits.shape}")
    n = logits.shape[1]
    target = int(target)
    if not 0 <= target < n:
        raise ValueError(f"cross_entropy: target {target} out of range [0, {n})")
    x = logits.values[0]
    m = x.max()
    lse = m + np.log(np.exp(x - m).sum())
    out_values = np.array([[lse - x[target]]])
    probs = np.exp(x - lse)

    def backward(g):
        if logits.requires_grad:
            row = probs.copy()
            row[target] -= 1.0
            logits.grad += g[0, 0] * row.reshape(1, -1)

    return _make(out_values, (logits,), "cross_entropy", backward)


def entropy_rows(a) -> Tensor:
    """Sum of row entropies of softmax(a); numerically safe at saturation."""
    a = as_tensor(a)
    shifted = a.values - a.values.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    p = np.exp(logp)
    out_values = np.array([[-(p * logp).sum()]])
    h_rows = -(p * logp).sum(axis=1, keepdims=True)

    def backward(g):
        if a.requires_grad:
            a.grad += g[0, 0] * (-p * (logp + h_rows))

    return _make(out_values, (a,), "entropy_rows", backward)


def _topo_order(root: Tensor) -> list:
    """Parents-before-children ordering of the reachable differentiable graph.

    Iterative so that long LSTM unrolls cannot hit the recursion limit.
    """
    order: list = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.node_id in visited or not node.requires_grad:
            continue
        visited.add(node.node_id)
        stack.append((node, True))
        for parent in node._parents:
            if parent.node_id not in visited and parent.requires_grad:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Reverse accumulation from a scalar loss into every reachable grad."""
    if loss.shape != (1, 1):
        raise ShapeError(f"backward: loss must be a 1x1 scalar, got {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("backward: loss does not depend on any parameter")
    order = _topo_order(loss)
    loss.grad += 1.0
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)


def record(loss: Tensor) -> list:
    """Computation record in topological order: (node id, op, parent ids)."""
    return [(n.node_id, n.op, tuple(p.node_id for p in n._parents))
            for n in _topo_order(loss)]


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.zero_grad()
