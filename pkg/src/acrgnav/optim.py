"""Adam optimizer over named parameter tensors."""

from __future__ import annotations

from typing import Dict, Mapping, Optional

import numpy as np

from .autodiff import Tensor


def adam_update(values: np.ndarray, grad: np.ndarray, m: np.ndarray,
                v: np.ndarray, t: int, lr: float, beta1: float, beta2: float,
                eps: float) -> None:
    """One bias-corrected Adam step, applied in place to ``values``."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    values -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Adam over a name -> Tensor mapping.

    ``step`` reads each parameter's accumulated ``.grad`` (or an explicit
    gradient mapping) and refuses to touch anything when any gradient is
    non-finite, returning False so the caller can drop the bad update.
    """

    def __init__(self, params: Mapping[str, Tensor], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0.0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: Dict[str, np.ndarray] = {
            k: np.zeros_like(p.values) for k, p in self.params.items()}
        self._v: Dict[str, np.ndarray] = {
            k: np.zeros_like(p.values) for k, p in self.params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self, grads: Optional[Mapping[str, np.ndarray]] = None) -> bool:
        if grads is None:
            grads = {k: p.grad for k, p in self.params.items()}
        for k in self.params:
            g = grads.get(k)
            if g is not None and not np.all(np.isfinite(g)):
                return False
        self.t += 1
        for k in sorted(self.params):
            g = grads.get(k)
            if g is None:
                continue
            p = self.params[k]
            if g.shape != p.values.shape:
                raise ValueError(f"gradient shape {g.shape} does not match "
                                 f"parameter {k!r} of shape {p.values.shape}")
            adam_update(p.values, g, self._m[k], self._v[k], self.t,
                        self.lr, self.beta1, self.beta2, self.eps)
        return True


def global_grad_norm(grads: Mapping[str, np.ndarray]) -> float:
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    return float(np.sqrt(total))


def clip_grads(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    """Scales gradients in place to the given global norm; returns the norm."""
    norm = global_grad_norm(grads)
    if max_norm > 0.0 and norm > max_norm:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm
