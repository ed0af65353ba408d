# PEP-8
from __future__ import annotations

import math

import numpy as np


class AdamW:
    """Adam with decoupled weight decay over named float64 arrays."""

    def __init__(
        self,
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 1e-4,
    ) -> None:
        if lr < 0 or eps <= 0 or weight_decay < 0:
            raise ValueError("lr and weight decay must be >= 0 and eps > 0")
        if not all(0.0 <= b < 1.0 for b in betas):
            raise ValueError(f"betas must lie in [0, 1), got {betas}")
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Return updated copies of the arrays named in ``grads``."""
        self.t += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        updated = {}
        for name in sorted(grads):
            g = grads[name]
            p = params[name]
            m = self.m.get(name, np.zeros_like(p)) * b1 + (1.0 - b1) * g
            v = self.v.get(name, np.zeros_like(p)) * b2 + (1.0 - b2) * g * g
            self.m[name], self.v[name] = m, v
            step = (m / c1) / (np.sqrt(v / c2) + self.eps) + self.weight_decay * p
            updated[name] = p - self.lr * step
        return updated

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {f"m/{k}": v for k, v in self.m.items()}
        arrays.update({f"v/{k}": v for k, v in self.v.items()})
        return arrays

    def load_state(self, t: int, arrays: dict[str, np.ndarray]) -> None:
        self.t = t
        self.m = {k[2:]: v.copy() for k, v in arrays.items() if k.startswith("m/")}
        self.v = {k[2:]: v.copy() for k, v in arrays.items() if k.startswith("v/")}


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for _, g in sorted(grads.items())))


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    """Scale all gradients together so their global L2 norm is at most ``max_norm``."""
    total = global_norm(grads)
    if max_norm <= 0 or total <= max_norm or not math.isfinite(total):
        return grads, total
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}, total
