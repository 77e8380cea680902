"""AdamW, cosine annealing with warm restarts, and the MSE training step."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np


class CosineWarmRestarts:
    """Learning rate annealed along a cosine that restarts every period.

    Periods grow by ``t_mult`` after each restart.
    """

    def __init__(self, base_lr: float, period: int = 10, t_mult: int = 1, min_lr: float = 0.0):
        if period < 1 or t_mult < 1:
            raise ValueError("period and t_mult must be >= 1")
        self.base_lr = base_lr
        self.period = period
        self.t_mult = t_mult
        self.min_lr = min_lr

    def __call__(self, step: int) -> float:
        t_cur, t_i = step, self.period
        while t_cur >= t_i:
            t_cur -= t_i
            t_i *= self.t_mult
        return self.min_lr + 0.5 * (self.base_lr - self.min_lr) * (1 + math.cos(math.pi * t_cur / t_i))


class AdamW:
    """Adam with decoupled weight decay over a list of numpy arrays, updated in place."""

    def __init__(
        self,
        params: list,
        lr: float = 1e-3,
        weight_decay: float = 1e-5,
        betas: tuple = (0.9, 0.999),
        eps: float = 1e-8,
        schedule: Optional[CosineWarmRestarts] = None,
    ):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.schedule = schedule
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    @property
    def current_lr(self) -> float:
        return self.schedule(self.step_count) if self.schedule else self.lr

    def step(self, grads: list) -> None:
        lr = self.current_lr
        self.step_count += 1
        t = self.step_count
        c1 = 1 - self.beta1 ** t
        c2 = 1 - self.beta2 ** t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= lr * self.weight_decay * p
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train_step(net, X: np.ndarray, y: np.ndarray, optimizer: AdamW) -> float:
    """One AdamW update of ``net`` on a batch; returns the pre-update MSE."""
    X = np.atleast_2d(X)
    if len(X) == 0:
        raise ValueError("empty batch")
    loss, grads = net.mse_gradients(X, y)
    if not np.isfinite(loss):
        raise FloatingPointError(f"training diverged (loss={loss})")
    optimizer.step(grads)
    return loss
