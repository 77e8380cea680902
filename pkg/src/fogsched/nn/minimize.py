"""Gradient descent on a network's input with the parameters held fixed."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from fogsched.nn.optim import CosineWarmRestarts

DEFAULT_LR = 0.8
DEFAULT_EPS = 1e-3
DEFAULT_MAX_ITER = 100


@dataclass
class MinimizeResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    grad: np.ndarray  # gradient of f at x, zero outside the free block


def _projected(grad, z, lo, hi):
    # components pushing against an active bound cannot be followed
    g = grad.copy()
    g[(z <= lo) & (g > 0)] = 0.0
    g[(z >= hi) & (g < 0)] = 0.0
    return g


def minimize_input(
    net,
    x0: np.ndarray,
    free,
    lr: float = DEFAULT_LR,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    bounds: tuple = (0.0, 1.0),
    method: str = "adam",
    restart_period: Optional[int] = None,
    betas: tuple = (0.9, 0.999),
) -> MinimizeResult:
    """Minimize ``net(x)`` over the coordinates in ``free``.

    Each iteration takes the partial gradient on the free block and steps
    against it (plain steps for ``method="sgd"``, Adam moments over the
    input for ``"adam"``), clamping to ``bounds``. A ``restart_period``
    anneals the step size on a cosine with warm restarts. The loop runs
    do-while style until the largest projected free gradient is at most
    ``eps`` or ``max_iter`` iterations have run. Without convergence the
    best point seen is returned.
    """
    x0 = np.asarray(x0, dtype=float)
    free = np.asarray(sorted(free), dtype=int)
    if len(free) == 0:
        return MinimizeResult(x0.copy(), float(net(x0)), 0, True, np.zeros_like(x0))
    if method not in ("adam", "sgd"):
        raise ValueError(f"unknown method {method!r}")
    lo, hi = bounds
    sub = net.restrict(x0, free)
    z = np.clip(x0[free], lo, hi)
    schedule = CosineWarmRestarts(lr, restart_period) if restart_period else None
    m = np.zeros_like(z)
    v = np.zeros_like(z)
    b1, b2 = betas
    best_value, best_z = np.inf, z.copy()
    converged = False
    i = 0
    while True:
        value, grad = sub.value_and_input_gradient(z)
        if value < best_value:
            best_value, best_z = value, z.copy()
        step_lr = schedule(i) if schedule else lr
        if method == "adam":
            m = b1 * m + (1 - b1) * grad
            v = b2 * v + (1 - b2) * grad * grad
            update = (m / (1 - b1 ** (i + 1))) / (np.sqrt(v / (1 - b2 ** (i + 1))) + 1e-8)
        else:
            update = grad
        converged = np.max(np.abs(_projected(grad, z, lo, hi))) <= eps
        z = np.clip(z - step_lr * update, lo, hi)
        i += 1
        if converged or i > max_iter:
            break

    final, grad = sub.value_and_input_gradient(z)
    if not converged and best_value < final:
        z = best_z
        final, grad = sub.value_and_input_gradient(z)
    x = x0.copy()
    x[free] = z
    full_grad = np.zeros_like(x0)
    full_grad[free] = grad
    return MinimizeResult(x, final, i, bool(converged), full_grad)
