"""Dense feed-forward networks with gradients w.r.t. parameters and inputs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

FORMAT_VERSION = 1


def _tanhshrink(z):
    return z - np.tanh(z)


# name -> (activation(z), derivative(z))
ACTIVATIONS = {
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "softplus": (lambda z: np.logaddexp(0.0, z), expit),
    "tanhshrink": (_tanhshrink, lambda z: np.tanh(z) ** 2),
    "sigmoid": (expit, lambda z: expit(z) * (1.0 - expit(z))),
}


@dataclass
class DenseLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"inconsistent layer shapes {self.W.shape} / {self.b.shape}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


class Scaler:
    """Per-column min-max normalization over a flat input vector.

    Columns with ``hi == lo`` pass through shifted but unscaled.
    """

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        span = self.hi - self.lo
        self._span = np.where(span > 0, span, 1.0)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.lo) / self._span

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return z * self._span + self.lo


class Network:
    """Stack of dense layers computing ``f(x; theta)``."""

    def __init__(self, layers: Sequence[DenseLayer], scaler: Optional[Scaler] = None, meta: Optional[dict] = None):
        self.layers = list(layers)
        for a, b in zip(self.layers, self.layers[1:]):
            if a.n_out != b.n_in:
                raise ValueError(f"layer size mismatch: {a.n_out} -> {b.n_in}")
        self.scaler = scaler
        self.meta = dict(meta or {})

    @classmethod
    def build(cls, sizes: Sequence[int], activations: Sequence[str], seed: int = 0) -> "Network":
        """Random network with symmetric uniform fan-in initialization."""
        if len(sizes) != len(activations) + 1:
            raise ValueError("need one activation per layer")
        rng = np.random.default_rng(seed)
        layers = []
        for n_in, n_out, act in zip(sizes, sizes[1:], activations):
            bound = 1.0 / np.sqrt(n_in)
            layers.append(
                DenseLayer(rng.uniform(-bound, bound, (n_out, n_in)), rng.uniform(-bound, bound, n_out), act)
            )
        return cls(layers)

    @classmethod
    def approximator(cls, n_in: int, seed: int = 0) -> "Network":
        """The fixed objective-approximator stack with a sigmoid head."""
        return cls.build([n_in, 128, 64, 1], ["softplus", "tanhshrink", "sigmoid"], seed)

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def params(self) -> list:
        out = []
        for layer in self.layers:
            out += [layer.W, layer.b]
        return out

    def copy(self) -> "Network":
        layers = [DenseLayer(l.W.copy(), l.b.copy(), l.activation) for l in self.layers]
        scaler = None if self.scaler is None else Scaler(self.scaler.lo.copy(), self.scaler.hi.copy())
        return Network(layers, scaler, self.meta)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n_in:
            raise ValueError(f"expected input of size {self.n_in}, got {X.shape[-1]}")
        return X

    def _forward(self, X):
        """Forward pass keeping (input, pre-activation) per layer."""
        cache = []
        a = X
        for layer in self.layers:
            z = a @ layer.W.T + layer.b
            cache.append((a, z))
            a = ACTIVATIONS[layer.activation][0](z)
        return a, cache

    def forward(self, x: np.ndarray):
        """Network output; a scalar for a single vector, else one value per row."""
        x = self._check(x)
        out, _ = self._forward(np.atleast_2d(x))
        out = out[:, 0] if out.shape[1] == 1 else out
        return float(out[0]) if x.ndim == 1 and np.ndim(out) == 1 else out

    __call__ = forward

    def input_gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of the scalar output with respect to the input vector."""
        return self.value_and_input_gradient(x)[1]

    def value_and_input_gradient(self, x: np.ndarray) -> tuple:
        """``(f(x), grad_x f(x))`` from one forward and one backward sweep."""
        x = self._check(x)
        out, cache = self._forward(x[None, :])
        grad = np.ones((1, 1))
        for layer, (_, z) in zip(reversed(self.layers), reversed(cache)):
            grad = (grad * ACTIVATIONS[layer.activation][1](z)) @ layer.W
        return float(out[0, 0]), grad[0]

    def _backprop(self, cache, delta) -> list:
        grads = []
        for layer, (a, z) in zip(reversed(self.layers), reversed(cache)):
            dz = delta * ACTIVATIONS[layer.activation][1](z)
            grads.append(dz.sum(axis=0))
            grads.append(dz.T @ a)
            delta = dz @ layer.W
        grads.reverse()
        return grads

    def backward(self, X: np.ndarray, dout: np.ndarray) -> list:
        """Parameter gradients of ``sum_i dout_i * f(X_i)``, ordered like ``params``."""
        X = np.atleast_2d(self._check(X))
        _, cache = self._forward(X)
        return self._backprop(cache, np.asarray(dout, dtype=float).reshape(len(X), -1))

    def mse_gradients(self, X: np.ndarray, y: np.ndarray) -> tuple:
        """``(loss, grads)`` for mean squared error against targets ``y``."""
        X = np.atleast_2d(self._check(X))
        y = np.asarray(y, dtype=float).reshape(len(X))
        pred, cache = self._forward(X)
        err = pred[:, 0] - y
        loss = float(np.mean(err ** 2))
        return loss, self._backprop(cache, (2.0 * err / len(X))[:, None])

    def restrict(self, x: np.ndarray, free: np.ndarray) -> "Network":
        """Equivalent network over ``x[free]`` with every other input frozen.

        The frozen inputs fold into the first layer's bias, so evaluation
        and gradients cost only as much as the free block.
        """
        x = self._check(x)
        free = np.asarray(free, dtype=int)
        fixed = np.setdiff1d(np.arange(self.n_in), free)
        first = self.layers[0]
        bias = first.b + first.W[:, fixed] @ x[fixed]
        head = DenseLayer(first.W[:, free], bias, first.activation)
        return Network([head, *self.layers[1:]])

    def save(self, path) -> None:
        arrays = {}
        for i, layer in enumerate(self.layers):
            arrays[f"W{i}"] = layer.W
            arrays[f"b{i}"] = layer.b
        if self.scaler is not None:
            arrays["scaler_lo"] = self.scaler.lo
            arrays["scaler_hi"] = self.scaler.hi
        header = {
            "format": "fogsched-network",
            "version": FORMAT_VERSION,
            "activations": [l.activation for l in self.layers],
            "sizes": [self.n_in] + [l.n_out for l in self.layers],
            "meta": self.meta,
        }
        arrays["header"] = np.array(json.dumps(header, sort_keys=True))
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "Network":
        with np.load(Path(path), allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header.get("format") != "fogsched-network":
                raise ValueError(f"{path}: not a network file")
            if header["version"] > FORMAT_VERSION:
                raise ValueError(f"{path}: unsupported format version {header['version']}")
            layers = [
                DenseLayer(data[f"W{i}"], data[f"b{i}"], act) for i, act in enumerate(header["activations"])
            ]
            scaler = None
            if "scaler_lo" in data:
                scaler = Scaler(data["scaler_lo"], data["scaler_hi"])
        return cls(layers, scaler, header.get("meta"))
