"""Single-cell LSTM that predicts a task's next-interval utilization."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from fogsched.model import UtilizationSample
from fogsched.nn.optim import AdamW

N_UTIL = 4
FORMAT_VERSION = 1


class LstmPredictor:
    """One LSTM cell plus a linear readout back to the 4 utilization features.

    Inputs are divided by ``scale`` before entering the cell and outputs are
    multiplied back, so the weights work on roughly unit-range features.
    A ``None`` entry in a history acts as a reset marker: only samples after
    the last marker are fed to the cell.
    """

    def __init__(self, hidden: int = 16, seed: int = 0, scale: Optional[np.ndarray] = None):
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(hidden)
        self.hidden = hidden
        self.Wx = rng.uniform(-bound, bound, (4 * hidden, N_UTIL))
        self.Wh = rng.uniform(-bound, bound, (4 * hidden, hidden))
        self.b = rng.uniform(-bound, bound, 4 * hidden)
        self.Wy = rng.uniform(-bound, bound, (N_UTIL, hidden))
        self.by = rng.uniform(-bound, bound, N_UTIL)
        self.scale = np.ones(N_UTIL) if scale is None else np.asarray(scale, dtype=float)

    @property
    def params(self) -> list:
        return [self.Wx, self.Wh, self.b, self.Wy, self.by]

    def _run(self, X: np.ndarray):
        """Unroll over ``X`` of shape (batch, steps, 4) in scaled units."""
        B, T, _ = X.shape
        H = self.hidden
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        cache, outputs = [], []
        for t in range(T):
            a = X[:, t] @ self.Wx.T + h @ self.Wh.T + self.b
            i, f, o = expit(a[:, :H]), expit(a[:, H:2 * H]), expit(a[:, 2 * H:3 * H])
            g = np.tanh(a[:, 3 * H:])
            c_prev, h_prev = c, h
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            cache.append((X[:, t], h_prev, c_prev, i, f, o, g, tc, h))
            outputs.append(h @ self.Wy.T + self.by)
        return np.stack(outputs, axis=1), cache

    def predict(self, history: Sequence) -> np.ndarray:
        """One-step-ahead utilization after ``history``; clamped to >= 0."""
        tail = list(history)
        for k in range(len(tail) - 1, -1, -1):
            if tail[k] is None:
                tail = tail[k + 1:]
                break
        if not tail:
            raise ValueError("cannot predict from an empty history")
        X = np.asarray([np.asarray(u, dtype=float) for u in tail])[None] / self.scale
        out, _ = self._run(X)
        return np.maximum(out[0, -1] * self.scale, 0.0)

    def loss_and_gradients(self, X: np.ndarray, Y: np.ndarray) -> tuple:
        """MSE over every step of scaled windows ``X`` against targets ``Y``."""
        out, cache = self._run(X)
        err = out - Y
        loss = float(np.mean(err ** 2))
        dout = 2.0 * err / err.size
        H = self.hidden
        gWx, gWh, gb = np.zeros_like(self.Wx), np.zeros_like(self.Wh), np.zeros_like(self.b)
        gWy = np.einsum("btd,bth->dh", dout, np.stack([c[-1] for c in cache], axis=1))
        gby = dout.sum(axis=(0, 1))
        dh_next = np.zeros((X.shape[0], H))
        dc_next = np.zeros((X.shape[0], H))
        for t in range(X.shape[1] - 1, -1, -1):
            x, h_prev, c_prev, i, f, o, g, tc, _ = cache[t]
            dh = dout[:, t] @ self.Wy + dh_next
            do = dh * tc
            dc = dh * o * (1 - tc ** 2) + dc_next
            di, df, dg = dc * g, dc * c_prev, dc * i
            da = np.concatenate(
                [di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g ** 2)], axis=1
            )
            gWx += da.T @ x
            gWh += da.T @ h_prev
            gb += da.sum(axis=0)
            dh_next = da @ self.Wh
            dc_next = dc * f
        return loss, [gWx, gWh, gb, gWy, gby]

    def fit(
        self,
        sequences: Sequence[np.ndarray],
        epochs: int = 30,
        window: int = 8,
        lr: float = 1e-2,
        batch_size: int = 64,
        seed: int = 0,
    ) -> list:
        """Teacher-forced training on next-step targets; returns epoch losses."""
        seqs = [np.asarray(s, dtype=float) for s in sequences if len(s) >= 2]
        if not seqs:
            raise ValueError("need at least one sequence with two or more samples")
        self.scale = np.maximum(np.max([s.max(axis=0) for s in seqs], axis=0), 1e-9)
        by_len = {}
        for s in seqs:
            s = s / self.scale
            for start in range(0, len(s) - 1, window):
                chunk = s[start:start + window + 1]
                if len(chunk) >= 2:
                    by_len.setdefault(len(chunk), []).append(chunk)
        groups = {n: np.stack(c) for n, c in by_len.items()}
        opt = AdamW(self.params, lr=lr, weight_decay=0.0)
        rng = np.random.default_rng(seed)
        curve = []
        for _ in range(epochs):
            total, count = 0.0, 0
            for n in sorted(groups):
                data = groups[n][rng.permutation(len(groups[n]))]
                for k in range(0, len(data), batch_size):
                    batch = data[k:k + batch_size]
                    loss, grads = self.loss_and_gradients(batch[:, :-1], batch[:, 1:])
                    if not np.isfinite(loss):
                        raise FloatingPointError("LSTM training diverged")
                    opt.step(grads)
                    total += loss * len(batch)
                    count += len(batch)
            curve.append(total / count)
        return curve

    def save(self, path) -> None:
        header = {"format": "fogsched-lstm", "version": FORMAT_VERSION, "hidden": self.hidden}
        with open(path, "wb") as fh:
            np.savez(
                fh, Wx=self.Wx, Wh=self.Wh, b=self.b, Wy=self.Wy, by=self.by, scale=self.scale,
                header=np.array(json.dumps(header)),
            )

    @classmethod
    def load(cls, path) -> "LstmPredictor":
        with np.load(Path(path), allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header.get("format") != "fogsched-lstm":
                raise ValueError(f"{path}: not an LSTM file")
            pred = cls(hidden=header["hidden"])
            for name in ("Wx", "Wh", "b", "Wy", "by", "scale"):
                setattr(pred, name, data[name].copy())
        return pred


def lstm_predict(pred: LstmPredictor, history: Sequence) -> UtilizationSample:
    return UtilizationSample.from_array(pred.predict(history))
