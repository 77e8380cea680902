"""Offline training of the objective surrogates and the utilization LSTM."""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np

from fogsched.gobi import InputLayout, fit_scaler
from fogsched.harness.datasets import class_means, read_dataset, task_sequences
from fogsched.nn import AdamW, LstmPredictor, Network, train_step

CONVERGENCE_WINDOW = 10


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def converged(curve: list, tolerance: float, window: int = CONVERGENCE_WINDOW) -> bool:
    """Summed absolute change between consecutive epochs over the last ``window`` epochs."""
    if len(curve) <= window:
        return False
    return float(np.abs(np.diff(curve[-window - 1:])).sum()) < tolerance


def split(n: int, test_fraction: float, rng: np.random.Generator) -> tuple:
    order = rng.permutation(n)
    n_test = max(1, int(round(n * test_fraction))) if n > 1 else 0
    return order[n_test:], order[:n_test]


def fit_network(net: Network, X: np.ndarray, y: np.ndarray, tcfg, seed: int = 0) -> list:
    """Mini-batch AdamW until the convergence rule or the epoch cap; returns the curve.

    Each curve entry is ``(epoch, train_mse, test_mse)``; ``X`` must
    already be normalized.
    """
    if len(X) < 2:
        raise ValueError("need at least two rows to train")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = split(len(X), tcfg.test_fraction, rng)
    opt = AdamW(net.params, lr=tcfg.lr, weight_decay=tcfg.weight_decay)
    curve, losses = [], []
    for epoch in range(tcfg.max_epochs):
        order = train_idx[rng.permutation(len(train_idx))]
        total = 0.0
        for k in range(0, len(order), tcfg.batch_size):
            batch = order[k:k + tcfg.batch_size]
            total += train_step(net, X[batch], y[batch], opt) * len(batch)
        train_mse = total / len(order)
        test_mse = float(np.mean((net(X[test_idx]) - y[test_idx]) ** 2)) if len(test_idx) else train_mse
        curve.append((epoch, train_mse, test_mse))
        losses.append(train_mse)
        if epoch + 1 >= tcfg.min_epochs and converged(losses, tcfg.tolerance):
            break
    return curve


def write_curve(curve: list, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_mse", "test_mse"])
        for row in curve:
            writer.writerow([row[0], *(repr(float(v)) for v in row[1:])])


def curve_path(model_path) -> Path:
    model_path = Path(model_path)
    return model_path.with_name(model_path.stem + ".curve.csv")


def train_surrogate(dataset, out, tcfg, seed: int = 0) -> dict:
    """Train f (or f* for a star dataset) on an encoded dataset and save it."""
    header, rows = read_dataset(dataset)
    if not rows:
        raise ValueError(f"{dataset}: dataset has no rows")
    star = header["kind"] == "gobi*"
    layout = InputLayout(header["n_hosts"], star=star)
    X = np.array([r["x"] for r in rows], dtype=float)
    y = np.array([r["y"] for r in rows], dtype=float)
    scaler = fit_scaler(X, layout)
    net = Network.approximator(layout.dim, seed=seed)
    net.scaler = scaler
    curve = fit_network(net, scaler.transform(X), y, tcfg, seed)
    net.meta = {
        "kind": header["kind"],
        "n_hosts": header["n_hosts"],
        "class_means": class_means(rows),
        "dataset": file_digest(dataset),
        "epochs": len(curve),
        "test_mse": curve[-1][2],
    }
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    net.save(out)
    write_curve(curve, curve_path(out))
    return {"model": str(out), "epochs": len(curve), "train_mse": curve[-1][1], "test_mse": curve[-1][2]}


def train_lstm(dataset, out, tcfg, seed: int = 0) -> dict:
    """Fit the utilization predictor on the task series contained in a dataset."""
    _, rows = read_dataset(dataset)
    sequences = task_sequences(rows)
    if not sequences:
        raise ValueError(f"{dataset}: no task utilization series to learn from")
    pred = LstmPredictor(hidden=tcfg.lstm_hidden, seed=seed)
    losses = pred.fit(sequences, epochs=tcfg.lstm_epochs, seed=seed)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    pred.save(out)
    write_curve([(i, loss, loss) for i, loss in enumerate(losses)], curve_path(out))
    return {"model": str(out), "epochs": len(losses), "train_mse": losses[-1]}


def train(kind: str, dataset, out, tcfg, seed: int = 0) -> dict:
    if kind in ("f", "f*"):
        header, _ = read_dataset(dataset)
        expected = "gobi*" if kind == "f*" else "gobi"
        if header["kind"] != expected:
            raise ValueError(f"model {kind} needs a {expected!r} dataset, got {header['kind']!r}")
        return train_surrogate(dataset, out, tcfg, seed)
    if kind == "lstm":
        return train_lstm(dataset, out, tcfg, seed)
    raise ValueError(f"unknown model kind {kind!r}; choose f, f* or lstm")
