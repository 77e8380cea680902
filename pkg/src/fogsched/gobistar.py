"""GOBI*: GOBI plus a simulated look-ahead objective fed to an extended surrogate."""

from __future__ import annotations

from typing import Mapping, Optional

import numpy as np

from fogsched.gobi import ONLINE_LR, GobiScheduler, InputLayout, decode, encode
from fogsched.model import N_FEATURES, Decision
from fogsched.nn import AdamW, LstmPredictor, Network
from fogsched.nn.minimize import DEFAULT_EPS, DEFAULT_LR, DEFAULT_MAX_ITER
from fogsched.simulator import lookahead

FD_STEP = 1e-3


def star_layout(n_hosts: int) -> InputLayout:
    return InputLayout(n_hosts, star=True)


def decision_mse(d_bar: np.ndarray, d: np.ndarray) -> float:
    d_bar, d = np.asarray(d_bar, dtype=float), np.asarray(d, dtype=float)
    if d_bar.shape != d.shape:
        raise ValueError(f"decision shapes differ: {d_bar.shape} vs {d.shape}")
    return float(np.mean((d_bar - d) ** 2))


def star_loss(pred: float, observed: float, gobi_obj: float, star_obj: float, d_bar, d) -> float:
    """Surrogate error plus, when GOBI's simulated outcome beat ours, the decision gap.

    ``gobi_obj`` is the look-ahead objective of GOBI's decision and
    ``star_obj`` the objective actually observed for our decision.
    """
    loss = (float(pred) - float(observed)) ** 2
    if gobi_obj < star_obj:
        loss += decision_mse(d_bar, d)
    return loss


def imitation_gradients(net: Network, x: np.ndarray, layout: InputLayout, d_bar, lr: float) -> list:
    """Parameter gradient of the decision gap through one unrolled descent step.

    Treating the chosen decision as ``D = D0 - lr * grad_D f(x)``, the chain
    rule gives ``dL/dtheta = -lr * d/dtheta <grad_D f(x), v>`` with
    ``v = dL/dD``. That mixed derivative is a directional difference of
    parameter gradients along ``v``.
    """
    d = layout.decision_block(x)
    v = 2.0 * (d - np.asarray(d_bar, dtype=float)) / d.size
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return [np.zeros_like(p) for p in net.params]
    direction = np.zeros_like(x)
    direction[layout.decision_start:] = (v / norm).ravel()
    plus = net.backward(x + FD_STEP * direction, np.ones(1))
    minus = net.backward(x - FD_STEP * direction, np.ones(1))
    return [-lr * norm * (gp - gm) / (2 * FD_STEP) for gp, gm in zip(plus, minus)]


def fine_tune_star(
    net: Network,
    optimizer: AdamW,
    x: np.ndarray,
    observed: float,
    gobi_obj: float,
    d_bar: np.ndarray,
    t: int,
    lr: float = DEFAULT_LR,
) -> float:
    """One online update of the extended surrogate with the composite loss.

    Returns the loss before the update; a no-op returning 0 before t = 2.
    """
    if t < 2:
        return 0.0
    layout = star_layout(net.meta.get("n_hosts") or _hosts_from_dim(net.n_in))
    pred = float(net(x))
    loss, grads = net.mse_gradients(x[None, :], np.array([observed]))
    if not np.isfinite(loss):
        raise FloatingPointError("online fine-tuning diverged")
    d = layout.decision_block(x)
    if gobi_obj < observed:
        extra = imitation_gradients(net, x, layout, d_bar, lr)
        grads = [g + e for g, e in zip(grads, extra)]
    optimizer.step(grads)
    return star_loss(pred, observed, gobi_obj, observed, d_bar, d)


def _hosts_from_dim(n_in: int) -> int:
    # n_in = 4 H^2 + 9 H + 1 + H^3
    for h in range(1, 1000):
        if InputLayout(h, star=True).dim == n_in:
            return h
    raise ValueError(f"input size {n_in} matches no host count")


def predict_utilizations(
    tasks, lstm: Optional[LstmPredictor], class_means: Mapping, default: Optional[np.ndarray] = None
) -> dict:
    """Next-interval utilization per task: LSTM on history, class mean otherwise."""
    fallback = np.zeros(N_FEATURES) if default is None else np.asarray(default, dtype=float)
    out = {}
    for task in tasks:
        if task.history and lstm is not None:
            out[task.id] = lstm.predict(task.history)
        else:
            out[task.id] = np.asarray(class_means.get(task.spec.app_class, fallback), dtype=float)
    return out


class GobiStarScheduler:
    """Look-ahead-informed input descent on the extended surrogate.

    The wrapped GOBI scheduler is frozen and is fed this scheduler's
    previous output as its warm start.
    """

    name = "gobi*"

    def __init__(
        self,
        net: Network,
        gobi: GobiScheduler,
        lstm: Optional[LstmPredictor],
        class_means: Mapping,
        seed: int = 0,
        lr: float = DEFAULT_LR,
        eps: float = DEFAULT_EPS,
        max_iter: int = DEFAULT_MAX_ITER,
        online_lr: float = ONLINE_LR,
        weight_decay: float = 1e-5,
        freeze: bool = False,
    ):
        self.net = net
        self.gobi = gobi
        self.gobi.freeze = True
        self.lstm = lstm
        self.class_means = dict(class_means)
        self.default_util = np.mean(list(self.class_means.values()), axis=0) if self.class_means else None
        self.rng = np.random.default_rng(seed)
        self.lr = lr
        self.eps = eps
        self.max_iter = max_iter
        self.freeze = freeze
        self.optimizer = AdamW(net.params, lr=online_lr, weight_decay=weight_decay)
        self.prev: Optional[Decision] = None
        self.pending: Optional[dict] = None
        self.losses: list = []
        self.indicator: list = []
        self.last_lookahead = None

    def schedule(self, state) -> Decision:
        tasks = state.candidates()
        if not tasks:
            self.prev = Decision()
            self.pending = None
            return self.prev

        self.gobi.prev = self.prev
        d_bar = self.gobi.schedule(state)
        predicted = predict_utilizations(tasks, self.lstm, self.class_means, self.default_util)
        record = lookahead(state, d_bar, predicted)
        self.last_lookahead = record
        obj_bar = record.objective

        self.gobi.prev = self.prev
        start = self.gobi.warm_start(state, tasks)
        enc = encode(state, start)
        layout = star_layout(len(state.hosts))
        x0 = enc.vector(self.net.scaler, obj_bar)
        result = self.gobi.optimize(self.net, x0, layout, len(enc.task_ids))
        decision = decode(layout.decision_block(result.x), enc.task_ids, layout.decision_block(result.grad))

        if self.pending is not None and "observed" in self.pending:
            p = self.pending
            self.indicator.append(p["obj_bar"] < p["observed"])
            if not self.freeze:
                self.losses.append(
                    fine_tune_star(
                        self.net, self.optimizer, p["x"], p["observed"], p["obj_bar"], p["d_bar"], state.t, self.lr
                    )
                )

        self.pending = {
            "x": encode(state, decision).vector(self.net.scaler, obj_bar),
            "obj_bar": obj_bar,
            "d_bar": encode(state, d_bar).decision,
        }
        self.prev = decision
        return decision

    def observe(self, record) -> None:
        if self.pending is not None:
            self.pending["observed"] = float(record.objective)
