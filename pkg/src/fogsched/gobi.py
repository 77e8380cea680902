"""GOBI: gradient descent on the decision block of a learned objective surrogate."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from fogsched.model import N_FEATURES, Decision, objective
from fogsched.nn import AdamW, Network, Scaler, minimize_input, train_step
from fogsched.nn.minimize import DEFAULT_EPS, DEFAULT_LR, DEFAULT_MAX_ITER

__all__ = [
    "HOST_FEATURES",
    "InputLayout",
    "FeatureEncoding",
    "encode",
    "fit_scaler",
    "decode",
    "fine_tune",
    "GobiScheduler",
    "objective",
]

log = logging.getLogger(__name__)

HOST_FEATURES = 2 * N_FEATURES + 1  # utilization, capacity, latency
ONLINE_LR = 1e-5


@dataclass(frozen=True)
class InputLayout:
    """Offsets of the blocks inside a flattened surrogate input.

    Order is ``[phi(A), phi(H), (objective slot), phi(D)]``; the objective
    slot only exists for the extended surrogate.
    """

    n_hosts: int
    star: bool = False

    @property
    def max_tasks(self) -> int:
        return self.n_hosts ** 2

    @property
    def task_size(self) -> int:
        return self.max_tasks * N_FEATURES

    @property
    def host_size(self) -> int:
        return self.n_hosts * HOST_FEATURES

    @property
    def objective_index(self) -> Optional[int]:
        return self.task_size + self.host_size if self.star else None

    @property
    def decision_start(self) -> int:
        return self.task_size + self.host_size + int(self.star)

    @property
    def dim(self) -> int:
        return self.decision_start + self.max_tasks * self.n_hosts

    def decision_indices(self, n_rows: int) -> np.ndarray:
        """Flat indices of the first ``n_rows`` rows of the decision block."""
        return self.decision_start + np.arange(n_rows * self.n_hosts)

    def decision_block(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[self.decision_start:].reshape(self.max_tasks, self.n_hosts)


@dataclass
class FeatureEncoding:
    """Matrix view of one surrogate input before flattening."""

    tasks: np.ndarray  # (M, 4) last granted utilization, zero padded
    hosts: np.ndarray  # (|H|, 9)
    decision: np.ndarray  # (M, |H|) one-hot rows for Y_t
    task_ids: list

    @property
    def layout(self) -> InputLayout:
        return InputLayout(self.hosts.shape[0])

    def vector(self, scaler: Optional[Scaler] = None, objective_value: Optional[float] = None) -> np.ndarray:
        parts = [self.tasks.ravel(), self.hosts.ravel()]
        if objective_value is not None:
            parts.append([float(objective_value)])
        parts.append(self.decision.ravel())
        x = np.concatenate(parts)
        return scaler.transform(x) if scaler is not None else x


def encode(state, decision: Decision | dict | None = None) -> FeatureEncoding:
    """Encode ``state``'s Y_t and a decision as task, host and decision matrices.

    Rows follow creation interval (ties by the seeded tiebreak key).
    Queued tasks the decision skips get an all-zero row. Tasks beyond M
    rows are left out with a warning; they stay queued and are encoded
    once room frees up.
    """
    hosts = state.hosts
    n_hosts = len(hosts)
    layout = InputLayout(n_hosts)
    tasks = state.candidates()
    if len(tasks) > layout.max_tasks:
        log.warning("%d tasks exceed the %d encodable rows; deferring the rest", len(tasks), layout.max_tasks)
        tasks = tasks[: layout.max_tasks]

    task_mat = np.zeros((layout.max_tasks, N_FEATURES))
    dec_mat = np.zeros((layout.max_tasks, n_hosts))
    assign = decision.as_dict() if isinstance(decision, Decision) else dict(decision or {})
    for row, task in enumerate(tasks):
        if task.last_util is not None:
            task_mat[row] = task.last_util
        # running tasks the decision leaves alone stay where they are
        host = assign.get(task.id, task.host)
        if host is not None:
            dec_mat[row, host] = 1.0

    host_mat = np.zeros((n_hosts, HOST_FEATURES))
    host_mat[:, :N_FEATURES] = state.host_util
    host_mat[:, N_FEATURES:2 * N_FEATURES] = [h.capacity for h in hosts]
    host_mat[:, -1] = [h.latency for h in hosts]
    return FeatureEncoding(task_mat, host_mat, dec_mat, [t.id for t in tasks])


def fit_scaler(X: np.ndarray, layout: InputLayout) -> Scaler:
    """Per-feature min-max bounds shared by all rows of a block.

    Lower bounds are capped at 0 so zero padding maps inside the range.
    The objective slot and the decision block already live in [0, 1] and
    are passed through unchanged.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    lo = np.zeros(layout.dim)
    hi = np.ones(layout.dim)
    blocks = (
        (0, layout.max_tasks, N_FEATURES),
        (layout.task_size, layout.n_hosts, HOST_FEATURES),
    )
    for start, rows, width in blocks:
        block = X[:, start:start + rows * width].reshape(len(X), rows, width)
        f_lo = np.minimum(block.min(axis=(0, 1)), 0.0)
        f_hi = block.max(axis=(0, 1))
        f_hi = np.where(f_hi > f_lo, f_hi, f_lo + 1.0)
        lo[start:start + rows * width] = np.tile(f_lo, rows)
        hi[start:start + rows * width] = np.tile(f_hi, rows)
    return Scaler(lo, hi)


def decode(block: np.ndarray, task_ids: Sequence[int], grad: Optional[np.ndarray] = None) -> Decision:
    """Row-wise argmax of a relaxed decision block.

    Box clamping leaves many entries tied at the same bound. With ``grad``
    (the surrogate's gradient over the block) ties go to the host whose
    entry lowers the surrogate fastest; without it, to the lowest index.
    """
    rows = np.asarray(block)[: len(task_ids)]
    pairs = []
    for k, (tid, row) in enumerate(zip(task_ids, rows)):
        tied = np.flatnonzero(row >= row.max() - 1e-12)
        if grad is not None and len(tied) > 1:
            host = tied[np.argmin(np.asarray(grad)[k, tied])]
        else:
            host = tied[0]
        pairs.append((tid, int(host)))
    return Decision(tuple(pairs))


def fine_tune(net: Network, optimizer: AdamW, x: np.ndarray, y: float, t: int) -> float:
    """One online update on the latest observed ``(x, y)``; no-op before t = 2."""
    if t < 2:
        return 0.0
    return train_step(net, x[None, :], np.array([y]), optimizer)


class GobiScheduler:
    """Warm-started input descent over the surrogate, decoded by row argmax.

    Call :meth:`schedule` at the start of each interval and :meth:`observe`
    with the interval's QoS record once it has run.
    """

    name = "gobi"

    def __init__(
        self,
        net: Network,
        seed: int = 0,
        lr: float = DEFAULT_LR,
        eps: float = DEFAULT_EPS,
        max_iter: int = DEFAULT_MAX_ITER,
        method: str = "adam",
        restart_period: Optional[int] = None,
        online_lr: float = ONLINE_LR,
        weight_decay: float = 1e-5,
        freeze: bool = False,
    ):
        self.net = net
        self.rng = np.random.default_rng(seed)
        self.lr = lr
        self.eps = eps
        self.max_iter = max_iter
        self.method = method
        self.restart_period = restart_period
        self.freeze = freeze
        self.optimizer = AdamW(net.params, lr=online_lr, weight_decay=weight_decay)
        self.prev: Optional[Decision] = None
        self.last_x: Optional[np.ndarray] = None
        self.last_y: Optional[float] = None
        self.last_result = None
        self.losses: list = []

    def warm_start(self, state, tasks) -> dict:
        """Previous output where available, else current host, else random."""
        prev = self.prev.as_dict() if self.prev is not None else {}
        n_hosts = len(state.hosts)
        start = {}
        for task in tasks:
            host = prev.get(task.id, task.host)
            if host is None or not 0 <= host < n_hosts:
                host = int(self.rng.integers(n_hosts))
            start[task.id] = host
        return start

    def optimize(self, net: Network, x0: np.ndarray, layout: InputLayout, n_rows: int):
        free = layout.decision_indices(n_rows)
        return minimize_input(
            net, x0, free, lr=self.lr, eps=self.eps, max_iter=self.max_iter,
            method=self.method, restart_period=self.restart_period,
        )

    def schedule(self, state) -> Decision:
        enc = encode(state)
        if not enc.task_ids:
            self.prev = Decision()
            self.last_x = None
            return self.prev
        enc = encode(state, self.warm_start(state, state.candidates()[: len(enc.task_ids)]))
        layout = enc.layout
        x0 = enc.vector(self.net.scaler)
        result = self.optimize(self.net, x0, layout, len(enc.task_ids))
        self.last_result = result
        decision = decode(layout.decision_block(result.x), enc.task_ids, layout.decision_block(result.grad))

        if not self.freeze and self.last_x is not None and self.last_y is not None:
            self.losses.append(fine_tune(self.net, self.optimizer, self.last_x, self.last_y, state.t))

        chosen = encode(state, decision)
        self.last_x = chosen.vector(self.net.scaler)
        self.last_y = None
        self.prev = decision
        return decision

    def observe(self, record) -> None:
        self.last_y = float(record.objective)
