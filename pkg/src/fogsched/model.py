"""Domain types and the pure accounting rules shared by every other module.

Resource vectors are always ordered ``(ips, ram, disk_bw, net_bw)``; that
ordering is used for capacities, demands and encoded features alike.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

RESOURCES = ("ips", "ram", "disk_bw", "net_bw")
N_FEATURES = len(RESOURCES)
POWER_POINTS = np.linspace(0.0, 1.0, 11)

# absorbs float noise when a demand exactly fills a host
_CAPACITY_EPS = 1e-9


class ContractError(AssertionError):
    """Raised when an internal set-accounting invariant is broken."""


@dataclass(frozen=True)
class UtilizationSample:
    ips: float
    ram: float
    disk_bw: float
    net_bw: float

    def __post_init__(self):
        if min(self.ips, self.ram, self.disk_bw, self.net_bw) < 0:
            raise ValueError(f"negative utilization: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.ips, self.ram, self.disk_bw, self.net_bw], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "UtilizationSample":
        ips, ram, disk, net = (float(v) for v in values)
        return cls(ips, ram, disk, net)


@dataclass(frozen=True)
class Host:
    """One compute node: capacities, power model, latency and price."""

    id: int
    name: str
    ips_capacity: float
    ram_capacity: float
    ram_bw: float
    disk_bw: float
    net_bw: float
    latency: float
    power_curve: tuple
    cost_rate: float
    layer: str

    def __post_init__(self):
        caps = (self.ips_capacity, self.ram_capacity, self.ram_bw, self.disk_bw, self.net_bw)
        if min(caps) <= 0:
            raise ValueError(f"host {self.name}: capacities must be positive")
        if self.latency < 0:
            raise ValueError(f"host {self.name}: negative latency")
        if len(self.power_curve) != 11:
            raise ValueError(f"host {self.name}: power curve needs 11 samples")
        if any(b < a for a, b in zip(self.power_curve, self.power_curve[1:])):
            raise ValueError(f"host {self.name}: power curve must be non-decreasing")
        if self.layer not in ("edge", "cloud"):
            raise ValueError(f"host {self.name}: unknown layer {self.layer!r}")

    @property
    def capacity(self) -> np.ndarray:
        return np.array([self.ips_capacity, self.ram_capacity, self.disk_bw, self.net_bw])

    @property
    def max_power(self) -> float:
        return float(self.power_curve[-1])

    def power(self, cpu_fraction: float) -> float:
        """Watts at the given CPU fraction, linearly interpolated."""
        return float(np.interp(cpu_fraction, POWER_POINTS, self.power_curve))


@dataclass(frozen=True, eq=False)
class TaskSpec:
    """Immutable description of one task as it arrives.

    ``trace`` is an ``(n, 4)`` array with one utilization row per executed
    interval; it is replayed cyclically. ``peak`` is the class-wide maximum
    demand, used to admit tasks that have never run.
    """

    id: int
    created_at: int
    app_class: str
    total_instructions: float
    trace: np.ndarray
    sla_deadline: float
    peak: Optional[np.ndarray] = None

    def __post_init__(self):
        trace = np.asarray(self.trace, dtype=float)
        if trace.ndim != 2 or trace.shape[1] != N_FEATURES or len(trace) == 0:
            raise ValueError(f"task {self.id}: trace must be a non-empty (n, 4) array")
        if (trace < 0).any():
            raise ValueError(f"task {self.id}: negative utilization in trace")
        if not (trace[:, 0] > 0).any():
            raise ValueError(f"task {self.id}: trace never demands any IPS")
        if self.total_instructions <= 0:
            raise ValueError(f"task {self.id}: total_instructions must be positive")
        if self.sla_deadline <= 0:
            raise ValueError(f"task {self.id}: SLA deadline must be positive")
        trace.setflags(write=False)
        object.__setattr__(self, "trace", trace)
        peak = trace.max(axis=0) if self.peak is None else np.asarray(self.peak, dtype=float)
        object.__setattr__(self, "peak", np.maximum(peak, trace.max(axis=0)))

    def sample(self, k: int) -> UtilizationSample:
        return UtilizationSample.from_array(self.trace[k % len(self.trace)])


@dataclass
class TaskState:
    spec: TaskSpec
    tiebreak: float
    host: Optional[int] = None
    instructions_done: float = 0.0
    wait_intervals: int = 0
    executed_intervals: int = 0
    migrating_until: Optional[float] = None
    finished_at: Optional[int] = None
    finish_time: Optional[float] = None
    response_time: Optional[float] = None
    last_util: Optional[np.ndarray] = None
    history: list = field(default_factory=list)

    @property
    def id(self) -> int:
        return self.spec.id

    @property
    def remaining(self) -> float:
        return max(self.spec.total_instructions - self.instructions_done, 0.0)

    def next_demand(self) -> np.ndarray:
        return self.spec.trace[self.executed_intervals % len(self.spec.trace)]

    def copy(self) -> "TaskState":
        twin = TaskState(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        twin.history = list(self.history)
        return twin


@dataclass(frozen=True)
class Decision:
    """Ordered task-to-host assignments for one interval."""

    assignments: tuple = ()

    def __post_init__(self):
        pairs = tuple((int(t), int(h)) for t, h in self.assignments)
        seen = set()
        for task_id, _ in pairs:
            if task_id in seen:
                raise ValueError(f"task {task_id} assigned twice")
            seen.add(task_id)
        object.__setattr__(self, "assignments", pairs)

    def __len__(self):
        return len(self.assignments)

    def __iter__(self):
        return iter(self.assignments)

    def as_dict(self) -> dict:
        return dict(self.assignments)

    def validate(self, n_hosts: int) -> None:
        for task_id, host in self.assignments:
            if not 0 <= host < n_hosts:
                raise ValueError(f"task {task_id}: host {host} out of range")


@dataclass
class QoSRecord:
    """QoS parameters of one executed interval.

    The ``*_sum`` and count fields exist so that every run-level aggregate
    can be recomputed from the per-interval rows alone.
    """

    interval: int = 0
    aec: float = 0.0
    art: float = 0.0
    objective: float = 0.0
    energy_kwh: float = 0.0
    slo_violation_fraction: float = 0.0
    fairness: float = 1.0
    avg_migration_time: float = 0.0
    avg_wait_intervals: float = 0.0
    cost: float = 0.0
    n_active: int = 0
    n_waiting: int = 0
    n_leaving: int = 0
    n_migrations: int = 0
    n_slo_violations: int = 0
    response_time_sum: float = 0.0
    response_time_sq_sum: float = 0.0
    migration_time_sum: float = 0.0
    wait_sum: float = 0.0
    max_response_time: float = 0.0
    mean_cpu: float = 0.0
    scheduling_time: float = 0.0

    def __post_init__(self):
        for name in ("aec", "art", "slo_violation_fraction", "fairness"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0 + 1e-12:
                raise ValueError(f"{name}={value} outside [0, 1]")


def _admission_demand(state, task: TaskState, predicted) -> np.ndarray:
    if task.host is None:
        return task.spec.peak
    if predicted is not None and task.id in predicted:
        return predicted[task.id]
    return task.next_demand()


def feasible_subset(decision: Decision, state, predicted: Optional[dict] = None) -> Decision:
    """Return the executable subset of ``decision``.

    Pairs are tried in descending wait time (ties by each task's seeded
    tiebreak key). A pair survives only if the task's demand plus the target
    host's load fits the host's capacity in every resource; otherwise it is
    dropped and the task stays where it was. Tasks that have never run are
    checked against their class peak demand. No-op pairs (task already on
    the target host) are not part of the result.
    """
    hosts = state.hosts
    loads = state.host_loads(predicted).copy()
    caps = np.array([h.capacity for h in hosts])
    pending = []
    for task_id, host_id in decision:
        task = state.task(task_id)
        if task is None or not 0 <= host_id < len(hosts) or task.host == host_id:
            continue
        pending.append((task, host_id))
    pending.sort(key=lambda p: (-p[0].wait_intervals, p[0].tiebreak))

    executed = []
    for task, host_id in pending:
        demand = _admission_demand(state, task, predicted)
        if np.all(loads[host_id] + demand <= caps[host_id] + _CAPACITY_EPS):
            loads[host_id] += demand
            if task.host is not None:
                loads[task.host] -= demand
            executed.append((task.id, host_id))
    return Decision(tuple(executed))


def advance_sets(
    active_prev: Iterable[int],
    waiting_prev: Iterable[int],
    new: Iterable[int],
    placed: Iterable[int],
    completed: Iterable[int],
) -> tuple:
    """Roll the active and waiting sets forward by one interval.

    ``placed`` holds the new and waiting tasks that were allocated this
    interval; ``completed`` are the tasks that left at the end of the
    previous interval. Returns ``(active, waiting)`` as frozensets.
    """
    active_prev, waiting_prev = frozenset(active_prev), frozenset(waiting_prev)
    new, placed, completed = frozenset(new), frozenset(placed), frozenset(completed)
    if not completed <= active_prev:
        raise ContractError("completed tasks must come from the previous active set")
    if active_prev & waiting_prev or new & (active_prev | waiting_prev):
        raise ContractError("task sets overlap")
    if not placed <= new | waiting_prev:
        raise ContractError("only new or waiting tasks can be placed")
    active = placed | (active_prev - completed)
    waiting = (waiting_prev - placed) | (new - placed)
    if active & waiting:
        raise ContractError("a task is both active and waiting")
    return active, waiting


def objective(aec: float, art: float, alpha: float = 0.5, beta: float = 0.5) -> float:
    """Scalar QoS objective: weighted energy plus weighted response time."""
    if abs(alpha + beta - 1.0) > 1e-9:
        raise ValueError(f"alpha + beta must be 1, got {alpha + beta}")
    return alpha * aec + beta * art
