"""Interval-stepped, trace-driven simulator and its single-step look-ahead."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from fogsched.model import (
    N_FEATURES,
    ContractError,
    Decision,
    Host,
    QoSRecord,
    TaskSpec,
    TaskState,
    UtilizationSample,
    advance_sets,
    feasible_subset,
    objective,
)

log = logging.getLogger(__name__)

JOULES_PER_KWH = 3.6e6


class MissingPrediction(KeyError):
    """A look-ahead was asked to run a task it has no utilization for."""


@dataclass
class SimState:
    """Everything the simulator knows at the start of interval ``t``.

    ``new`` holds the tasks admitted for this interval (N_t); ``waiting``
    is W_{t-1}; ``active`` is A_{t-1} minus the tasks that already left.
    """

    hosts: list
    delta: float = 300.0
    alpha: float = 0.5
    beta: float = 0.5
    seed: int = 0
    t: int = 0
    active: dict = field(default_factory=dict)
    waiting: dict = field(default_factory=dict)
    new: dict = field(default_factory=dict)
    finished: list = field(default_factory=list)
    host_util: Optional[np.ndarray] = None
    cpu_history: list = field(default_factory=list)
    max_response_time: float = 0.0
    history: list = field(default_factory=list)
    rng: Optional[np.random.Generator] = None

    def __post_init__(self):
        if self.host_util is None:
            self.host_util = np.zeros((len(self.hosts), N_FEATURES))
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([h.capacity for h in self.hosts])

    def task(self, task_id: int) -> Optional[TaskState]:
        for pool in (self.active, self.waiting, self.new):
            if task_id in pool:
                return pool[task_id]
        return None

    def candidates(self) -> list:
        """Y_t: new, waiting and still-active tasks by creation interval."""
        tasks = [*self.new.values(), *self.waiting.values(), *self.active.values()]
        return sorted(tasks, key=lambda s: (s.spec.created_at, s.tiebreak))

    def host_loads(self, predicted: Optional[Mapping] = None) -> np.ndarray:
        loads = np.zeros((len(self.hosts), N_FEATURES))
        for task in self.active.values():
            if predicted is not None and task.id in predicted:
                loads[task.host] += predicted[task.id]
            else:
                loads[task.host] += task.next_demand()
        return loads

    def admit(self, specs: Iterable[TaskSpec]) -> "SimState":
        """Return a copy with ``specs`` registered as this interval's arrivals."""
        twin = self.copy()
        for spec in specs:
            if twin.task(spec.id) is not None or any(f.id == spec.id for f in twin.finished):
                raise ValueError(f"duplicate task id {spec.id}")
            twin.new[spec.id] = TaskState(spec=spec, tiebreak=float(twin.rng.random()))
        return twin

    def copy(self) -> "SimState":
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return SimState(
            hosts=self.hosts,
            delta=self.delta,
            alpha=self.alpha,
            beta=self.beta,
            seed=self.seed,
            t=self.t,
            active={k: v.copy() for k, v in self.active.items()},
            waiting={k: v.copy() for k, v in self.waiting.items()},
            new={k: v.copy() for k, v in self.new.items()},
            finished=list(self.finished),
            host_util=self.host_util.copy(),
            cpu_history=list(self.cpu_history),
            max_response_time=self.max_response_time,
            history=list(self.history),
            rng=rng,
        )


def migration_time(task: TaskState, src: Host, dst: Host) -> float:
    """Seconds to move ``task``'s container from ``src`` to ``dst``.

    Payload is the container's RAM footprint; latency is only paid when the
    move crosses the edge/cloud boundary.
    """
    if src.id == dst.id:
        return 0.0
    if task.last_util is not None:
        footprint = float(task.last_util[1])
    else:
        footprint = float(task.next_demand()[1])
    latency = 0.0 if src.layer == dst.layer else src.latency + dst.latency
    return latency + footprint / min(src.net_bw, dst.net_bw)


def interval_energy(hosts: Sequence[Host], cpu_fractions: Sequence[float], delta: float) -> tuple:
    """Energy of one interval at constant per-host CPU fractions.

    Returns ``(kwh, joules)``; the joule figure is the AEC numerator.
    """
    fractions = np.asarray(cpu_fractions, dtype=float)
    if ((fractions < 0) | (fractions > 1)).any():
        log.warning("CPU fraction outside [0, 1] clamped: %s", fractions)
        fractions = np.clip(fractions, 0.0, 1.0)
    joules = sum(h.power(f) * delta for h, f in zip(hosts, fractions))
    return joules / JOULES_PER_KWH, joules


def _host_energy(host: Host, windows: list, delta: float) -> float:
    """Integrate power over one interval given per-task (start, end, ips)."""
    cuts = sorted({0.0, delta, *(w[0] for w in windows), *(w[1] for w in windows)})
    joules = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        ips = sum(r for s, e, r in windows if s <= mid < e)
        frac = min(max(ips / host.ips_capacity, 0.0), 1.0)
        joules += host.power(frac) * (hi - lo)
    return joules


def step(
    state: SimState,
    decision: Decision,
    new_tasks: Sequence[TaskSpec] = (),
    predicted: Optional[Mapping] = None,
) -> tuple:
    """Execute interval ``state.t`` under ``decision``.

    Returns ``(next_state, record)``; ``state`` itself is left untouched.
    With ``predicted`` (task id -> 4-vector) the given utilizations replace
    the trace for every task that runs, which is how look-ahead works.
    """
    s = state.admit(new_tasks) if new_tasks else state.copy()
    hosts, delta = s.hosts, s.delta

    yt_ids = {task.id for task in s.candidates()}
    wanted = Decision(tuple((tid, h) for tid, h in decision if tid in yt_ids and 0 <= h < len(hosts)))
    executed = feasible_subset(wanted, s, predicted)

    migrations = {}
    placed = set()
    for task_id, host_id in executed:
        task = s.task(task_id)
        if task.host is None:
            placed.add(task_id)
        else:
            migrations[task_id] = migration_time(task, hosts[task.host], hosts[host_id])
        task.host = host_id

    active_ids, waiting_ids = advance_sets(s.active, s.waiting, s.new, placed, ())
    pool = {**s.active, **s.waiting, **s.new}
    s.active = {i: pool[i] for i in sorted(active_ids)}
    s.waiting = {i: pool[i] for i in sorted(waiting_ids)}
    s.new = {}
    for task in s.active.values():
        if task.host is None:
            raise ContractError(f"active task {task.id} has no host")

    demands = {}
    for task in s.active.values():
        if predicted is not None:
            if task.id not in predicted:
                raise MissingPrediction(task.id)
            demands[task.id] = np.maximum(np.asarray(predicted[task.id], dtype=float), 0.0)
        else:
            demands[task.id] = task.next_demand()

    by_host = [[] for _ in hosts]
    for task in s.active.values():
        by_host[task.host].append(task)

    host_util = np.zeros((len(hosts), N_FEATURES))
    cpu_frac = np.zeros(len(hosts))
    joules = 0.0
    leaving = []
    t0 = s.t * delta
    for host, tasks in zip(hosts, by_host):
        windows = []
        if tasks:
            total = np.sum([demands[t.id] for t in tasks], axis=0)
            scale = np.ones(N_FEATURES)
            over = total > host.capacity
            scale[over] = host.capacity[over] / total[over]
            for task in tasks:
                granted = demands[task.id] * scale
                offset = min(migrations.get(task.id, 0.0), delta)
                rate = granted[0]
                budget = rate * (delta - offset)
                end = delta
                if rate > 0 and budget >= task.remaining:
                    end = offset + task.remaining / rate
                    task.instructions_done = task.spec.total_instructions
                    task.finished_at = s.t
                    task.finish_time = t0 + end
                    task.response_time = task.finish_time - task.spec.created_at * delta
                    leaving.append(task)
                else:
                    task.instructions_done += budget
                windows.append((offset, end, rate))
                host_util[host.id] += granted * (end - offset) / delta
                task.last_util = granted
                task.history.append(granted)
                task.executed_intervals += 1
                if task.id in migrations:
                    task.migrating_until = t0 + offset
        joules += _host_energy(host, windows, delta)
        cpu_frac[host.id] = min(host_util[host.id][0] / host.ips_capacity, 1.0)

    for task in s.waiting.values():
        task.wait_intervals += 1

    n_active = len(s.active)
    max_power = sum(h.max_power for h in hosts) * delta
    aec = joules / (max(n_active, 1) * max_power)

    responses = np.array([t.response_time for t in leaving])
    if len(responses):
        s.max_response_time = max(s.max_response_time, float(responses.max()))
        art = float(responses.mean() / s.max_response_time) if s.max_response_time > 0 else 0.0
        fairness = float(responses.sum() ** 2 / (len(responses) * (responses ** 2).sum()))
        late = int(sum(t.response_time > t.spec.sla_deadline for t in leaving))
    else:
        art, fairness, late = 0.0, 1.0, 0
    mig_sum = float(sum(migrations.values()))
    wait_sum = float(sum(t.wait_intervals for t in leaving))

    record = QoSRecord(
        interval=s.t,
        aec=min(aec, 1.0),
        art=min(art, 1.0),
        objective=objective(min(aec, 1.0), min(art, 1.0), s.alpha, s.beta),
        energy_kwh=joules / JOULES_PER_KWH,
        slo_violation_fraction=late / len(leaving) if leaving else 0.0,
        fairness=min(fairness, 1.0),
        avg_migration_time=mig_sum / len(migrations) if migrations else 0.0,
        avg_wait_intervals=wait_sum / len(leaving) if leaving else 0.0,
        cost=sum(h.cost_rate for h in hosts) * delta / 3600.0,
        n_active=n_active,
        n_waiting=len(s.waiting),
        n_leaving=len(leaving),
        n_migrations=len(migrations),
        n_slo_violations=late,
        response_time_sum=float(responses.sum()) if len(responses) else 0.0,
        response_time_sq_sum=float((responses ** 2).sum()) if len(responses) else 0.0,
        migration_time_sum=mig_sum,
        wait_sum=wait_sum,
        max_response_time=s.max_response_time,
        mean_cpu=float(cpu_frac.mean()),
    )

    for task in leaving:
        del s.active[task.id]
        s.finished.append(task)
    s.host_util = host_util
    s.cpu_history.append(cpu_frac)
    s.history.append(record)
    s.t += 1
    return s, record


def lookahead(state: SimState, decision: Decision, predicted_utils: Mapping) -> QoSRecord:
    """QoS of running ``decision`` for one interval on predicted utilizations.

    ``state`` is not modified. Every task that would be active needs an
    entry in ``predicted_utils`` (``UtilizationSample`` or 4-vector).
    """
    predicted = {
        tid: u.as_array() if isinstance(u, UtilizationSample) else np.asarray(u, dtype=float)
        for tid, u in predicted_utils.items()
    }
    _, record = step(state, decision, predicted=predicted)
    return record
