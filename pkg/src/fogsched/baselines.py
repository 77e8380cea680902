"""Comparison schedulers: random, LR-MMT, MAD-MC and a surrogate-driven GA."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from fogsched.gobi import InputLayout, encode
from fogsched.model import Decision
from fogsched.nn import Network
from fogsched.simulator import migration_time


class Scheduler:
    """Shared interface: ``schedule`` before an interval, ``observe`` after."""

    name = "base"

    def schedule(self, state) -> Decision:
        raise NotImplementedError

    def observe(self, record) -> None:
        pass


class RandomScheduler(Scheduler):
    """Uniform host per queued task plus a random subset of running tasks."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def schedule(self, state) -> Decision:
        n_hosts = len(state.hosts)
        pairs = []
        queued = [t for t in state.candidates() if t.host is None]
        running = [t for t in state.candidates() if t.host is not None]
        for task in queued:
            pairs.append((task.id, int(self.rng.integers(n_hosts))))
        if running:
            k = int(self.rng.integers(len(running) + 1))
            for idx in sorted(self.rng.choice(len(running), size=k, replace=False)):
                pairs.append((running[idx].id, int(self.rng.integers(n_hosts))))
        return Decision(tuple(pairs))


def _demand(task) -> np.ndarray:
    return task.spec.peak if task.host is None else task.next_demand()


def place_least_utilized(state, tasks, loads: np.ndarray) -> list:
    """Put each task on the feasible host with the lowest projected CPU fraction.

    ``loads`` is updated in place; tasks with no feasible host are skipped.
    """
    caps = state.capacities
    pairs = []
    for task in tasks:
        demand = _demand(task)
        fits = np.all(loads + demand <= caps, axis=1)
        if task.host is not None:
            fits[task.host] = False
        if not fits.any():
            continue
        frac = loads[:, 0] / caps[:, 0]
        frac[~fits] = np.inf
        target = int(np.argmin(frac))
        loads[target] += demand
        if task.host is not None:
            loads[task.host] -= demand
        pairs.append((task.id, target))
    return pairs


def cpu_window(state, host_id: int, k: int) -> Optional[np.ndarray]:
    if len(state.cpu_history) < k:
        return None
    return np.array([row[host_id] for row in state.cpu_history[-k:]])


def regression_forecast(series: np.ndarray) -> float:
    """Least-squares line through ``series`` evaluated one step past its end."""
    x = np.arange(len(series), dtype=float)
    slope, intercept = np.polyfit(x, series, 1)
    return float(slope * len(series) + intercept)


def mad(series: np.ndarray) -> float:
    return float(np.median(np.abs(series - np.median(series))))


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Correlation coefficient, defined as 0 when either side is constant."""
    if len(a) < 2 or np.std(a) == 0 or np.std(b) == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


class _Consolidation(Scheduler):
    """Detect overloaded hosts, pick one task from each, re-place it with the queue."""

    def __init__(self, window: int = 10):
        self.window = window

    def overloaded(self, state, host_id: int) -> bool:
        raise NotImplementedError

    def select(self, state, host_id: int, tasks: list):
        raise NotImplementedError

    def schedule(self, state) -> Decision:
        tasks = state.candidates()
        by_host = {}
        for task in tasks:
            if task.host is not None:
                by_host.setdefault(task.host, []).append(task)
        movers = []
        for host_id in sorted(by_host):
            if self.overloaded(state, host_id):
                movers.append(self.select(state, host_id, by_host[host_id]))
        queued = [t for t in tasks if t.host is None]
        loads = state.host_loads()
        return Decision(tuple(place_least_utilized(state, movers + queued, loads)))


class LrMmtScheduler(_Consolidation):
    """Local-regression overload detection, minimum-migration-time selection."""

    name = "lr-mmt"

    def __init__(self, window: int = 10, threshold: float = 0.8):
        super().__init__(window)
        self.threshold = threshold

    def overloaded(self, state, host_id: int) -> bool:
        series = cpu_window(state, host_id, self.window)
        return series is not None and regression_forecast(series) > self.threshold

    def select(self, state, host_id: int, tasks: list):
        src = state.hosts[host_id]
        others = [h for h in state.hosts if h.id != host_id]
        if not others:
            return tasks[0]
        cost = [min(migration_time(t, src, dst) for dst in others) for t in tasks]
        return tasks[int(np.argmin(cost))]


class MadMcScheduler(_Consolidation):
    """Median-absolute-deviation threshold, maximum-correlation selection."""

    name = "mad-mc"

    def __init__(self, window: int = 10, safety: float = 2.5):
        super().__init__(window)
        self.safety = safety

    def threshold(self, series: np.ndarray) -> float:
        return 1.0 - self.safety * mad(series)

    def overloaded(self, state, host_id: int) -> bool:
        series = cpu_window(state, host_id, self.window)
        return series is not None and series[-1] > self.threshold(series)

    def select(self, state, host_id: int, tasks: list):
        if len(tasks) == 1:
            return tasks[0]
        n = min(len(t.history) for t in tasks)
        if n < 2:
            return tasks[0]
        series = np.array([[h[0] for h in t.history[-n:]] for t in tasks])
        total = series.sum(axis=0)
        corr = [pearson(series[i], total - series[i]) for i in range(len(tasks))]
        return tasks[int(np.argmax(corr))]


@dataclass(frozen=True)
class GaConfig:
    population: int = 50
    generations: int = 100
    mutation: float = 0.05
    crossover: float = 0.9
    elitism: int = 2
    tournament: int = 3

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if not (0 <= self.mutation <= 1 and 0 <= self.crossover <= 1):
            raise ValueError("rates must lie in [0, 1]")
        if not 0 <= self.elitism <= self.population:
            raise ValueError("elitism must be between 0 and the population size")
        if self.generations < 0 or self.tournament < 1:
            raise ValueError("generations must be >= 0 and tournament >= 1")


class GaScheduler(Scheduler):
    """Evolve host-per-task vectors, scoring each by the frozen surrogate."""

    name = "ga"

    def __init__(self, net: Network, cfg: GaConfig = GaConfig(), seed: int = 0):
        self.net = net
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.best_history: list = []

    def _fitness(self, sub: Network, pop: np.ndarray, n_hosts: int) -> np.ndarray:
        onehot = np.zeros((len(pop), pop.shape[1], n_hosts))
        np.put_along_axis(onehot, pop[:, :, None], 1.0, axis=2)
        return np.atleast_1d(sub(onehot.reshape(len(pop), -1)))

    def _tournament(self, values: np.ndarray) -> int:
        picks = self.rng.integers(len(values), size=self.cfg.tournament)
        return int(picks[np.argmin(values[picks])])

    def schedule(self, state) -> Decision:
        enc = encode(state)
        ids = enc.task_ids
        self.best_history = []
        if not ids:
            return Decision()
        n_hosts = len(state.hosts)
        layout = InputLayout(n_hosts)
        sub = self.net.restrict(enc.vector(self.net.scaler), layout.decision_indices(len(ids)))
        cfg, n = self.cfg, len(ids)

        pop = self.rng.integers(n_hosts, size=(cfg.population, n))
        values = self._fitness(sub, pop, n_hosts)
        self.best_history.append(float(values.min()))
        for _ in range(cfg.generations):
            order = np.argsort(values, kind="stable")
            children = [pop[i].copy() for i in order[: cfg.elitism]]
            while len(children) < cfg.population:
                a = pop[self._tournament(values)].copy()
                b = pop[self._tournament(values)]
                if n > 1 and self.rng.random() < cfg.crossover:
                    cut = int(self.rng.integers(1, n))
                    a[cut:] = b[cut:]
                flip = self.rng.random(n) < cfg.mutation
                a[flip] = self.rng.integers(n_hosts, size=int(flip.sum()))
                children.append(a)
            pop = np.array(children)
            values = self._fitness(sub, pop, n_hosts)
            self.best_history.append(float(values.min()))
        best = pop[int(np.argmin(values))]
        return Decision(tuple((tid, int(h)) for tid, h in zip(ids, best)))

