"""Build the simulated environment for a config and drive it interval by interval."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from fogsched.catalog import build_hosts
from fogsched.model import Decision, QoSRecord
from fogsched.simulator import SimState, step
from fogsched.workloads import TraceCatalog, WorkloadConfig, WorkloadGenerator, load_traces, synthetic_catalog

# independent streams derived from the run seed
WORKLOAD_STREAM = 1
SCHEDULER_STREAM = 2


def stream_seed(seed: int, stream: int) -> list:
    return [int(seed), stream]


def build_catalog(cfg) -> TraceCatalog:
    w = cfg.workload
    if w.trace_source == "file":
        catalog = load_traces(w.trace_path, delta=cfg.delta)
    else:
        catalog = synthetic_catalog(pool_size=w.pool_size, seed=w.catalog_seed, delta=cfg.delta)
    if w.slo_table:
        table = json.loads(Path(w.slo_table).read_text(encoding="utf-8"))
        catalog = catalog.with_deadlines(table.get("deadlines", table))
    return catalog


def workload_config(cfg) -> WorkloadConfig:
    w = cfg.workload
    return WorkloadConfig(rate=w.rate, mix=tuple(w.mix.items()), trace_source=w.trace_source, seed=cfg.seed)


@dataclass
class Interval:
    state: SimState  # start of the interval, arrivals admitted
    decision: Decision
    record: QoSRecord
    next_state: SimState


def simulate(cfg, scheduler, intervals: Optional[int] = None, catalog: Optional[TraceCatalog] = None) -> Iterator[Interval]:
    """Run ``scheduler`` for ``intervals`` steps, yielding each interval.

    The scheduler's wall-clock decision time lands in the record's
    ``scheduling_time`` field.
    """
    catalog = build_catalog(cfg) if catalog is None else catalog
    hosts = build_hosts(cfg.hosts.counts, cfg.hosts.scale)
    arrivals = WorkloadGenerator(workload_config(cfg), catalog, seed=stream_seed(cfg.seed, WORKLOAD_STREAM))
    state = SimState(hosts, delta=cfg.delta, alpha=cfg.alpha, beta=cfg.beta, seed=cfg.seed)
    n = cfg.intervals if intervals is None else intervals
    for t in range(n):
        state = state.admit(arrivals(t))
        started = time.perf_counter()
        decision = scheduler.schedule(state)
        elapsed = time.perf_counter() - started
        nxt, record = step(state, decision)
        record.scheduling_time = elapsed
        scheduler.observe(record)
        yield Interval(state, decision, record, nxt)
        state = nxt

