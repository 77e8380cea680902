"""Workload generation: trace catalogs, synthetic app classes, Poisson arrivals."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from fogsched.model import TaskSpec

TRACE_COLUMNS = ("series_id", "app_class", "interval", "ips", "ram_mb", "disk_bw", "net_bw")


@dataclass(frozen=True)
class AppClass:
    """Synthetic application profile: per-feature (mean, std, cap) and lifetime."""

    name: str
    ips: tuple
    ram: tuple
    disk_bw: tuple
    net_bw: tuple
    length: tuple  # (min, max) intervals of trace

    def sample_series(self, rng: np.random.Generator, ar: float = 0.7) -> np.ndarray:
        n = int(rng.integers(self.length[0], self.length[1] + 1))
        cols = []
        for mean, std, cap in (self.ips, self.ram, self.disk_bw, self.net_bw):
            noise = np.empty(n)
            noise[0] = rng.normal()
            for k in range(1, n):
                noise[k] = ar * noise[k - 1] + np.sqrt(1 - ar ** 2) * rng.normal()
            cols.append(np.clip(mean + std * noise, 0.05 * mean, cap))
        return np.column_stack(cols)


# compute-heavy, bandwidth-heavy and mixed profiles
DEFAULT_CLASSES = (
    AppClass("compute", (2600, 500, 3600), (900, 150, 1300), (1.5, 0.5, 3.0), (5, 2, 12), (6, 14)),
    AppClass("bandwidth", (900, 200, 1500), (700, 120, 1000), (1.0, 0.3, 2.0), (180, 60, 350), (4, 10)),
    AppClass("mixed", (1800, 400, 2800), (2200, 400, 3200), (2.5, 0.8, 4.5), (90, 30, 180), (5, 12)),
)


@dataclass
class TraceCatalog:
    """Per-class pools of utilization series plus SLO deadlines (seconds)."""

    pools: dict
    deadlines: dict = field(default_factory=dict)
    delta: float = 300.0

    def __post_init__(self):
        for name, pool in self.pools.items():
            if not pool:
                raise ValueError(f"class {name!r} has no series")
            for series in pool:
                if len(series) == 0 or (np.asarray(series) < 0).any():
                    raise ValueError(f"class {name!r}: series must be non-empty and non-negative")
        for name in self.pools:
            if name not in self.deadlines:
                lengths = [len(s) for s in self.pools[name]]
                self.deadlines[name] = 1.2 * float(np.percentile(lengths, 95)) * self.delta
        self._peaks = {name: np.max([s.max(axis=0) for s in pool], axis=0) for name, pool in self.pools.items()}

    @property
    def classes(self) -> list:
        return sorted(self.pools)

    def peak(self, name: str) -> np.ndarray:
        return self._peaks[name]

    def mean_util(self, name: str) -> np.ndarray:
        return np.concatenate(self.pools[name]).mean(axis=0)

    def budget(self, series: np.ndarray) -> float:
        """Instructions needed to replay ``series`` once at full rate."""
        return float(series[:, 0].sum() * self.delta)

    def with_deadlines(self, table: dict) -> "TraceCatalog":
        missing = set(self.pools) - set(table)
        if missing:
            raise KeyError(f"deadline table lacks classes {sorted(missing)}")
        return TraceCatalog(self.pools, {k: float(table[k]) for k in self.pools}, self.delta)


def synthetic_catalog(
    classes=DEFAULT_CLASSES, pool_size: int = 64, seed: int = 0, delta: float = 300.0
) -> TraceCatalog:
    rng = np.random.default_rng(seed)
    pools = {c.name: [c.sample_series(rng) for _ in range(pool_size)] for c in classes}
    return TraceCatalog(pools, delta=delta)


@dataclass(frozen=True)
class WorkloadConfig:
    rate: float = 1.2
    mix: tuple = (("compute", 1 / 3), ("bandwidth", 1 / 3), ("mixed", 1 / 3))
    trace_source: str = "synthetic"
    seed: int = 0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"arrival rate must be positive, got {self.rate}")
        probs = np.array([p for _, p in self.mix], dtype=float)
        if (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-6:
            raise ValueError("app mix must be a probability vector")

    @property
    def class_names(self) -> list:
        return [name for name, _ in self.mix]

    @property
    def probs(self) -> np.ndarray:
        p = np.array([p for _, p in self.mix], dtype=float)
        return p / p.sum()


def arrivals(
    cfg: WorkloadConfig, catalog: TraceCatalog, t: int, rng: np.random.Generator, first_id: int = 0
) -> list:
    """New tasks for interval ``t``: Poisson(rate) of them, classes drawn from the mix."""
    count = int(rng.poisson(cfg.rate))
    names = cfg.class_names
    tasks = []
    for k in range(count):
        name = names[int(rng.choice(len(names), p=cfg.probs))]
        if name not in catalog.pools:
            raise KeyError(f"catalog has no class {name!r}")
        pool = catalog.pools[name]
        series = pool[int(rng.integers(len(pool)))]
        tasks.append(
            TaskSpec(
                id=first_id + k,
                created_at=t,
                app_class=name,
                total_instructions=catalog.budget(series),
                trace=series,
                sla_deadline=catalog.deadlines[name],
                peak=catalog.peak(name),
            )
        )
    return tasks


class WorkloadGenerator:
    """Seeded arrival stream; owns its RNG and the task-id counter."""

    def __init__(self, cfg: WorkloadConfig, catalog: TraceCatalog, seed: Optional[int] = None):
        self.cfg = cfg
        self.catalog = catalog
        self.rng = np.random.default_rng(cfg.seed if seed is None else seed)
        self.next_id = 0

    def __call__(self, t: int) -> list:
        tasks = arrivals(self.cfg, self.catalog, t, self.rng, self.next_id)
        self.next_id += len(tasks)
        return tasks


def write_traces(catalog: TraceCatalog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        sid = 0
        for name in catalog.classes:
            for series in catalog.pools[name]:
                for k, row in enumerate(series):
                    writer.writerow([sid, name, k, *(repr(float(v)) for v in row)])
                sid += 1


def load_traces(path, delta: float = 300.0, deadlines: Optional[dict] = None) -> TraceCatalog:
    """Read a trace CSV (one row per series interval) into a catalog.

    ``app_class`` is optional; series without it land in class ``"default"``.
    """
    path = Path(path)
    series, classes = {}, {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty trace file")
        needed = {"series_id", "interval", "ips", "ram_mb", "disk_bw", "net_bw"}
        if not needed <= set(reader.fieldnames):
            raise ValueError(f"{path}: missing columns {sorted(needed - set(reader.fieldnames))}")
        for lineno, row in enumerate(reader, start=2):
            try:
                sid = row["series_id"]
                k = int(row["interval"])
                values = [float(row[c]) for c in ("ips", "ram_mb", "disk_bw", "net_bw")]
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed row ({exc})") from None
            if min(values) < 0:
                raise ValueError(f"{path}:{lineno}: negative utilization")
            series.setdefault(sid, []).append((k, values))
            classes[sid] = row.get("app_class") or "default"
    if not series:
        raise ValueError(f"{path}: no trace rows")
    pools = {}
    for sid, rows in series.items():
        rows.sort(key=lambda r: r[0])
        pools.setdefault(classes[sid], []).append(np.array([v for _, v in rows]))
    return TraceCatalog(pools, dict(deadlines or {}), delta)
