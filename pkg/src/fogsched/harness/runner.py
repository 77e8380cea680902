"""Experiment runs, SLO calibration and run comparison."""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from fogsched.baselines import GaConfig, GaScheduler, LrMmtScheduler, MadMcScheduler, RandomScheduler
from fogsched.gobi import GobiScheduler
from fogsched.gobistar import GobiStarScheduler
from fogsched.harness.env import SCHEDULER_STREAM, build_catalog, simulate, stream_seed
from fogsched.harness.metrics import aggregate
from fogsched.harness.training import file_digest
from fogsched.model import QoSRecord
from fogsched.nn import LstmPredictor, Network

log = logging.getLogger(__name__)

QOS_COLUMNS = [f.name for f in fields(QoSRecord) if f.name != "scheduling_time"]
TASK_COLUMNS = [
    "task_id", "app_class", "created_at", "finished_at", "response_time",
    "wait_intervals", "sla_deadline", "slo_violated",
]


def _need(path, what: str) -> str:
    if not path or not Path(path).exists():
        raise FileNotFoundError(f"{what} model file missing: {path}")
    return path


def build_scheduler(cfg):
    """Instantiate the configured scheduler; returns ``(scheduler, model_paths)``."""
    name, params = cfg.scheduler.name, dict(cfg.scheduler.params)
    seed = stream_seed(cfg.seed, SCHEDULER_STREAM)
    if name == "random":
        return RandomScheduler(seed), {}
    if name == "lr-mmt":
        return LrMmtScheduler(**params), {}
    if name == "mad-mc":
        return MadMcScheduler(**params), {}
    if name == "ga":
        path = _need(cfg.models.gobi, "gobi")
        return GaScheduler(Network.load(path), GaConfig(**params), seed), {"gobi": path}
    if name == "gobi":
        path = _need(cfg.models.gobi, "gobi")
        return GobiScheduler(Network.load(path), seed=seed, **params), {"gobi": path}
    if name == "gobi*":
        paths = {
            "gobi": _need(cfg.models.gobi, "gobi"),
            "gobi_star": _need(cfg.models.gobi_star, "gobi_star"),
            "lstm": _need(cfg.models.lstm, "lstm"),
        }
        f = Network.load(paths["gobi"])
        f_star = Network.load(paths["gobi_star"])
        means = f_star.meta.get("class_means") or f.meta.get("class_means", {})
        gobi = GobiScheduler(f, seed=stream_seed(cfg.seed, SCHEDULER_STREAM + 1), freeze=True)
        sched = GobiStarScheduler(f_star, gobi, LstmPredictor.load(paths["lstm"]), means, seed=seed, **params)
        return sched, paths
    raise ValueError(f"unknown scheduler {name!r}")


@dataclass
class RunResult:
    records: list
    aggregates: dict
    timing: dict
    provenance: dict
    tasks: list

    def manifest(self) -> dict:
        return {"provenance": self.provenance, "aggregates": self.aggregates, "timing": self.timing}


def _task_row(task) -> list:
    return [
        task.id, task.spec.app_class, task.spec.created_at, task.finished_at, repr(float(task.response_time)),
        task.wait_intervals, repr(float(task.spec.sla_deadline)), int(task.response_time > task.spec.sla_deadline),
    ]


def execute(cfg, scheduler=None):
    """Simulate ``cfg`` and return ``(records, finished tasks, model paths)`` without writing."""
    models = {}
    if scheduler is None:
        scheduler, models = build_scheduler(cfg)
    records, last = [], None
    for iv in simulate(cfg, scheduler):
        records.append(iv.record)
        last = iv.next_state
    return records, list(last.finished), models


def run_experiment(cfg, scheduler=None, write: bool = True) -> RunResult:
    """Full run; writes qos.csv, tasks.csv, timing.csv and result.json to the output dir."""
    records, finished, models = execute(cfg, scheduler)
    times = np.array([r.scheduling_time for r in records])
    timing = {
        "mean_scheduling_time": float(times.mean()),
        "max_scheduling_time": float(times.max()),
        "total_scheduling_time": float(times.sum()),
    }
    provenance = {
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "scheduler": cfg.scheduler.name if scheduler is None else getattr(scheduler, "name", "custom"),
        "intervals": cfg.intervals,
        "n_hosts": sum(cfg.hosts.counts.values()) * cfg.hosts.scale,
        "model_hashes": {k: file_digest(v) for k, v in sorted(models.items())},
    }
    result = RunResult(records, aggregate(records), timing, provenance, finished)
    if write:
        write_result(result, cfg.output_dir)
    return result


def write_result(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "qos.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(QOS_COLUMNS)
        for rec in result.records:
            writer.writerow([_fmt(getattr(rec, c)) for c in QOS_COLUMNS])
    with open(out / "timing.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["interval", "scheduling_time"])
        for rec in result.records:
            writer.writerow([rec.interval, repr(rec.scheduling_time)])
    with open(out / "tasks.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TASK_COLUMNS)
        for task in sorted(result.tasks, key=lambda t: t.id):
            writer.writerow(_task_row(task))
    (out / "result.json").write_text(json.dumps(result.manifest(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def _fmt(value):
    return repr(float(value)) if isinstance(value, float) else value


def read_qos(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def calibrate_slo(cfg, reference: str = "ga", out=None) -> dict:
    """Per-class 95th-percentile response time under a reference scheduler."""
    ref_cfg = cfg.with_overrides(scheduler=reference)
    _, finished, _ = execute(ref_cfg)
    catalog = build_catalog(cfg)
    by_class = {}
    for task in finished:
        by_class.setdefault(task.spec.app_class, []).append(task.response_time)
    deadlines, counts = {}, {}
    for name in catalog.classes:
        samples = by_class.get(name, [])
        counts[name] = len(samples)
        if samples:
            deadlines[name] = float(np.percentile(samples, 95))
        else:
            log.warning("class %s never completed under %s; keeping default deadline", name, reference)
            deadlines[name] = float(catalog.deadlines[name])
    table = {"reference": reference, "seed": cfg.seed, "intervals": cfg.intervals, "deadlines": deadlines, "counts": counts}
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(json.dumps(table, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return table


def compare(result_paths, out=None) -> list:
    """Tabulate run aggregates side by side, with deltas against the first run."""
    if len(result_paths) < 2:
        raise ValueError("compare needs at least two runs")
    manifests = []
    for path in result_paths:
        path = Path(path)
        if path.is_dir():
            path = path / "result.json"
        manifests.append((str(path), json.loads(path.read_text(encoding="utf-8"))))
    seeds = {m["provenance"]["seed"] for _, m in manifests}
    if len(seeds) > 1:
        warnings.warn(f"runs use different workload seeds {sorted(seeds)}; comparison may be unfair")
    base = manifests[0][1]["aggregates"]
    table = []
    for path, m in manifests:
        row = {"run": path, "scheduler": m["provenance"]["scheduler"], "seed": m["provenance"]["seed"]}
        for key, value in m["aggregates"].items():
            row[key] = value
            row[f"delta_{key}"] = value - base[key]
        row["mean_scheduling_time"] = m["timing"]["mean_scheduling_time"]
        table.append(row)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(table[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(table)
        (out / "comparison.json").write_text(json.dumps(table, indent=2) + "\n", encoding="utf-8")
    return table
