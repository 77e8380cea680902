"""Experiment configuration: YAML file -> validated dataclasses."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import yaml

from fogsched.catalog import DEFAULT_COUNTS, HOST_MODELS

OUT_ENV = "FOGSCHED_OUT"
SCHEDULERS = ("random", "lr-mmt", "mad-mc", "ga", "gobi", "gobi*")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class HostsConfig:
    counts: dict = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    scale: int = 1

    def validate(self):
        unknown = set(self.counts) - set(HOST_MODELS)
        if unknown:
            raise ConfigError(f"unknown host models {sorted(unknown)}")
        if self.scale < 1 or any(c < 0 for c in self.counts.values()) or not sum(self.counts.values()):
            raise ConfigError("host counts must be non-negative with at least one host, scale >= 1")


@dataclass(frozen=True)
class WorkloadSection:
    rate: float = 1.2
    mix: dict = field(default_factory=lambda: {"compute": 1 / 3, "bandwidth": 1 / 3, "mixed": 1 / 3})
    trace_source: str = "synthetic"
    trace_path: Optional[str] = None
    pool_size: int = 64
    catalog_seed: int = 0
    slo_table: Optional[str] = None

    def validate(self):
        if not self.rate > 0:
            raise ConfigError("workload.rate must be positive")
        if self.trace_source not in ("synthetic", "file"):
            raise ConfigError("workload.trace_source must be 'synthetic' or 'file'")
        if self.trace_source == "file" and not self.trace_path:
            raise ConfigError("workload.trace_path is required for file traces")
        total = sum(self.mix.values())
        if any(p < 0 for p in self.mix.values()) or abs(total - 1.0) > 1e-6:
            raise ConfigError(f"workload.mix must sum to 1, got {total}")


@dataclass(frozen=True)
class SchedulerSection:
    name: str = "random"
    params: dict = field(default_factory=dict)

    def validate(self):
        if self.name not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {self.name!r}; choose from {SCHEDULERS}")


@dataclass(frozen=True)
class ModelsSection:
    gobi: Optional[str] = None
    gobi_star: Optional[str] = None
    lstm: Optional[str] = None


@dataclass(frozen=True)
class TrainingSection:
    lr: float = 1e-3
    weight_decay: float = 1e-5
    batch_size: int = 32
    min_epochs: int = 30
    max_epochs: int = 200
    tolerance: float = 1e-2
    lstm_epochs: int = 30
    lstm_hidden: int = 16
    test_fraction: float = 0.2

    def validate(self):
        if not 0 < self.test_fraction < 1:
            raise ConfigError("training.test_fraction must lie in (0, 1)")
        if self.min_epochs < 1 or self.max_epochs < self.min_epochs:
            raise ConfigError("training epochs need 1 <= min_epochs <= max_epochs")


@dataclass(frozen=True)
class ExperimentConfig:
    hosts: HostsConfig = field(default_factory=HostsConfig)
    delta: float = 300.0
    intervals: int = 100
    alpha: float = 0.5
    beta: float = 0.5
    seed: int = 0
    output_dir: str = "runs/default"
    workload: WorkloadSection = field(default_factory=WorkloadSection)
    scheduler: SchedulerSection = field(default_factory=SchedulerSection)
    models: ModelsSection = field(default_factory=ModelsSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    dataset_intervals: int = 2000

    def validate(self) -> "ExperimentConfig":
        if self.intervals < 1:
            raise ConfigError("intervals must be >= 1")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ConfigError("alpha + beta must equal 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        self.hosts.validate()
        self.workload.validate()
        self.scheduler.validate()
        self.training.validate()
        return self

    def with_overrides(self, seed=None, out=None, scheduler=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if out is not None:
            cfg = replace(cfg, output_dir=str(out))
        if scheduler is not None:
            cfg = replace(cfg, scheduler=replace(cfg.scheduler, name=scheduler))
        return cfg.validate()

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """Hash of every field that can influence simulation output."""
        data = self.to_dict()
        data.pop("output_dir")
        blob = json.dumps(data, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_SECTIONS = {
    "hosts": HostsConfig,
    "workload": WorkloadSection,
    "scheduler": SchedulerSection,
    "models": ModelsSection,
    "training": TrainingSection,
}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if cls is ExperimentConfig and key in _SECTIONS:
            value = _build(_SECTIONS[key], value or {}, key)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _resolve(base: Path, path: Optional[str]) -> Optional[str]:
    if path is None or os.path.isabs(path):
        return path
    return str((base / path).resolve())


def config_from_dict(data: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    cfg = _build(ExperimentConfig, dict(data or {}), "config")
    base = Path(base_dir)
    models = ModelsSection(*(_resolve(base, getattr(cfg.models, f.name)) for f in fields(ModelsSection)))
    workload = replace(
        cfg.workload,
        trace_path=_resolve(base, cfg.workload.trace_path),
        slo_table=_resolve(base, cfg.workload.slo_table),
    )
    cfg = replace(cfg, models=models, workload=workload)
    if os.environ.get(OUT_ENV):
        cfg = replace(cfg, output_dir=os.environ[OUT_ENV])
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data or {}, path.parent)
