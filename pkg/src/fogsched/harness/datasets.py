"""Surrogate training datasets as JSON lines: a header line, then one row per interval."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from fogsched.baselines import RandomScheduler
from fogsched.gobi import GobiScheduler, InputLayout, encode
from fogsched.gobistar import predict_utilizations
from fogsched.harness.env import SCHEDULER_STREAM, build_catalog, simulate, stream_seed
from fogsched.model import N_FEATURES
from fogsched.nn import LstmPredictor, Network
from fogsched.simulator import lookahead

FORMAT = "fogsched-dataset"
VERSION = 1


def _header(cfg, kind: str, n_hosts: int, intervals: int) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "n_hosts": n_hosts,
        "dim": InputLayout(n_hosts, star=kind == "gobi*").dim,
        "intervals": intervals,
        "seed": cfg.seed,
        "config": cfg.digest(),
    }


def _n_hosts(cfg) -> int:
    return sum(cfg.hosts.counts.values()) * cfg.hosts.scale


def _row(t, x, y, enc, tasks) -> dict:
    classes = {task.id: task.spec.app_class for task in tasks}
    return {
        "t": t,
        "x": [float(v) for v in x],
        "y": float(y),
        "task_ids": enc.task_ids,
        "classes": [classes[i] for i in enc.task_ids],
    }


def generate_dataset(cfg, intervals: int, path) -> Path:
    """Run the random scheduler and log ``(encoded state + decision, objective)``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scheduler = RandomScheduler(stream_seed(cfg.seed, SCHEDULER_STREAM))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_header(cfg, "gobi", _n_hosts(cfg), intervals)) + "\n")
        for iv in simulate(cfg, scheduler, intervals):
            enc = encode(iv.state, iv.decision)
            row = _row(iv.state.t, enc.vector(), iv.record.objective, enc, iv.state.candidates())
            fh.write(json.dumps(row) + "\n")
    return path


def generate_dataset_star(cfg, intervals: int, path, gobi_model, lstm_model) -> Path:
    """Random-scheduler run that also logs GOBI's decision and its look-ahead objective."""
    for model in (gobi_model, lstm_model):
        if model is None or not Path(model).exists():
            raise FileNotFoundError(f"required model file missing: {model}")
    net = Network.load(gobi_model)
    lstm = LstmPredictor.load(lstm_model)
    class_means = net.meta.get("class_means", {})
    default = np.mean(list(class_means.values()), axis=0) if class_means else np.zeros(N_FEATURES)
    gobi = GobiScheduler(net, seed=stream_seed(cfg.seed, SCHEDULER_STREAM + 1), freeze=True)
    scheduler = RandomScheduler(stream_seed(cfg.seed, SCHEDULER_STREAM))
    catalog = build_catalog(cfg)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_header(cfg, "gobi*", _n_hosts(cfg), intervals)) + "\n")
        recorder = _Recorder(scheduler, gobi, lstm, class_means, default)
        for iv in simulate(cfg, recorder, intervals, catalog):
            tasks = iv.state.candidates()
            enc = encode(iv.state, iv.decision)
            extra = recorder.extra
            row = _row(iv.state.t, enc.vector(objective_value=extra["obj_bar"]), iv.record.objective, enc, tasks)
            row["obj_bar"] = extra["obj_bar"]
            row["d_bar"] = extra["d_bar"]
            fh.write(json.dumps(row) + "\n")
    return path


class _Recorder:
    """Random scheduler that also computes GOBI's proposal for the same state."""

    def __init__(self, random, gobi, lstm, class_means, default):
        self.random = random
        self.gobi = gobi
        self.lstm = lstm
        self.class_means = class_means
        self.default = default
        self.extra: dict = {}

    def schedule(self, state):
        tasks = state.candidates()
        d_bar = self.gobi.schedule(state)
        if tasks:
            predicted = predict_utilizations(tasks, self.lstm, self.class_means, self.default)
            obj_bar = lookahead(state, d_bar, predicted).objective
        else:
            obj_bar = 0.0
        decision = self.random.schedule(state)
        # GOBI warm-starts from what was actually proposed last interval
        self.gobi.prev = decision
        hosts = d_bar.as_dict()
        enc_ids = encode(state).task_ids
        self.extra = {"obj_bar": float(obj_bar), "d_bar": [hosts.get(i) for i in enc_ids]}
        return decision

    def observe(self, record):
        pass


def read_dataset(path) -> tuple:
    """Return ``(header, rows)``; raises on a malformed file."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise ValueError(f"{path}: empty dataset file")
        header = json.loads(first)
        if header.get("format") != FORMAT:
            raise ValueError(f"{path}: not a {FORMAT} file")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if len(row["x"]) != header["dim"]:
                raise ValueError(f"{path}:{lineno}: row has {len(row['x'])} features, expected {header['dim']}")
            rows.append(row)
    return header, rows


def task_sequences(rows: list) -> list:
    """Per-task utilization series recovered from the task blocks of each row."""
    series = {}
    for row in rows:
        block = np.asarray(row["x"][: len(row["task_ids"]) * N_FEATURES]).reshape(-1, N_FEATURES)
        for tid, util in zip(row["task_ids"], block):
            if util.any():
                series.setdefault(tid, []).append(util)
    return [np.array(s) for _, s in sorted(series.items())]


def class_means(rows: list) -> dict:
    """Mean observed utilization per application class."""
    sums, counts = {}, {}
    for row in rows:
        block = np.asarray(row["x"][: len(row["task_ids"]) * N_FEATURES]).reshape(-1, N_FEATURES)
        for name, util in zip(row["classes"], block):
            if util.any():
                sums[name] = sums.get(name, 0.0) + util
                counts[name] = counts.get(name, 0) + 1
    return {name: (sums[name] / counts[name]).tolist() for name in sorted(sums)}
