"""Convert Bitbrain (GWA-T-12) VM traces into the trace CSV read by ``load_traces``.

Each Bitbrain file holds one VM: semicolon-separated rows sampled every
300 s with the columns

    Timestamp [ms]; CPU cores; CPU capacity provisioned [MHZ]; CPU usage [MHZ];
    CPU usage [%]; Memory capacity provisioned [KB]; Memory usage [KB];
    Disk read throughput [KB/s]; Disk write throughput [KB/s];
    Network received throughput [KB/s]; Network transmitted throughput [KB/s]

Mapping to trace columns:

    ips      <- CPU usage [MHZ]                    (MHz taken as a MIPS proxy)
    ram_mb   <- Memory usage [KB] / 1024
    disk_bw  <- (disk read + disk write) / 1024    (MB/s)
    net_bw   <- (net received + net transmitted) / 1024  (MB/s)

Samples are averaged into windows of ``delta`` seconds keyed by timestamp.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

COLUMNS = {
    "timestamp": "Timestamp [ms]",
    "cpu": "CPU usage [MHZ]",
    "mem": "Memory usage [KB]",
    "disk_r": "Disk read throughput [KB/s]",
    "disk_w": "Disk write throughput [KB/s]",
    "net_rx": "Network received throughput [KB/s]",
    "net_tx": "Network transmitted throughput [KB/s]",
}


def read_vm(path) -> np.ndarray:
    """Rows of ``(timestamp_s, ips, ram_mb, disk_bw, net_bw)`` for one VM file."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=";")
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty Bitbrain file") from None
        missing = [c for c in COLUMNS.values() if c not in header]
        if missing:
            raise ValueError(f"{path}: missing Bitbrain columns {missing}")
        idx = {k: header.index(c) for k, c in COLUMNS.items()}
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not any(cell.strip() for cell in row):
                continue
            try:
                v = {k: float(row[i]) for k, i in idx.items()}
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed row ({exc})") from None
            out.append((
                v["timestamp"] / 1000.0,
                max(v["cpu"], 0.0),
                max(v["mem"], 0.0) / 1024.0,
                max(v["disk_r"] + v["disk_w"], 0.0) / 1024.0,
                max(v["net_rx"] + v["net_tx"], 0.0) / 1024.0,
            ))
    if not out:
        raise ValueError(f"{path}: no samples")
    return np.array(out)


def resample(samples: np.ndarray, delta: float) -> np.ndarray:
    """Average samples into consecutive ``delta``-second windows; empty windows are dropped."""
    t = samples[:, 0]
    bins = np.floor((t - t.min()) / delta).astype(int)
    keep = np.unique(bins)
    return np.array([samples[bins == b, 1:].mean(axis=0) for b in keep])


def convert(
    paths: Iterable, out, delta: float = 300.0, app_class: Optional[str] = None, max_intervals: Optional[int] = None
) -> int:
    """Write the trace CSV for the given VM files; returns the number of series written.

    The series id is the VM file stem. Pass ``app_class`` to label every
    series, otherwise the column is left out and the loader uses ``default``.
    """
    paths = sorted(Path(p) for p in paths)
    if not paths:
        raise ValueError("no Bitbrain files given")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cols = ["series_id"] + (["app_class"] if app_class else []) + ["interval", "ips", "ram_mb", "disk_bw", "net_bw"]
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for path in paths:
            series = resample(read_vm(path), delta)[:max_intervals]
            for k, values in enumerate(series):
                lead = [path.stem] + ([app_class] if app_class else [])
                writer.writerow(lead + [k] + [repr(float(v)) for v in values])
    return len(paths)
