"""Run-level QoS metrics, all recomputable from the per-interval rows."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np


def compute_slo_violations(results: Iterable, psi: Mapping) -> float:
    """Fraction of completed tasks whose response time exceeds their class deadline.

    ``results`` yields ``(app_class, response_time)`` pairs.
    """
    late = total = 0
    for app_class, response in results:
        if app_class not in psi:
            raise KeyError(f"no SLO deadline for class {app_class!r}")
        total += 1
        late += response > psi[app_class]
    return late / total if total else 0.0


def compute_fairness(response_times: Sequence[float]) -> float:
    """Jain's index over response times; 1 when nothing has completed."""
    r = np.asarray(list(response_times), dtype=float)
    if len(r) == 0 or not (r ** 2).sum() > 0:
        return 1.0
    return float(r.sum() ** 2 / (len(r) * (r ** 2).sum()))


def aggregate(rows: Sequence) -> dict:
    """Run aggregates from per-interval QoS records (objects or dicts)."""
    def col(name):
        return np.array([float(r[name] if isinstance(r, Mapping) else getattr(r, name)) for r in rows])

    if not rows:
        raise ValueError("no intervals to aggregate")
    leaving = col("n_leaving")
    done = leaving.sum()
    r_sum, r_sq = col("response_time_sum").sum(), col("response_time_sq_sum").sum()
    migrations = col("n_migrations").sum()
    return {
        "intervals": len(rows),
        "mean_objective": float(col("objective").mean()),
        "mean_aec": float(col("aec").mean()),
        "mean_art": float(col("art").mean()),
        "art_weighted": float((col("art") * leaving).sum() / done) if done else 0.0,
        "energy_kwh": float(col("energy_kwh").sum()),
        "completed_tasks": int(done),
        "mean_response_time": float(r_sum / done) if done else 0.0,
        "slo_violation_fraction": float(col("n_slo_violations").sum() / done) if done else 0.0,
        "fairness": float(r_sum ** 2 / (done * r_sq)) if done and r_sq > 0 else 1.0,
        "avg_migration_time": float(col("migration_time_sum").sum() / migrations) if migrations else 0.0,
        "migrations": int(migrations),
        "avg_wait_intervals": float(col("wait_sum").sum() / done) if done else 0.0,
        "cost": float(col("cost").sum()),
        "mean_active": float(col("n_active").mean()),
        "mean_waiting": float(col("n_waiting").mean()),
        "mean_cpu": float(col("mean_cpu").mean()),
    }
