"""Configuration, datasets, training, experiment runs and the command line."""

from fogsched.harness.config import ConfigError, ExperimentConfig, config_from_dict, load_config
from fogsched.harness.datasets import generate_dataset, generate_dataset_star, read_dataset
from fogsched.harness.metrics import aggregate, compute_fairness, compute_slo_violations
from fogsched.harness.runner import RunResult, build_scheduler, calibrate_slo, compare, run_experiment
from fogsched.harness.training import train

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunResult",
    "aggregate",
    "build_scheduler",
    "calibrate_slo",
    "compare",
    "compute_fairness",
    "compute_slo_violations",
    "config_from_dict",
    "generate_dataset",
    "generate_dataset_star",
    "load_config",
    "read_dataset",
    "run_experiment",
    "train",
]
