"""
looped-cli: command-line entry point for the looped-transformer simulator.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_experiment_config, resolve_worker_count  # noqa: E402
from .experiment import ExperimentResult, run_experiment, run_trial  # noqa: E402
from .main import main  # noqa: E402

__all__ = [
    "ExperimentConfig",
    "load_experiment_config",
    "resolve_worker_count",
    "ExperimentResult",
    "run_experiment",
    "run_trial",
    "main",
]
