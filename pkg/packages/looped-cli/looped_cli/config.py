"""
Experiment configuration.

Handles the sweep settings, loading them from JSON and resolving the worker count.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, List, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

WORKERS_ENV = "LOOPED_WORKERS"


class ExperimentConfig(BaseModel):
    """Convergence sweep: trials per n at fixed d, all with q0 = 0 and eta = 1/L."""

    d: int = Field(4, ge=1)
    n_values: List[int] = Field(default_factory=lambda: [16, 32, 64, 128], min_length=1)
    loops: int = Field(200, ge=1, description="Loop count T")
    trials: int = Field(10, ge=1)
    base_seed: int = Field(0, ge=0, lt=2**64)
    alpha: float = Field(1.0, allow_inf_nan=False)
    output_path: str = "convergence.csv"

    model_config = ConfigDict(extra="forbid")

    @field_validator("alpha")
    @classmethod
    def _nonzero_alpha(cls, v: float) -> float:
        if v == 0.0:
            raise ValueError("alpha must be nonzero")
        return v

    @model_validator(mode="after")
    def _check_sizes(self) -> "ExperimentConfig":
        small = [n for n in self.n_values if n <= self.d]
        if small:
            raise ValueError(f"every n must exceed d={self.d}, got {small}")
        if len(set(self.n_values)) != len(self.n_values):
            raise ValueError("n_values must not repeat")
        if self.base_seed + self.trials - 1 >= 2**64:
            raise ValueError("base_seed + trials exceeds the 64-bit seed range")
        return self


def load_experiment_config(path: Union[Path, str], **overrides: Any) -> ExperimentConfig:
    """
    Load an ExperimentConfig from a JSON file; ``overrides`` that are not None win.

    Raises:
        OSError: File cannot be read
        json.JSONDecodeError: Not JSON
        pydantic.ValidationError: Invalid settings
    """
    with open(Path(path).expanduser(), "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.model_validate(data)


def resolve_worker_count() -> int:
    """Worker threads for trial batches from LOOPED_WORKERS (default 1)."""
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        workers = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r: not an integer", WORKERS_ENV, raw)
        return 1
    if workers < 1:
        logger.warning("Ignoring %s=%r: must be >= 1", WORKERS_ENV, raw)
        return 1
    return workers


__all__ = ["WORKERS_ENV", "ExperimentConfig", "load_experiment_config", "resolve_worker_count"]
