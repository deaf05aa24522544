"""Run configuration and numerical constants.

Three-tier config resolution:
  1. Explicit --config path (highest priority)
  2. entanglekit.yaml next to the dataset being processed
  3. Fallback to configs/default.yaml

CLI flags are applied on top of whichever file was loaded.
"""

import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)

# ── Package-level constants ───────────────────────────────────────────

DEFAULT_THETA = 0.085
SV_TOL = 1e-12  # relative to the largest singular value
EIG_TOL = 1e-12  # relative to the Gram / covariance trace
CLAMP_TOL = 1e-8  # largest negative Gram eigenvalue allowed, relative to the trace
DEFAULT_MEM_BUDGET = 2 ** 26  # dense tensor entries
DEFAULT_RESTARTS = 8
EXACT_BISECTION_MAX = 12
EXACT_MULTIWAY_MAX = 8
MAX_DEFAULT_LEVEL = 5
THREADS_ENV = "ENTANGLEKIT_THREADS"
LOCAL_CONFIG_NAME = "entanglekit.yaml"

# ── Paths ──────────────────────────────────────────────────────────────

CONFIGS_DIR = Path(__file__).parent.parent / "configs"

# ── Run configuration ─────────────────────────────────────────────────


@dataclass
class RunConfig:
    """Settings shared by every subcommand."""

    seed: int = 0
    restarts: int = DEFAULT_RESTARTS
    level_min: int = 1
    level_max: Optional[int] = None  # None: min(MAX_DEFAULT_LEVEL, L)
    width: int = 2
    theta: float = DEFAULT_THETA
    embedding: Optional[str] = None  # None: whatever the dataset header says
    correlate_on: str = "raw"
    sv_tol: float = SV_TOL
    eig_tol: float = EIG_TOL
    mem_budget: int = DEFAULT_MEM_BUDGET
    threads: Optional[int] = None
    exact_cut: bool = False
    spectral_init: bool = False
    one_vs_all: Optional[int] = None
    batch_size: Optional[int] = None
    batches: int = 1
    dim: int = 1

    def __post_init__(self):
        for name in ("restarts", "width", "mem_budget", "batches", "dim"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("theta", "sv_tol", "eig_tol"):
            if not float(getattr(self, name)) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.level_min < 1:
            raise ConfigError(f"level_min must be >= 1, got {self.level_min}")
        if self.level_max is not None and self.level_max < self.level_min:
            raise ConfigError(
                f"empty level range {self.level_min}..{self.level_max}")
        if self.embedding not in (None, "raw", "sincos"):
            raise ConfigError(f"unknown embedding: {self.embedding}")
        if self.correlate_on not in ("raw", "embedded"):
            raise ConfigError(f"unknown correlate_on: {self.correlate_on}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")

    def levels(self, depth):
        """Resolve the averaging level range for a tree of the given depth L."""
        hi = self.level_max if self.level_max is not None else min(MAX_DEFAULT_LEVEL, depth)
        if self.level_min > depth or hi > depth:
            raise ConfigError(
                f"level range {self.level_min}..{hi} outside [1, {depth}]")
        return list(range(self.level_min, hi + 1))

    def worker_count(self):
        """Worker cap: explicit setting, else ENTANGLEKIT_THREADS, else 1."""
        if self.threads is not None:
            return self.threads
        raw = os.environ.get(THREADS_ENV)
        if raw:
            try:
                value = int(raw)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
            if value < 1:
                raise ConfigError(f"{THREADS_ENV} must be positive, got {value}")
            return value
        return 1

    def with_overrides(self, **overrides):
        """Return a copy with the non-None overrides applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes)


def _load_yaml(path):
    """Load and return a YAML file as a dict."""
    with open(path) as f:
        return yaml.safe_load(f) or {}


def _build_config(raw):
    """Build a RunConfig from a raw dict, ignoring unknown keys."""
    known_fields = {f.name for f in fields(RunConfig)}
    unknown = sorted(k for k in raw if k not in known_fields)
    if unknown:
        logger.debug("Ignoring unknown config keys: %s", ", ".join(unknown))
    filtered = {k: v for k, v in raw.items() if k in known_fields}
    return RunConfig(**filtered)


def load_config(config_path=None, data_path=None):
    """Load run configuration with three-tier resolution.

    Args:
        config_path: Explicit path to a YAML config file.
        data_path: Dataset (or tensor) file; an entanglekit.yaml in its
            directory is used when no explicit path is given.

    Returns:
        RunConfig instance.
    """
    # Tier 1: explicit config path
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise FileNotFoundError(f"Config not found: {config_path}")
        return _build_config(_load_yaml(path))

    # Tier 2: entanglekit.yaml beside the data
    if data_path is not None:
        local = Path(data_path).parent / LOCAL_CONFIG_NAME
        if local.exists():
            return _build_config(_load_yaml(local))

    # Tier 3: packaged defaults
    default_path = CONFIGS_DIR / "default.yaml"
    if default_path.exists():
        return _build_config(_load_yaml(default_path))

    return RunConfig()
