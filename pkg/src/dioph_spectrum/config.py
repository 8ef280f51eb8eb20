"""Configuration for dioph-spectrum."""

import os
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml
from dotenv import dotenv_values

from dioph_spectrum.errors import FormatError, IoError
from dioph_spectrum.log_config import LogLevel


ENV_KEYS = ("DIOPH_THREADS", "DIOPH_LOG_LEVEL", "DIOPH_LOG_JSON")
ENV_SEARCH_DEPTH = 3


def _load_env(start: Path | None = None) -> Path | None:
    """Copy the DIOPH_* settings of the nearest .env into os.environ.

    Looks in ``start`` (default: the working directory) and up to
    ENV_SEARCH_DEPTH parents. Variables already set win; other keys in the
    file are ignored. Returns the file used, if any.
    """
    here = start or Path.cwd()
    for folder in [here, *here.parents][: ENV_SEARCH_DEPTH + 1]:
        env_path = folder / ".env"
        if env_path.is_file():
            for key, value in dotenv_values(env_path).items():
                if key in ENV_KEYS and value is not None:
                    os.environ.setdefault(key, value)
            return env_path
    return None


_load_env()


def _env_threads() -> int:
    raw = os.environ.get("DIOPH_THREADS")
    if raw:
        try:
            return int(raw)
        except ValueError:
            return 0  # reported by validate()
    return os.cpu_count() or 1


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


@dataclass
class SpectrumConfig:
    """Runtime configuration shared by the library and the CLI.

    Attributes:
        threads: Worker cap for enumeration and grid sampling (DIOPH_THREADS)
        precision: Absolute error allowed on certified logarithms
        max_precision_retries: Doubling steps before PrecisionBudgetExceeded
        eps_grid_depth: Depth J of the epsilon grid for lambda-under
        alpha_grid_depth: Depth of the alpha grid for kappa
        tail_fraction: Share of leading data dropped by estimators
        tail_min: Minimum number of leading points dropped by estimators
        converge_window: Width under which a tail window counts as converged
        infinity_threshold: Tail statistic above which an exponent reads +inf
        q_max: Desk-scale cap on the parametric q
        infill_cells: Minimum staircase cells per infill interval
        seed: Seed recorded in manifests and used by perturbations
        log_level: Logging level for the CLI
        log_json: Emit JSON lines instead of rich log records
    """

    threads: int = field(default_factory=_env_threads)
    precision: Fraction = Fraction(1, 10**15)
    max_precision_retries: int = 16
    eps_grid_depth: int = 8
    alpha_grid_depth: int = 8
    tail_fraction: Fraction = Fraction(1, 5)
    tail_min: int = 4
    converge_window: float = 0.02
    infinity_threshold: float = 1e6
    q_max: float = 30.0
    infill_cells: int = 8
    seed: int = 0
    log_level: LogLevel = LogLevel.WARNING
    log_json: bool = False
    unknown_keys: list[str] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        """Pick up environment overrides for logging."""
        env_level = os.environ.get("DIOPH_LOG_LEVEL")
        if env_level and self.log_level == LogLevel.WARNING:
            try:
                self.log_level = LogLevel(env_level.upper())
            except ValueError:
                entry = f"DIOPH_LOG_LEVEL={env_level}"
                if entry not in self.unknown_keys:
                    self.unknown_keys.append(entry)
        if _env_flag("DIOPH_LOG_JSON"):
            self.log_json = True
        self.precision = Fraction(self.precision)
        self.tail_fraction = Fraction(self.tail_fraction)

    def validate(self) -> list[str]:
        """Validate configuration. Returns list of errors."""
        errors = []

        if self.threads < 1:
            errors.append("threads must be a positive integer (check DIOPH_THREADS)")
        if self.precision <= 0:
            errors.append("precision must be positive")
        if self.max_precision_retries < 1:
            errors.append("max_precision_retries must be at least 1")
        for name in ("eps_grid_depth", "alpha_grid_depth", "infill_cells"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be at least 1")
        if not 0 <= self.tail_fraction < 1:
            errors.append("tail_fraction must lie in [0, 1)")
        if self.tail_min < 0:
            errors.append("tail_min must be non-negative")
        if self.q_max <= 0:
            errors.append("q_max must be positive")
        for key in self.unknown_keys:
            errors.append(f"Unknown configuration key: {key}")

        return errors

    def with_overrides(self, **overrides: Any) -> "SpectrumConfig":
        """Return a copy with non-None overrides applied (CLI flags)."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values["unknown_keys"] = list(self.unknown_keys)
        for key, value in overrides.items():
            if value is not None:
                values[key] = value
        return SpectrumConfig(**values)


def load_config_file(path: str | Path, base: SpectrumConfig | None = None) -> SpectrumConfig:
    """Load a YAML configuration file on top of ``base``.

    Args:
        path: YAML file with a mapping of configuration keys
        base: Configuration to override (defaults to the environment defaults)

    Returns:
        New configuration; unknown keys are kept for validate()
    """
    base = base or get_default_config()
    try:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise IoError(f"Cannot read config file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise FormatError(f"Config file {path} is not valid YAML: {e}") from e

    if not isinstance(data, dict):
        raise FormatError(f"Config file {path} must contain a mapping")

    known = {f.name for f in fields(SpectrumConfig)} - {"unknown_keys"}
    overrides: dict[str, Any] = {}
    unknown: list[str] = []
    for key, value in data.items():
        name = str(key).replace("-", "_")
        if name not in known:
            unknown.append(str(key))
            continue
        try:
            if name in ("precision", "tail_fraction"):
                value = Fraction(str(value))
            elif name == "log_level":
                value = LogLevel(str(value).upper())
        except ValueError as e:
            raise FormatError(f"Invalid value for {key} in {path}: {value!r}") from e
        overrides[name] = value

    config = base.with_overrides(**overrides)
    config.unknown_keys.extend(unknown)
    return config


def get_default_config() -> SpectrumConfig:
    """Get default configuration from environment."""
    return SpectrumConfig()
