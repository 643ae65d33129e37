"""
Configuration management for the federated simulator.
Runtime settings come from environment variables; experiment settings come
from a single validated JSON document.
"""

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from errors import ConfigurationError
from models import ExperimentConfig


@dataclass
class RuntimeConfig:
    """Execution settings."""
    workers: int = 1
    data_path: str = "data/processed.cleveland.data"


@dataclass
class LoggingSettings:
    """Logging settings."""
    level: str = "INFO"
    json_logs: bool = False
    enable_file_logs: bool = False
    log_dir: str = "logs"


@dataclass
class AppConfig:
    """Application identity."""
    name: str = "fedsim"
    version: str = "1.0.0"
    environment: str = "development"


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


class Settings:
    """Runtime settings aggregated from the environment."""

    def __init__(self, env_file: Optional[str] = None):
        """
        Initialize settings from environment variables.

        Args:
            env_file: Optional path to .env file
        """
        if env_file:
            load_dotenv(env_file)
        else:
            load_dotenv()

        self._load()

    def _load(self):
        raw_workers = os.getenv("FEDSIM_WORKERS", "1")
        try:
            workers = int(raw_workers)
        except ValueError:
            raise ConfigurationError(
                f"FEDSIM_WORKERS must be an integer, got {raw_workers!r}"
            )
        if workers < 1:
            raise ConfigurationError(f"FEDSIM_WORKERS must be >= 1, got {workers}")

        self.runtime = RuntimeConfig(
            workers=workers,
            data_path=os.getenv("FEDSIM_DATA_PATH", "data/processed.cleveland.data"),
        )

        self.app = AppConfig(
            name=os.getenv("FEDSIM_APP_NAME", "fedsim"),
            version=os.getenv("FEDSIM_VERSION", "1.0.0"),
            environment=os.getenv("FEDSIM_ENVIRONMENT", "development"),
        )

        self.logging = LoggingSettings(
            level=os.getenv("FEDSIM_LOG_LEVEL", "INFO"),
            json_logs=_env_bool("FEDSIM_JSON_LOGS", "false") or self.is_production,
            enable_file_logs=_env_bool("FEDSIM_ENABLE_FILE_LOGS", "false"),
            log_dir=os.getenv("FEDSIM_LOG_DIR", "logs"),
        )

    @property
    def is_development(self) -> bool:
        return self.app.environment.lower() == "development"

    @property
    def is_production(self) -> bool:
        return self.app.environment.lower() == "production"

    def get_summary(self) -> dict:
        """Loggable view of the current settings."""
        return {
            "app": {
                "name": self.app.name,
                "version": self.app.version,
                "environment": self.app.environment,
            },
            "runtime": {
                "workers": self.runtime.workers,
                "data_path": self.runtime.data_path,
            },
            "logging": {
                "level": self.logging.level,
                "json_logs": self.logging.json_logs,
                "enable_file_logs": self.logging.enable_file_logs,
                "log_dir": self.logging.log_dir,
            },
        }


# Global settings instance
settings = None


def get_settings(env_file: Optional[str] = None) -> Settings:
    """
    Get the global settings instance.

    Args:
        env_file: Optional path to .env file (only used on first call)
    """
    global settings
    if settings is None:
        settings = Settings(env_file)
    return settings


def reload_settings(env_file: Optional[str] = None) -> Settings:
    """Force reload of settings from the environment."""
    global settings
    settings = Settings(env_file)
    return settings


def load_experiment_config(path: Optional[str] = None) -> ExperimentConfig:
    """
    Load and validate an experiment configuration document.

    Args:
        path: JSON file; None yields the defaults

    Raises:
        ConfigurationError: unreadable file, bad JSON or failed validation
    """
    if path is None:
        cfg = ExperimentConfig()
    else:
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}", {"path": str(path)})
        except json.JSONDecodeError as e:
            raise ConfigurationError(
                f"config file is not valid JSON: {e}", {"path": str(path)}
            )
        cfg = parse_experiment_config(payload)

    if not cfg.data_path:
        cfg = cfg.model_copy(update={"data_path": get_settings().runtime.data_path})
    return cfg


def parse_experiment_config(payload: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigurationError(
            f"invalid experiment config: {e.error_count()} error(s)",
            {"errors": json.loads(e.json(include_url=False))},
        )


def apply_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Apply CLI overrides (None values are ignored) and re-validate."""
    payload = cfg.model_dump(mode="json")
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "seed":
            payload["seeds"] = [value]
        elif key == "mu":
            payload["mu_grid"] = [value]
            payload["fedprox_mu"] = value
        elif key == "regime":
            payload["regimes"] = [value]
        else:
            payload[key] = value
    return parse_experiment_config(payload)


def dump_experiment_config(cfg: ExperimentConfig, path: str) -> None:
    Path(path).write_text(cfg.model_dump_json(indent=2) + "\n", encoding="utf-8")
