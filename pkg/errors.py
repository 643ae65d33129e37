"""
Exception hierarchy for the federated simulator.
Every module raises one of these so the CLI can map failures to exit codes.
"""

from typing import Any, Dict, Optional


class SimulatorError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Structured form used in CLI error output."""
        return {
            "error_type": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class ConfigurationError(SimulatorError, ValueError):
    """Invalid experiment configuration or runtime settings."""

    exit_code = 2


class DataFormatError(SimulatorError, ValueError):
    """Malformed row in the raw dataset file."""

    exit_code = 3

    def __init__(self, message: str, line_number: Optional[int] = None, **details: Any):
        if line_number is not None:
            details["line_number"] = line_number
        super().__init__(message, details)
        self.line_number = line_number


class DatasetNotFoundError(SimulatorError, FileNotFoundError):
    """The raw dataset file does not exist."""

    exit_code = 3


class EmptyDatasetError(SimulatorError, ValueError):
    """The raw file held no rows, or cleaning left nothing usable."""

    exit_code = 3


class DimensionMismatchError(SimulatorError, ValueError):
    """Feature matrix width does not match fitted parameters."""


class StratificationError(SimulatorError, ValueError):
    """A label class is too small to stratify."""

    exit_code = 3


class InvalidDistributionError(SimulatorError, ValueError):
    """Input is not a valid probability vector."""


class UndefinedMetricError(SimulatorError, ValueError):
    """Metric is undefined for the given labels (e.g. AUC with one class)."""


class StatisticsError(SimulatorError, ValueError):
    """Statistical routine called on an invalid series."""


class ReportWriteError(SimulatorError, OSError):
    """Output directory or report file could not be written."""

    exit_code = 4


class DegenerateFeatureWarning(UserWarning):
    """A standardized feature had zero variance on a client's training split."""


class TrainingDivergedError(SimulatorError):
    """Model parameters became non-finite during training."""
