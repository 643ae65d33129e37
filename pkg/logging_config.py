"""
Logging configuration for the federated simulator.
Provides structured logging with different levels and formatters.
"""

import json
import logging
import logging.handlers
import os
import sys
from datetime import datetime, timezone


# Run context attached through `extra=` that the JSON formatter passes through
CONTEXT_FIELDS = ("regime", "mu", "seed", "client_id", "round", "duration", "path")


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured logging."""

    def format(self, record):
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        for field in CONTEXT_FIELDS:
            if hasattr(record, field):
                log_data[field] = getattr(record, field)

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_data, default=str)


class ColoredFormatter(logging.Formatter):
    """Colored formatter for console output."""

    COLORS = {
        'DEBUG': '\033[36m',      # Cyan
        'INFO': '\033[32m',       # Green
        'WARNING': '\033[33m',    # Yellow
        'ERROR': '\033[31m',      # Red
        'CRITICAL': '\033[35m',   # Magenta
        'RESET': '\033[0m',
    }

    def format(self, record):
        log_color = self.COLORS.get(record.levelname, self.COLORS['RESET'])
        reset_color = self.COLORS['RESET']

        timestamp = datetime.fromtimestamp(record.created).strftime('%Y-%m-%d %H:%M:%S')

        context = " ".join(
            f"{field}={getattr(record, field)}"
            for field in CONTEXT_FIELDS
            if hasattr(record, field)
        )
        formatted_message = (
            f"{log_color}[{timestamp}] {record.levelname:8s}{reset_color} "
            f"{record.name}: {record.getMessage()}"
        )
        if context:
            formatted_message += f" [{context}]"

        if record.levelno == logging.DEBUG:
            formatted_message += f" ({record.filename}:{record.lineno})"

        if record.exc_info:
            formatted_message += "\n" + self.formatException(record.exc_info)

        return formatted_message


def setup_logging(
    level: str = "INFO",
    log_dir: str = "logs",
    app_name: str = "fedsim",
    enable_json_logs: bool = False,
    enable_file_logs: bool = False,
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5
) -> logging.Logger:
    """
    Setup logging for the simulator.

    Console output goes to stderr; stdout is kept for CLI JSON.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir: Directory for log files
        app_name: Prefix for log file names
        enable_json_logs: Use the JSON formatter on the console
        enable_file_logs: Also write rotating JSON log files
        max_bytes: Maximum size of log file before rotation
        backup_count: Number of backup files to keep

    Returns:
        Configured root logger
    """
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    if enable_file_logs and not os.path.exists(log_dir):
        os.makedirs(log_dir)

    logger = logging.getLogger()
    logger.setLevel(numeric_level)
    logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(JSONFormatter() if enable_json_logs else ColoredFormatter())
    logger.addHandler(console_handler)

    if enable_file_logs:
        file_formatter = JSONFormatter()

        file_handler = logging.handlers.RotatingFileHandler(
            os.path.join(log_dir, f"{app_name}.log"),
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(file_formatter)
        logger.addHandler(file_handler)

        error_handler = logging.handlers.RotatingFileHandler(
            os.path.join(log_dir, f"{app_name}_error.log"),
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(file_formatter)
        logger.addHandler(error_handler)

    logger.debug(
        f"Logging setup complete - Level: {level}, JSON: {enable_json_logs}, File: {enable_file_logs}"
    )
    return logger


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a specific module (usually __name__)."""
    return logging.getLogger(name)


class PerformanceLogger:
    """Wall-clock logging for training runs."""

    def __init__(self, logger_name: str = "performance", slow_run_seconds: float = 5.0):
        self.logger = get_logger(logger_name)
        self.slow_run_seconds = slow_run_seconds

    def log_run(self, regime: str, mu, seed: int, duration: float):
        """Log one training run's duration; slow runs are raised to WARNING."""
        level = logging.WARNING if duration > self.slow_run_seconds else logging.DEBUG
        self.logger.log(
            level,
            f"Run {regime} finished in {duration:.3f}s",
            extra={'regime': regime, 'mu': mu, 'seed': seed, 'duration': duration}
        )


performance_logger = None


def init_loggers(settings=None):
    """Configure logging from runtime settings."""
    global performance_logger

    if settings:
        setup_logging(
            level=settings.logging.level,
            log_dir=settings.logging.log_dir,
            app_name=settings.app.name.lower(),
            enable_json_logs=settings.logging.json_logs,
            enable_file_logs=settings.logging.enable_file_logs,
        )
    else:
        setup_logging()

    performance_logger = PerformanceLogger()


def get_performance_logger() -> PerformanceLogger:
    """Get the global performance logger instance."""
    global performance_logger
    if performance_logger is None:
        performance_logger = PerformanceLogger()
    return performance_logger
