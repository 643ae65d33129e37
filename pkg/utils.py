import csv
import io
import json
import math
import platform
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import psutil
import pydantic
import scipy

from errors import ReportWriteError
from models import EnvironmentStamp

SIGNIFICANT_DIGITS = 6


def utc_timestamp() -> datetime:
    """Return current UTC timestamp as datetime object"""
    return datetime.now(timezone.utc)


def format_float(value: float) -> str:
    """Six significant digits, the textual form used in every CSV."""
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def round_floats(value: Any) -> Any:
    """Recursively round floats to six significant digits for JSON output."""
    if isinstance(value, bool):
        return value
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return None
        return float(format_float(float(value)))
    if isinstance(value, dict):
        return {key: round_floats(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(item) for item in value]
    return value


def _atomic_write_text(filepath: Path, text: str) -> Path:
    """Write to a temporary sibling, then rename over the target."""
    temp_filepath = filepath.with_suffix(filepath.suffix + ".tmp")
    try:
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(temp_filepath, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        temp_filepath.replace(filepath)
        return filepath
    except OSError as e:
        if temp_filepath.exists():
            try:
                temp_filepath.unlink()
            except OSError:
                pass
        raise ReportWriteError(f"failed to write {filepath}: {e}", {"path": str(filepath)})


def write_json(filepath: Path, data: Any) -> Path:
    text = json.dumps(round_floats(data), indent=2, ensure_ascii=False) + "\n"
    return _atomic_write_text(Path(filepath), text)


def write_csv(filepath: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([
            format_float(cell) if isinstance(cell, (float, np.floating)) else cell
            for cell in row
        ])
    return _atomic_write_text(Path(filepath), buffer.getvalue())


def environment_stamp(workers: int) -> EnvironmentStamp:
    return EnvironmentStamp(
        python_version=platform.python_version(),
        numpy_version=np.__version__,
        scipy_version=scipy.__version__,
        pydantic_version=pydantic.VERSION,
        platform=f"{platform.system()} {platform.release()}",
        machine=platform.machine(),
        logical_cores=psutil.cpu_count(logical=True) or 1,
        physical_cores=psutil.cpu_count(logical=False),
        total_ram_gb=round(psutil.virtual_memory().total / 1024 ** 3, 2),
        workers=workers,
    )