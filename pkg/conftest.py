"""
Shared fixtures: a synthetic file in the Cleveland layout and the clients
built from it under the default age windows.
"""

import numpy as np
import pytest

from data_ingest import clean_records, load_cleveland
from models import ExperimentConfig, FedConfig, default_window_specs
from partitioner import build_clients, partition_by_age

SYNTHETIC_ROWS = 300


def synthetic_rows(n: int = SYNTHETIC_ROWS, seed: int = 7):
    """Rows whose label depends on cp, thalach, exang and oldpeak."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        sick = bool(rng.random() < 0.45)
        rows.append([
            float(rng.integers(29, 78)),
            float(rng.integers(0, 2)),
            float(rng.integers(3, 5) if sick else rng.integers(1, 4)),
            float(rng.integers(94, 200)),
            float(rng.integers(126, 400)),
            float(rng.integers(0, 2)),
            float(rng.integers(0, 3)),
            float(rng.integers(71, 150) if sick else rng.integers(130, 202)),
            float(sick and rng.random() < 0.7),
            round(float(rng.uniform(1.0, 4.0) if sick else rng.uniform(0.0, 1.5)), 1),
            float(rng.integers(1, 4)),
            float(rng.integers(0, 4)),
            float(rng.choice([3, 6, 7])),
            int(rng.integers(1, 5)) if sick else 0,
        ])
    return rows


def write_cleveland(path, rows, missing_every: int = 0):
    """Write rows in the published layout; every ``missing_every``-th row gets ca='?'."""
    lines = []
    for i, row in enumerate(rows, start=1):
        cells = [str(v) for v in row]
        if missing_every and i % missing_every == 0:
            cells[11] = "?"
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def cleveland_file(tmp_path):
    return write_cleveland(tmp_path / "processed.cleveland.data", synthetic_rows())


@pytest.fixture
def clients(cleveland_file):
    raw = clean_records(load_cleveland(cleveland_file))
    return build_clients(partition_by_age(raw, default_window_specs(), 42), 0.2, 42)


@pytest.fixture
def small_config(cleveland_file, tmp_path):
    """Short schedule and three seeds so full pipeline tests stay fast."""
    return ExperimentConfig(
        data_path=str(cleveland_file),
        fed=FedConfig(rounds=5, local_epochs=2),
        mu_grid=[0.0, 0.05],
        seeds=[1, 2, 3],
        output_dir=str(tmp_path / "results"),
    )


@pytest.fixture
def rows():
    return synthetic_rows()


@pytest.fixture
def write_rows(tmp_path):
    """Callable writing rows (optionally with missing cells) to a fresh file."""
    def _write(rows, missing_every: int = 0, name: str = "cleveland.data"):
        return write_cleveland(tmp_path / name, rows, missing_every)
    return _write
