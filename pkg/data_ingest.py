"""
Raw Cleveland heart-disease file ingestion and per-client preprocessing.

The file is the published ``processed.cleveland.data`` layout: 14
comma-separated columns, ``?`` as the missing marker and a 0-4 target.
"""

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from errors import (
    DataFormatError,
    DatasetNotFoundError,
    DegenerateFeatureWarning,
    DimensionMismatchError,
    EmptyDatasetError,
    StratificationError,
)
from logging_config import get_logger
from models import DatasetProfile, PatientRecord

logger = get_logger(__name__)

FEATURE_NAMES = (
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg",
    "thalach", "exang", "oldpeak", "slope", "ca", "thal",
)
CONTINUOUS_FEATURES = ("age", "trestbps", "chol", "thalach", "oldpeak")
CONTINUOUS_MASK = np.array([name in CONTINUOUS_FEATURES for name in FEATURE_NAMES])
MISSING_MARKER = "?"
ROW_WIDTH = len(FEATURE_NAMES) + 1


@dataclass(frozen=True)
class RawDataset:
    records: Tuple[PatientRecord, ...]
    source_path: str
    dropped_count: int
    raw_count: int

    def __len__(self) -> int:
        return len(self.records)

    def features(self) -> np.ndarray:
        """(n, 13) matrix in file row order."""
        return np.array(
            [[getattr(r, name) for name in FEATURE_NAMES] for r in self.records],
            dtype=float,
        ).reshape(len(self.records), len(FEATURE_NAMES))

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=int)

    def ages(self) -> np.ndarray:
        return np.array([r.age for r in self.records], dtype=float)


@dataclass(frozen=True)
class StandardizationParams:
    means: np.ndarray
    std_devs: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.means.shape[0])

    @classmethod
    def identity(cls, d: int) -> "StandardizationParams":
        return cls(means=np.zeros(d), std_devs=np.ones(d))


@dataclass(frozen=True)
class SplitDataset:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def train_prevalence(self) -> float:
        return float(self.train_y.mean()) if len(self.train_y) else 0.0

    @property
    def test_prevalence(self) -> float:
        return float(self.test_y.mean()) if len(self.test_y) else 0.0


def _parse_row(row: List[str], line_number: int) -> PatientRecord:
    try:
        values = [float(cell) for cell in row]
    except ValueError:
        raise DataFormatError(
            f"line {line_number}: non-numeric value in row {row!r}", line_number
        )
    fields = dict(zip(FEATURE_NAMES, values[:-1]))
    target = values[-1]
    # targets 1-4 all mean disease present
    label = 1 if target >= 1 else 0
    try:
        return PatientRecord(**fields, label=label)
    except ValueError as e:
        raise DataFormatError(f"line {line_number}: {e}", line_number)


def load_cleveland(path) -> RawDataset:
    """
    Load the raw Cleveland CSV, dropping rows with any missing value.

    Raises:
        DatasetNotFoundError: no file at path
        DataFormatError: row width other than 14, or a non-numeric cell
        EmptyDatasetError: file has no data rows
    """
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DatasetNotFoundError(f"dataset file not found: {path}", {"path": str(path)})

    records: List[PatientRecord] = []
    raw_count = 0
    with handle:
        for line_number, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            raw_count += 1
            row = [cell.strip() for cell in row]
            if len(row) != ROW_WIDTH:
                raise DataFormatError(
                    f"line {line_number}: expected {ROW_WIDTH} fields, got {len(row)}",
                    line_number,
                )
            if MISSING_MARKER in row:
                continue
            records.append(_parse_row(row, line_number))

    if raw_count == 0:
        raise EmptyDatasetError(f"dataset file is empty: {path}", {"path": str(path)})

    dropped = raw_count - len(records)
    if dropped:
        logger.info(
            f"Dropped {dropped} of {raw_count} rows with missing values",
            extra={"path": str(path)},
        )
    return RawDataset(
        records=tuple(records),
        source_path=str(path),
        dropped_count=dropped,
        raw_count=raw_count,
    )


def clean_records(dataset: RawDataset) -> RawDataset:
    """Re-apply the cleaning rule to an in-memory dataset (idempotent)."""
    kept = tuple(
        r for r in dataset.records
        if all(math.isfinite(getattr(r, name)) for name in FEATURE_NAMES)
    )
    return RawDataset(
        records=kept,
        source_path=dataset.source_path,
        dropped_count=dataset.dropped_count + len(dataset.records) - len(kept),
        raw_count=dataset.raw_count,
    )


def dataset_profile(dataset: RawDataset) -> DatasetProfile:
    if not dataset.records:
        raise EmptyDatasetError("dataset has no retained records")
    x = dataset.features()
    y = dataset.labels()
    cp = x[:, FEATURE_NAMES.index("cp")]
    return DatasetProfile(
        source_path=dataset.source_path,
        raw_count=dataset.raw_count,
        retained_count=len(dataset),
        dropped_count=dataset.dropped_count,
        retention_ratio=len(dataset) / dataset.raw_count,
        prevalence=float(y.mean()),
        male_fraction=float(x[:, FEATURE_NAMES.index("sex")].mean()),
        mean_age=float(x[:, FEATURE_NAMES.index("age")].mean()),
        mean_cholesterol=float(x[:, FEATURE_NAMES.index("chol")].mean()),
        chest_pain_distribution={
            str(category): float(np.mean(cp == category)) for category in (1, 2, 3, 4)
        },
    )


def fit_standardizer(train_features: np.ndarray, continuous_mask: Sequence[bool]) -> StandardizationParams:
    """
    Fit per-feature means and population standard deviations on one client's
    training split. Unmasked (categorical) columns pass through unscaled.
    """
    train_features = np.asarray(train_features, dtype=float)
    mask = np.asarray(continuous_mask, dtype=bool)
    if train_features.ndim != 2 or train_features.shape[0] == 0:
        raise DimensionMismatchError("training features must be a non-empty 2-D matrix")
    if mask.shape[0] != train_features.shape[1]:
        raise DimensionMismatchError(
            f"mask has {mask.shape[0]} entries for {train_features.shape[1]} features"
        )

    means = np.zeros(train_features.shape[1])
    std_devs = np.ones(train_features.shape[1])
    means[mask] = train_features[:, mask].mean(axis=0)
    std_devs[mask] = train_features[:, mask].std(axis=0, ddof=0)

    degenerate = mask & (std_devs == 0.0)
    if degenerate.any():
        columns = [int(i) for i in np.flatnonzero(degenerate)]
        message = f"zero-variance standardized feature(s) at column(s) {columns}; using std 1"
        logger.warning(message)
        warnings.warn(message, DegenerateFeatureWarning, stacklevel=2)
        std_devs[degenerate] = 1.0

    return StandardizationParams(means=means, std_devs=std_devs)


def apply_standardizer(features: np.ndarray, params: StandardizationParams) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != params.dimension:
        raise DimensionMismatchError(
            f"expected {params.dimension} columns, got shape {features.shape}"
        )
    return (features - params.means) / params.std_devs


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def stratified_split(
    features: np.ndarray,
    labels: np.ndarray,
    test_fraction: float = 0.20,
    rng_seed: Union[int, Sequence[int]] = 0,
) -> SplitDataset:
    """
    Seeded stratified train/test split.

    Within each label class, round-half-up(class_size * test_fraction)
    samples go to test. Index arrays are returned in ascending order.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if features.shape[0] != labels.shape[0]:
        raise DimensionMismatchError("features and labels differ in length")

    rng = np.random.default_rng(rng_seed)
    test_parts = []
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            raise StratificationError(
                f"class {cls} has {members.size} sample(s); at least 2 needed to stratify",
                {"class": cls, "count": int(members.size)},
            )
        n_test = _round_half_up(members.size * test_fraction)
        test_parts.append(rng.permutation(members)[:n_test])

    test_idx = np.sort(np.concatenate(test_parts))
    train_idx = np.setdiff1d(np.arange(labels.shape[0]), test_idx)
    return SplitDataset(
        train_x=features[train_idx],
        train_y=labels[train_idx],
        test_x=features[test_idx],
        test_y=labels[test_idx],
        train_idx=train_idx,
        test_idx=test_idx,
    )
