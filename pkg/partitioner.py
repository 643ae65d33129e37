"""
Synthesis of non-IID hospital clients from the cleaned dataset.

Patients are sorted by age; each simulated hospital draws a seeded uniform
subsample from an age-percentile window. Windows overlap, so clients may
share patients.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from data_ingest import (
    CONTINUOUS_MASK,
    RawDataset,
    SplitDataset,
    StandardizationParams,
    apply_standardizer,
    fit_standardizer,
    stratified_split,
)
from errors import ConfigurationError
from logging_config import get_logger
from models import ClientSummaryRow, ClientSummaryTable, WindowSpec

logger = get_logger(__name__)


@dataclass(frozen=True)
class ClientPartition:
    """A client's raw (unsplit, unscaled) samples."""

    client_id: int
    name: str
    member_indices: np.ndarray  # row indices into the RawDataset
    features: np.ndarray
    labels: np.ndarray

    @property
    def ages(self) -> np.ndarray:
        return self.features[:, 0]

    @property
    def sample_count(self) -> int:
        return int(self.labels.shape[0])

    @property
    def mean_age(self) -> float:
        return float(self.ages.mean())

    @property
    def disease_rate(self) -> float:
        return float(self.labels.mean())


@dataclass(frozen=True)
class ClientDataset:
    """One simulated hospital: standardized train/test split plus provenance."""

    partition: ClientPartition
    split: SplitDataset
    standardizer: StandardizationParams

    @property
    def client_id(self) -> int:
        return self.partition.client_id

    @property
    def name(self) -> str:
        return self.partition.name

    @property
    def sample_count(self) -> int:
        return self.partition.sample_count

    @property
    def mean_age(self) -> float:
        return self.partition.mean_age

    @property
    def disease_rate(self) -> float:
        return self.partition.disease_rate

    @property
    def ages(self) -> np.ndarray:
        return self.partition.ages

    @property
    def labels(self) -> np.ndarray:
        return self.partition.labels

    def standardized_features(self) -> np.ndarray:
        """All client samples (train and test) under the client's own scaling."""
        return apply_standardizer(self.partition.features, self.standardizer)


def window_slice(n: int, spec: WindowSpec) -> range:
    """Nearest-rank positions ⌊lo·N⌋ .. ⌈hi·N⌉−1 of the age-sorted order."""
    # round first so 0.7 * 10 cannot ceil to 8
    start = int(math.floor(round(spec.lo_percentile * n, 9)))
    stop = min(n, int(math.ceil(round(spec.hi_percentile * n, 9))))
    return range(start, stop)


def partition_by_age(
    records: RawDataset,
    specs: Sequence[WindowSpec],
    rng_seed: int,
) -> List[ClientPartition]:
    """
    Build one client per window spec. Client ids are 1-based in spec order;
    each client's draw uses its own stream derived from (rng_seed, client_id).

    Raises:
        ConfigurationError: empty spec list, empty window, or a target
            count larger than its window
    """
    if not specs:
        raise ConfigurationError("at least one window spec is required")

    features = records.features()
    labels = records.labels()
    order = np.argsort(records.ages(), kind="stable")
    n = order.shape[0]

    clients = []
    for client_id, spec in enumerate(specs, start=1):
        window = window_slice(n, spec)
        if len(window) == 0:
            raise ConfigurationError(
                f"client {spec.client_name!r}: age window is empty",
                {"client": spec.client_name},
            )
        if spec.target_count > len(window):
            raise ConfigurationError(
                f"client {spec.client_name!r}: target_count {spec.target_count} "
                f"exceeds window population {len(window)}",
                {"client": spec.client_name, "target_count": spec.target_count,
                 "window_size": len(window)},
            )
        rng = np.random.default_rng([rng_seed, client_id])
        picked = np.sort(rng.choice(len(window), size=spec.target_count, replace=False))
        members = order[window.start + picked]
        clients.append(ClientPartition(
            client_id=client_id,
            name=spec.client_name,
            member_indices=members,
            features=features[members],
            labels=labels[members],
        ))
        logger.debug(
            f"Client {spec.client_name} drew {spec.target_count} of {len(window)}",
            extra={"client_id": client_id},
        )
    return clients


def build_clients(
    partitions: Sequence[ClientPartition],
    test_fraction: float,
    rng_seed: int,
) -> List[ClientDataset]:
    """Stratified split then standardize each client with its own train statistics."""
    clients = []
    for part in partitions:
        raw_split = stratified_split(
            part.features, part.labels, test_fraction, rng_seed=[rng_seed, part.client_id]
        )
        for side, y in (("train", raw_split.train_y), ("test", raw_split.test_y)):
            if y.size == 0:
                raise ConfigurationError(
                    f"client {part.name} gets an empty {side} split from {part.labels.size} samples "
                    f"at test_fraction={test_fraction:g}",
                    {"client_id": part.client_id, "split": side},
                )
        scaler = fit_standardizer(raw_split.train_x, CONTINUOUS_MASK)
        split = SplitDataset(
            train_x=apply_standardizer(raw_split.train_x, scaler),
            train_y=raw_split.train_y,
            test_x=apply_standardizer(raw_split.test_x, scaler),
            test_y=raw_split.test_y,
            train_idx=raw_split.train_idx,
            test_idx=raw_split.test_idx,
        )
        clients.append(ClientDataset(partition=part, split=split, standardizer=scaler))
    return clients


def summarize_clients(clients: Sequence) -> ClientSummaryTable:
    """Table-1-style heterogeneity summary over partitions or client datasets."""
    if not clients:
        raise ConfigurationError("cannot summarize an empty client list")

    rows = [
        ClientSummaryRow(
            client_id=c.client_id,
            name=c.name,
            n=c.sample_count,
            age_mean=float(np.mean(c.ages)),
            age_std=float(np.std(c.ages)),
            disease_rate=float(np.mean(c.labels)),
        )
        for c in clients
    ]
    sizes = [row.n for row in rows]
    ages = [row.age_mean for row in rows]
    rates = [row.disease_rate for row in rows]
    return ClientSummaryTable(
        rows=rows,
        size_ratio=max(sizes) / min(sizes),
        age_span=max(ages) - min(ages),
        prevalence_span_pp=(max(rates) - min(rates)) * 100.0,
    )
