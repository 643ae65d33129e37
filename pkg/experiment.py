"""
Experiment orchestration: client preparation, seed sweeps per regime, the
mu ablation, the holdout validation protocol and assembly of the nested
ExperimentReport.
"""

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from baselines import train_centralized, train_local_only
from config import get_settings
from data_ingest import RawDataset, clean_records, dataset_profile, load_cleveland
from errors import ConfigurationError
from evaluation import accuracy, convergence_rounds, evaluate_model, fairness_table, stability_comparison
from federation import FedRunResult, communication_bytes, payload_bytes, round_trip_bytes, run_federated
from heterogeneity import heterogeneity_report
from linear_model import predict_proba
from logging_config import get_logger, get_performance_logger
from models import (
    AblationRow,
    Comparison,
    CommunicationReport,
    ConvergenceDiag,
    ExperimentConfig,
    ExperimentReport,
    MetricSummary,
    Regime,
    RegimeSummary,
    RoundTelemetry,
    Tail,
    ValidationOutcome,
    ValidationProtocol,
)
from partitioner import ClientDataset, build_clients, partition_by_age, summarize_clients
from stats import RunSeries, summarize, t_test
from utils import environment_stamp

logger = get_logger(__name__)

FEDERATED_REGIMES = (Regime.FEDAVG, Regime.FEDPROX)
METHOD_LABELS = {
    Regime.CENTRALIZED: "Centralized",
    Regime.LOCAL: "Local Only",
    Regime.FEDAVG: "FedAvg",
    Regime.FEDPROX: "FedProx",
}


@dataclass
class RunRecord:
    """One training run of one regime under one seed."""

    regime: Regime
    seed: int
    metrics: MetricSummary
    duration_s: float
    mu: Optional[float] = None
    convergence: Optional[ConvergenceDiag] = None
    telemetry: List[RoundTelemetry] = field(default_factory=list)


@dataclass
class ExperimentResult:
    report: ExperimentReport
    runs: List[RunRecord] = field(default_factory=list)


def method_label(regime: Regime, mu: Optional[float] = None) -> str:
    if regime is Regime.FEDPROX and mu is not None:
        return f"FedProx (mu={mu:g})"
    return METHOD_LABELS[regime]


def prepare_clients(cfg: ExperimentConfig) -> Tuple[RawDataset, List[ClientDataset]]:
    """Load, clean, partition and split; membership and splits depend only on partition_seed."""
    raw = clean_records(load_cleveland(cfg.data_path))
    partitions = partition_by_age(raw, cfg.window_specs, cfg.partition_seed)
    clients = build_clients(partitions, cfg.test_fraction, cfg.partition_seed)
    logger.info(
        f"Prepared {len(clients)} clients from {len(raw)} records",
        extra={"path": cfg.data_path},
    )
    return raw, clients


def default_protocol(clients: Sequence[ClientDataset], holdout_client_id: Optional[int] = None) -> ValidationProtocol:
    """Hold out the requested client, or the largest one (smaller id on ties)."""
    ids = sorted(c.client_id for c in clients)
    if len(ids) < 2:
        raise ConfigurationError("validation protocol needs at least two clients")
    if holdout_client_id is None:
        largest = max(clients, key=lambda c: (c.sample_count, -c.client_id))
        holdout_client_id = largest.client_id
    elif holdout_client_id not in ids:
        raise ConfigurationError(
            f"holdout client {holdout_client_id} does not exist",
            {"client_ids": ids},
        )
    return ValidationProtocol(
        holdout_client_id=holdout_client_id,
        train_client_ids=[cid for cid in ids if cid != holdout_client_id],
    )


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and std; a single run has std 0."""
    if len(values) == 1:
        return float(values[0]), 0.0
    return summarize(values)


def _column_mean_std(rows: Sequence[Sequence[float]]) -> Tuple[List[float], List[float]]:
    """Per-column sample mean and std across runs."""
    table = np.asarray(rows, dtype=float)
    means = table.mean(axis=0)
    stds = table.std(axis=0, ddof=1) if len(table) > 1 else np.zeros_like(means)
    return [float(v) for v in means], [float(v) for v in stds]


class ExperimentRunner:
    """
    Runs every regime over the configured seeds on one fixed set of clients.

    Federated runs are cached by (mu, seed) so the ablation, FedAvg and
    FedProx regimes share identical runs instead of retraining.
    """

    def __init__(
        self,
        cfg: ExperimentConfig,
        clients: Sequence[ClientDataset],
        workers: Optional[int] = None,
    ):
        self.cfg = cfg
        self.clients = sorted(clients, key=lambda c: c.client_id)
        self.workers = workers or get_settings().runtime.workers
        self.perf = get_performance_logger()
        self._cache: Dict[Tuple[float, int], FedRunResult] = {}
        self._lock = threading.Lock()

    def _sweep(self, fn: Callable[[int], RunRecord]) -> List[RunRecord]:
        """Apply ``fn`` to every seed; results come back in seed order."""
        seeds = sorted(self.cfg.seeds)
        if self.workers > 1 and len(seeds) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(fn, seeds))
        return [fn(seed) for seed in seeds]

    def federated_run(self, mu: float, seed: int) -> FedRunResult:
        key = (float(mu), seed)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        fed = self.cfg.fed.model_copy(update={"mu": float(mu), "seed": seed})
        result = run_federated(self.clients, fed)
        with self._lock:
            self._cache.setdefault(key, result)
        return result

    def _federated_record(self, regime: Regime, mu: float, seed: int) -> RunRecord:
        result = self.federated_run(mu, seed)
        self.perf.log_run(regime.value, mu, seed, result.duration_s)
        return RunRecord(
            regime=regime,
            seed=seed,
            mu=mu,
            metrics=evaluate_model(result.final_params, self.clients),
            duration_s=result.duration_s,
            convergence=convergence_rounds(result.accuracies, result.weight_deltas),
            telemetry=result.telemetry,
        )

    def _baseline_record(self, regime: Regime, seed: int) -> RunRecord:
        if regime is Regime.CENTRALIZED:
            result = train_centralized(
                self.clients, self.cfg.fed, self.cfg.l2_lambda, seed,
                restandardize=self.cfg.centralized_restandardize,
            )
        else:
            result = train_local_only(self.clients, self.cfg.fed, self.cfg.l2_lambda, seed)
        self.perf.log_run(regime.value, None, seed, result.duration_s)
        return RunRecord(regime=regime, seed=seed, metrics=result.metrics, duration_s=result.duration_s)

    def run_regime(self, regime: Regime, mu: Optional[float] = None) -> List[RunRecord]:
        regime = Regime(regime)
        if regime is Regime.FEDAVG:
            return self._sweep(lambda seed: self._federated_record(regime, 0.0, seed))
        if regime is Regime.FEDPROX:
            if mu is None:
                raise ConfigurationError("fedprox regime needs a mu")
            return self._sweep(lambda seed: self._federated_record(regime, mu, seed))
        return self._sweep(lambda seed: self._baseline_record(regime, seed))

    def run_ablation(self) -> Tuple[List[AblationRow], List[RunRecord]]:
        """One FedProx sweep per grid value; mu = 0 is the FedAvg path."""
        if not self.cfg.mu_grid:
            raise ConfigurationError("mu_grid must be non-empty for the ablation")
        rows, records = [], []
        for mu in sorted(set(self.cfg.mu_grid)):
            runs = self.run_regime(Regime.FEDPROX, mu)
            acc_mean, acc_std = _mean_std([r.metrics.accuracy for r in runs])
            conv_mean, conv_std = _mean_std([r.convergence.rounds_to_95pct for r in runs])
            delta_mean, delta_std = _mean_std([r.convergence.avg_weight_delta for r in runs])
            rows.append(AblationRow(
                mu=mu,
                runs=len(runs),
                accuracy_mean=acc_mean,
                accuracy_std=acc_std,
                convergence_rounds_mean=conv_mean,
                convergence_rounds_std=conv_std,
                avg_weight_delta_mean=delta_mean,
                avg_weight_delta_std=delta_std,
            ))
            records.extend(runs)
        return rows, records

    def run_validation_protocol(self, protocol: Optional[ValidationProtocol] = None) -> ValidationOutcome:
        """
        Train on the non-holdout clients for every grid value and seed; pick
        the mu with the best seed-averaged accuracy on the holdout client's
        train split. Ties go to the smaller mu.
        """
        protocol = protocol or default_protocol(self.clients, self.cfg.holdout_client_id)
        by_id = {c.client_id: c for c in self.clients}
        missing = [cid for cid in [protocol.holdout_client_id, *protocol.train_client_ids] if cid not in by_id]
        if missing:
            raise ConfigurationError(f"validation protocol names unknown clients {missing}")
        if not self.cfg.mu_grid:
            raise ConfigurationError("mu_grid must be non-empty for validation")

        holdout = by_id[protocol.holdout_client_id]
        train_clients = [by_id[cid] for cid in sorted(protocol.train_client_ids)]

        def _holdout_accuracy(mu: float, seed: int) -> float:
            fed = self.cfg.fed.model_copy(update={"mu": float(mu), "seed": seed})
            result = run_federated(train_clients, fed)
            return accuracy(predict_proba(result.final_params, holdout.split.train_x), holdout.split.train_y)

        holdout_accuracy: Dict[str, float] = {}
        selected, best = None, -1.0
        for mu in sorted(set(self.cfg.mu_grid)):
            seeds = sorted(self.cfg.seeds)
            if self.workers > 1 and len(seeds) > 1:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    scores = list(pool.map(lambda s, mu=mu: _holdout_accuracy(mu, s), seeds))
            else:
                scores = [_holdout_accuracy(mu, s) for s in seeds]
            mean_score = float(np.mean(scores))
            holdout_accuracy[f"{mu:g}"] = mean_score
            if mean_score > best:
                selected, best = mu, mean_score

        logger.info(
            f"Validation on client {protocol.holdout_client_id} selected mu={selected:g} "
            f"(holdout accuracy {best:.4f})",
            extra={"mu": selected, "client_id": protocol.holdout_client_id},
        )
        return ValidationOutcome(
            holdout_client_id=protocol.holdout_client_id,
            train_client_ids=sorted(protocol.train_client_ids),
            holdout_accuracy=holdout_accuracy,
            selected_mu=selected,
        )

    def summarize_regime(self, regime: Regime, runs: Sequence[RunRecord], mu: Optional[float] = None) -> RegimeSummary:
        acc_mean, acc_std = _mean_std([r.metrics.accuracy for r in runs])
        auc_mean, auc_std = _mean_std([r.metrics.auc_roc for r in runs])
        f1_mean, f1_std = _mean_std([r.metrics.f1 for r in runs])
        fair_mean, fair_std = _mean_std([r.metrics.fairness_std for r in runs])
        client_mean, client_std = _column_mean_std([r.metrics.per_client_accuracy for r in runs])

        comm_raw, comm_reported = 0, 0
        if regime in FEDERATED_REGIMES:
            comm_raw, comm_reported = self.communication_totals()
        conv = delta = (None, None)
        if all(r.convergence is not None for r in runs):
            conv = _mean_std([r.convergence.rounds_to_95pct for r in runs])
            delta = _mean_std([r.convergence.avg_weight_delta for r in runs])
        return RegimeSummary(
            method=method_label(regime, mu),
            regime=regime,
            mu=mu if regime in FEDERATED_REGIMES else None,
            runs=len(runs),
            accuracy_mean=acc_mean,
            accuracy_std=acc_std,
            auc_mean=auc_mean,
            auc_std=auc_std,
            f1_mean=f1_mean,
            f1_std=f1_std,
            fairness_std_mean=fair_mean,
            fairness_std_std=fair_std,
            per_client_accuracy_mean=client_mean,
            per_client_accuracy_std=client_std,
            convergence_rounds_mean=conv[0],
            convergence_rounds_std=conv[1],
            avg_weight_delta_mean=delta[0],
            avg_weight_delta_std=delta[1],
            comm_bytes_raw=comm_raw,
            comm_mb=comm_reported / 1e6,
        )

    def communication_totals(self) -> Tuple[int, int]:
        d = self.clients[0].split.train_x.shape[1]
        return communication_bytes(d, len(self.clients), self.cfg.fed.rounds, self.cfg.overhead_factor)

    def communication_report(self) -> CommunicationReport:
        d = self.clients[0].split.train_x.shape[1]
        k, t = len(self.clients), self.cfg.fed.rounds
        raw, reported = self.communication_totals()
        return CommunicationReport(
            payload_bytes=payload_bytes(d),
            bytes_raw=raw,
            bytes_round_trip=round_trip_bytes(d, k, t),
            bytes_reported=reported,
            overhead_factor=self.cfg.overhead_factor,
        )


def compare_regimes(
    runs_by_regime: Dict[Regime, List[RunRecord]],
    alpha: float = 0.05,
    tail: Tail = Tail.ONE_SIDED,
) -> List[Comparison]:
    """FedProx against every other regime on per-seed accuracy, Bonferroni over the battery."""
    prox = runs_by_regime.get(Regime.FEDPROX)
    if not prox or len(prox) < 2:
        return []
    others = [r for r in Regime if r is not Regime.FEDPROX and len(runs_by_regime.get(r, [])) >= 2]
    if not others:
        return []

    prox_series = RunSeries("fedprox", [r.metrics.accuracy for r in prox], [r.seed for r in prox])
    comparisons = []
    for regime in others:
        runs = runs_by_regime[regime]
        other = RunSeries(regime.value, [r.metrics.accuracy for r in runs], [r.seed for r in runs])
        comparisons.append(Comparison(
            label=f"fedprox_vs_{regime.value}",
            method_a=method_label(Regime.FEDPROX, prox[0].mu),
            method_b=method_label(regime),
            runs=min(len(prox), len(runs)),
            one_sided=t_test(prox_series, other, Tail.ONE_SIDED, alpha, len(others)),
            two_sided=t_test(prox_series, other, Tail.TWO_SIDED, alpha, len(others)),
        ))
        primary = comparisons[-1].one_sided if tail is Tail.ONE_SIDED else comparisons[-1].two_sided
        logger.info(
            f"FedProx vs {regime.value}: t={primary.t_stat:.3f}, p={primary.p_value:.4g}",
            extra={"regime": regime.value},
        )
    return comparisons


def _per_client_means(runs: Sequence[RunRecord]) -> List[float]:
    return [float(v) for v in np.mean([r.metrics.per_client_accuracy for r in runs], axis=0)]


def _log_time_overhead(runs_by_regime: Dict[Regime, List[RunRecord]]) -> None:
    avg = runs_by_regime.get(Regime.FEDAVG)
    prox = runs_by_regime.get(Regime.FEDPROX)
    if not avg or not prox:
        return
    avg_time = float(np.mean([r.duration_s for r in avg]))
    prox_time = float(np.mean([r.duration_s for r in prox]))
    if avg_time > 0:
        logger.info(
            f"FedProx wall-clock overhead vs FedAvg: {(prox_time / avg_time - 1.0) * 100.0:+.1f}%",
            extra={"duration": prox_time},
        )


def run_experiment(
    cfg: ExperimentConfig,
    include_ablation: bool = True,
    workers: Optional[int] = None,
    clients: Optional[Sequence[ClientDataset]] = None,
    raw: Optional[RawDataset] = None,
) -> ExperimentResult:
    """
    Full pipeline for the configured regimes. With no regimes requested the
    report carries the heterogeneity section only.
    """
    start_time = time.perf_counter()
    if clients is None:
        raw, clients = prepare_clients(cfg)
    runner = ExperimentRunner(cfg, clients, workers)

    report = ExperimentReport(heterogeneity=heterogeneity_report(runner.clients))
    regimes = [r for r in Regime if r in set(cfg.regimes)]
    if not regimes:
        return ExperimentResult(report=report)

    if raw is not None:
        report.dataset = dataset_profile(raw)
    report.clients = summarize_clients(runner.clients)

    records: List[RunRecord] = []
    fedprox_mu = cfg.fedprox_mu
    if Regime.FEDPROX in regimes and fedprox_mu is None:
        report.validation = runner.run_validation_protocol()
        fedprox_mu = report.validation.selected_mu

    if include_ablation:
        report.ablation, ablation_runs = runner.run_ablation()
        records.extend(ablation_runs)

    runs_by_regime: Dict[Regime, List[RunRecord]] = {}
    summaries = []
    for regime in regimes:
        mu = fedprox_mu if regime is Regime.FEDPROX else (0.0 if regime is Regime.FEDAVG else None)
        runs = runner.run_regime(regime, mu)
        runs_by_regime[regime] = runs
        summaries.append(runner.summarize_regime(regime, runs, mu))
        records.extend(runs)
    report.regimes = summaries

    federated = runs_by_regime.get(Regime.FEDPROX) or runs_by_regime.get(Regime.FEDAVG)
    if Regime.LOCAL in runs_by_regime and federated:
        report.fairness = fairness_table(
            _per_client_means(runs_by_regime[Regime.LOCAL]),
            _per_client_means(federated),
            client_ids=[c.client_id for c in runner.clients],
            names=[c.name for c in runner.clients],
        )

    comparisons = compare_regimes(runs_by_regime, cfg.alpha, cfg.tail)
    if comparisons:
        report.statistics = comparisons

    if any(r in runs_by_regime for r in FEDERATED_REGIMES):
        report.communication = runner.communication_report()
    if Regime.FEDAVG in runs_by_regime and Regime.FEDPROX in runs_by_regime:
        report.stability = stability_comparison(
            [r.convergence for r in runs_by_regime[Regime.FEDAVG]],
            [r.convergence for r in runs_by_regime[Regime.FEDPROX]],
        )

    _log_time_overhead(runs_by_regime)
    report.environment = environment_stamp(runner.workers)
    logger.info(
        f"Experiment finished: {len(regimes)} regime(s) x {len(cfg.seeds)} seed(s)",
        extra={"duration": time.perf_counter() - start_time},
    )
    return ExperimentResult(report=report, runs=records)


def run_ablation(
    cfg: ExperimentConfig,
    clients: Optional[Sequence[ClientDataset]] = None,
    workers: Optional[int] = None,
) -> ExperimentResult:
    """Ablation fragment: the mu table plus every run behind it."""
    if clients is None:
        _, clients = prepare_clients(cfg)
    runner = ExperimentRunner(cfg, clients, workers)
    rows, records = runner.run_ablation()
    return ExperimentResult(report=ExperimentReport(ablation=rows), runs=records)


def run_validation_protocol(
    cfg: ExperimentConfig,
    protocol: Optional[ValidationProtocol] = None,
    clients: Optional[Sequence[ClientDataset]] = None,
    workers: Optional[int] = None,
) -> ValidationOutcome:
    if clients is None:
        _, clients = prepare_clients(cfg)
    return ExperimentRunner(cfg, clients, workers).run_validation_protocol(protocol)
