"""
Classification metrics, per-client fairness and convergence diagnostics.
"""

from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from errors import DimensionMismatchError, UndefinedMetricError
from linear_model import predict_proba
from models import (
    ConvergenceDiag,
    FairnessRow,
    FairnessTable,
    MetricSummary,
    StabilityReport,
)

THRESHOLD = 0.5
CONVERGENCE_FRACTION = 0.95


def _check_inputs(probs, labels):
    probs = np.asarray(probs, dtype=float).ravel()
    labels = np.asarray(labels, dtype=int).ravel()
    if probs.shape != labels.shape:
        raise DimensionMismatchError(
            f"{probs.shape[0]} scores for {labels.shape[0]} labels"
        )
    if probs.size == 0:
        raise UndefinedMetricError("metric needs at least one sample")
    return probs, labels


def accuracy(probs, labels, threshold: float = THRESHOLD) -> float:
    """Fraction correct with p >= threshold classified positive."""
    probs, labels = _check_inputs(probs, labels)
    return float(np.mean((probs >= threshold).astype(int) == labels))


def auc_roc(probs, labels) -> float:
    """
    Mann-Whitney AUC: share of (positive, negative) pairs ranked correctly,
    ties credited one half. Midranks give the tie credit exactly.
    """
    probs, labels = _check_inputs(probs, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC is undefined when only one class is present")
    ranks = rankdata(probs)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def f1_score(probs, labels, threshold: float = THRESHOLD) -> float:
    """Harmonic mean of precision and recall; 0 when either is undefined or both are 0."""
    probs, labels = _check_inputs(probs, labels)
    predicted = probs >= threshold
    actual = labels == 1
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return float(2.0 * precision * recall / (precision + recall))


def convergence_rounds(
    accuracies: Sequence[float],
    weight_deltas: Optional[Sequence[float]] = None,
) -> ConvergenceDiag:
    """First 1-based round whose accuracy reaches 95% of the final accuracy."""
    accuracies = np.asarray(accuracies, dtype=float)
    if accuracies.size == 0:
        raise UndefinedMetricError("convergence needs a non-empty accuracy sequence")
    final = float(accuracies[-1])
    target = CONVERGENCE_FRACTION * final
    crossing = int(np.argmax(accuracies >= target)) + 1
    deltas = np.asarray(weight_deltas if weight_deltas is not None else [0.0], dtype=float)
    return ConvergenceDiag(
        rounds_to_95pct=crossing,
        final_accuracy=final,
        avg_weight_delta=float(deltas.mean()) if deltas.size else 0.0,
    )


def fairness_table(
    local: Sequence[float],
    federated: Sequence[float],
    client_ids: Optional[Sequence[int]] = None,
    names: Optional[Sequence[str]] = None,
) -> FairnessTable:
    """Per-client local vs federated accuracy with population stds and their reduction."""
    local = np.asarray(local, dtype=float)
    federated = np.asarray(federated, dtype=float)
    if local.shape != federated.shape or local.size == 0:
        raise DimensionMismatchError("local and federated columns must cover the same clients")
    client_ids = list(client_ids) if client_ids is not None else list(range(1, local.size + 1))
    names = list(names) if names is not None else [f"client_{cid}" for cid in client_ids]

    rows = [
        FairnessRow(
            client_id=cid,
            name=name,
            local_accuracy=float(lo),
            federated_accuracy=float(fe),
            improvement_pp=float((fe - lo) * 100.0),
        )
        for cid, name, lo, fe in zip(client_ids, names, local, federated)
    ]
    local_std = float(np.std(local))
    federated_std = float(np.std(federated))
    reduction = 1.0 - federated_std / local_std if local_std > 0 else 0.0
    return FairnessTable(
        rows=rows,
        local_std=local_std,
        federated_std=federated_std,
        std_reduction=reduction,
    )


def evaluate_model(params, clients: Sequence) -> MetricSummary:
    """Score one model on every client's test split and on their union."""
    clients = sorted(clients, key=lambda c: c.client_id)
    per_client_probs = [predict_proba(params, c.split.test_x) for c in clients]
    return summarize_predictions(per_client_probs, [c.split.test_y for c in clients])


def summarize_predictions(per_client_probs: Sequence, per_client_labels: Sequence) -> MetricSummary:
    """Pooled accuracy/AUC/F1 plus per-client accuracies of already computed scores."""
    probs = np.concatenate(per_client_probs)
    labels = np.concatenate(per_client_labels)
    per_client = [accuracy(p, y) for p, y in zip(per_client_probs, per_client_labels)]
    return MetricSummary(
        accuracy=accuracy(probs, labels),
        auc_roc=auc_roc(probs, labels),
        f1=f1_score(probs, labels),
        per_client_accuracy=per_client,
        fairness_std=float(np.std(per_client)),
    )


def _relative_reduction(baseline: float, candidate: float) -> float:
    return 1.0 - candidate / baseline if baseline > 0 else 0.0


def stability_comparison(
    fedavg: Sequence[ConvergenceDiag],
    fedprox: Sequence[ConvergenceDiag],
) -> StabilityReport:
    """Mean weight-change norm and convergence rounds of FedProx relative to FedAvg."""
    if not fedavg or not fedprox:
        raise UndefinedMetricError("stability comparison needs runs for both methods")
    avg_delta = float(np.mean([d.avg_weight_delta for d in fedavg]))
    prox_delta = float(np.mean([d.avg_weight_delta for d in fedprox]))
    avg_rounds = float(np.mean([d.rounds_to_95pct for d in fedavg]))
    prox_rounds = float(np.mean([d.rounds_to_95pct for d in fedprox]))
    return StabilityReport(
        fedavg_avg_weight_delta=avg_delta,
        fedprox_avg_weight_delta=prox_delta,
        weight_delta_reduction=_relative_reduction(avg_delta, prox_delta),
        fedavg_convergence_rounds=avg_rounds,
        fedprox_convergence_rounds=prox_rounds,
        convergence_speedup=_relative_reduction(avg_rounds, prox_rounds),
    )
