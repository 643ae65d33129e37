"""
Centralized and local-only logistic regression, the comparison anchors for
the federated regimes. Both run the same step-decay schedule as federated
training, mapped onto T*E epochs so the gradient-step budgets match.
"""

import time
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from data_ingest import CONTINUOUS_MASK, apply_standardizer, fit_standardizer
from errors import ConfigurationError
from evaluation import accuracy, summarize_predictions
from federation import learning_rate
from linear_model import ModelParams, l2_regularized_grad, predict_proba
from logging_config import get_logger
from models import FedConfig, MetricSummary, Regime

logger = get_logger(__name__)


@dataclass
class BaselineResult:
    regime: Regime
    params_per_site: List[ModelParams]
    metrics: MetricSummary
    duration_s: float = 0.0
    client_ids: List[int] = field(default_factory=list)


def sgd_train(
    features: np.ndarray,
    labels: np.ndarray,
    cfg: FedConfig,
    lam: float,
    seed: int,
) -> ModelParams:
    """
    Minibatch SGD with L2 on the weights for rounds * local_epochs epochs.
    Epoch e uses the federated rate of round e // local_epochs.
    """
    n = labels.shape[0]
    if n == 0:
        raise ConfigurationError("baseline training needs a non-empty train set")

    rng = np.random.default_rng(seed)
    params = ModelParams.zeros(features.shape[1])
    for epoch in range(cfg.rounds * cfg.local_epochs):
        lr = learning_rate(epoch // cfg.local_epochs, cfg)
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            g = l2_regularized_grad(params, features[batch], labels[batch], lam)
            params = ModelParams(
                weights=params.weights - lr * g.d_weights,
                bias=params.bias - lr * g.d_bias,
            )
    return params


def _pooled_restandardized(clients) -> Tuple[np.ndarray, np.ndarray, List[np.ndarray]]:
    """Raw train rows pooled and scaled with global statistics; test rows per client."""
    raw_train = np.vstack([c.partition.features[c.split.train_idx] for c in clients])
    scaler = fit_standardizer(raw_train, CONTINUOUS_MASK)
    train_x = apply_standardizer(raw_train, scaler)
    test_xs = [apply_standardizer(c.partition.features[c.split.test_idx], scaler) for c in clients]
    return train_x, np.concatenate([c.split.train_y for c in clients]), test_xs


def train_centralized(
    clients: Sequence,
    cfg: FedConfig,
    lam: float = 0.01,
    seed: int = 42,
    restandardize: bool = False,
) -> BaselineResult:
    """
    One model on the union of all client train splits.

    Clients are pooled in ascending id order. By default the already
    per-client standardized rows are pooled; ``restandardize`` pools the raw
    rows and fits one global scaler instead.
    """
    start_time = time.perf_counter()
    clients = sorted(clients, key=lambda c: c.client_id)
    if not clients:
        raise ConfigurationError("centralized training needs at least one client")

    if restandardize:
        train_x, train_y, test_xs = _pooled_restandardized(clients)
    else:
        train_x = np.vstack([c.split.train_x for c in clients])
        train_y = np.concatenate([c.split.train_y for c in clients])
        test_xs = [c.split.test_x for c in clients]

    params = sgd_train(train_x, train_y, cfg, lam, seed)
    metrics = summarize_predictions(
        [predict_proba(params, x) for x in test_xs],
        [c.split.test_y for c in clients],
    )
    duration = time.perf_counter() - start_time
    logger.debug(
        f"Centralized model trained on {train_y.shape[0]} samples",
        extra={"regime": Regime.CENTRALIZED.value, "seed": seed, "duration": duration},
    )
    return BaselineResult(
        regime=Regime.CENTRALIZED,
        params_per_site=[params],
        metrics=metrics,
        duration_s=duration,
        client_ids=[c.client_id for c in clients],
    )


def train_local_only(
    clients: Sequence,
    cfg: FedConfig,
    lam: float = 0.01,
    seed: int = 42,
) -> BaselineResult:
    """
    An independent model per client, scored on that client's own test split.
    Accuracy is the cross-client average; AUC and F1 pool the own-model scores.
    """
    start_time = time.perf_counter()
    clients = sorted(clients, key=lambda c: c.client_id)
    if not clients:
        raise ConfigurationError("local-only training needs at least one client")

    models = [sgd_train(c.split.train_x, c.split.train_y, cfg, lam, seed) for c in clients]
    probs = [predict_proba(m, c.split.test_x) for m, c in zip(models, clients)]
    labels = [c.split.test_y for c in clients]
    pooled = summarize_predictions(probs, labels)
    per_client = [accuracy(p, y) for p, y in zip(probs, labels)]
    metrics = pooled.model_copy(update={"accuracy": float(np.mean(per_client))})

    duration = time.perf_counter() - start_time
    logger.debug(
        f"Local-only models trained for {len(clients)} clients",
        extra={"regime": Regime.LOCAL.value, "seed": seed, "duration": duration},
    )
    return BaselineResult(
        regime=Regime.LOCAL,
        params_per_site=models,
        metrics=metrics,
        duration_s=duration,
        client_ids=[c.client_id for c in clients],
    )
