"""
Non-IID severity measures across clients: label-distribution Jensen-Shannon
divergence, Gaussian-kernel MMD between feature distributions, and the Gini
coefficient of client sample sizes.
"""

from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.special import rel_entr

from errors import DimensionMismatchError, InvalidDistributionError
from logging_config import get_logger
from models import HeterogeneityReport

logger = get_logger(__name__)

LN2 = np.log(2.0)


def _as_distribution(p: Sequence[float], name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidDistributionError(f"{name} must be a non-empty probability vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidDistributionError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidDistributionError(f"{name} sums to {p.sum()}, expected 1")
    return p


def label_distribution(labels: Sequence[int]) -> np.ndarray:
    """(P(y=0), P(y=1)) of a label vector."""
    rate = float(np.mean(labels))
    return np.array([1.0 - rate, rate])


def jensen_shannon(p: Sequence[float], q: Sequence[float]) -> float:
    """Base-2 Jensen-Shannon divergence, in [0, 1]."""
    p = _as_distribution(p, "p")
    q = _as_distribution(q, "q")
    if p.shape != q.shape:
        raise InvalidDistributionError("p and q have different supports")
    m = 0.5 * (p + q)
    nats = 0.5 * rel_entr(p, m).sum() + 0.5 * rel_entr(q, m).sum()
    return float(max(nats / LN2, 0.0))


def median_bandwidth(x: np.ndarray, y: np.ndarray) -> float:
    """Median pairwise Euclidean distance over the pooled sample; 1 if that is 0."""
    pooled = np.vstack([x, y])
    if pooled.shape[0] < 2:
        return 1.0
    median = float(np.median(pdist(pooled)))
    return median if median > 0 else 1.0


def gaussian_mmd(x: np.ndarray, y: np.ndarray, bandwidth: Optional[float] = None) -> float:
    """
    Biased (V-statistic) MMD with k(a, b) = exp(-|a-b|^2 / (2 gamma^2)).
    gamma defaults to the median heuristic.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise DimensionMismatchError("MMD needs non-empty samples")
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatchError(
            f"feature dimensions differ: {x.shape[1]} vs {y.shape[1]}"
        )
    gamma = median_bandwidth(x, y) if bandwidth is None else float(bandwidth)
    scale = 2.0 * gamma ** 2

    k_xx = np.exp(-cdist(x, x, "sqeuclidean") / scale).mean()
    k_yy = np.exp(-cdist(y, y, "sqeuclidean") / scale).mean()
    k_xy = np.exp(-cdist(x, y, "sqeuclidean") / scale).mean()
    mmd2 = k_xx + k_yy - 2.0 * k_xy
    # below summation round-off the estimate is indistinguishable from zero
    if mmd2 <= 8 * np.finfo(float).eps * (k_xx + k_yy + 2.0 * k_xy):
        return 0.0
    return float(np.sqrt(mmd2))


def gini_coefficient(sizes: Sequence[float]) -> float:
    """G = sum_i sum_j |n_i - n_j| / (2 K^2 mean)."""
    sizes = np.asarray(sizes, dtype=float)
    if sizes.size == 0:
        raise InvalidDistributionError("at least one size is required")
    if np.any(sizes <= 0):
        raise InvalidDistributionError("client sizes must be positive")
    k = sizes.size
    total = np.abs(sizes[:, None] - sizes[None, :]).sum()
    return float(total / (2.0 * k * k * sizes.mean()))


def heterogeneity_report(clients: Sequence) -> HeterogeneityReport:
    """
    Pairwise JSD/MMD matrices and the size Gini for a list of ClientDataset.
    Pairs are filled in fixed (i, j) order and mirrored, so the matrices are
    exactly symmetric with zero diagonals.
    """
    k = len(clients)
    jsd = np.zeros((k, k))
    mmd = np.zeros((k, k))
    dists = [label_distribution(c.labels) for c in clients]
    feats = [c.standardized_features() for c in clients]

    for i, j in combinations(range(k), 2):
        jsd[i, j] = jsd[j, i] = jensen_shannon(dists[i], dists[j])
        mmd[i, j] = mmd[j, i] = gaussian_mmd(feats[i], feats[j])

    upper = np.triu_indices(k, 1)
    gini = gini_coefficient([c.sample_count for c in clients])
    report = HeterogeneityReport(
        client_ids=[c.client_id for c in clients],
        jsd_matrix=jsd.tolist(),
        mmd_matrix=mmd.tolist(),
        gini=gini,
        avg_jsd=float(jsd[upper].mean()) if k > 1 else 0.0,
        avg_mmd=float(mmd[upper].mean()) if k > 1 else 0.0,
        max_mmd=float(mmd[upper].max()) if k > 1 else 0.0,
    )
    logger.info(
        f"Heterogeneity: avg JSD {report.avg_jsd:.4f}, avg MMD {report.avg_mmd:.4f}, "
        f"max MMD {report.max_mmd:.4f}, Gini {report.gini:.4f}"
    )
    return report
