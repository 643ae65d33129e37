"""
Logistic-regression primitives shared by every training regime.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from errors import ConfigurationError, DimensionMismatchError

_SIGMOID_LO = np.finfo(float).tiny
_SIGMOID_HI = np.nextafter(1.0, 0.0)
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class ModelParams:
    weights: np.ndarray
    bias: float

    @property
    def dimension(self) -> int:
        return int(self.weights.shape[0])

    @classmethod
    def zeros(cls, d: int) -> "ModelParams":
        return cls(weights=np.zeros(d), bias=0.0)

    @classmethod
    def from_vector(cls, theta: np.ndarray) -> "ModelParams":
        """Inverse of as_vector: last entry is the bias."""
        theta = np.asarray(theta, dtype=float)
        return cls(weights=theta[:-1].copy(), bias=float(theta[-1]))

    def as_vector(self) -> np.ndarray:
        """Weights followed by bias, the layout used for proximal and delta norms."""
        return np.append(self.weights, self.bias)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights)) and np.isfinite(self.bias))


@dataclass(frozen=True)
class GradientVec:
    d_weights: np.ndarray
    d_bias: float

    def as_vector(self) -> np.ndarray:
        return np.append(self.d_weights, self.d_bias)


GradientFn = Callable[[ModelParams, np.ndarray, np.ndarray], GradientVec]


def sigmoid(z):
    """Logistic function, kept strictly inside (0, 1) even where exp underflows."""
    out = np.clip(expit(z), _SIGMOID_LO, _SIGMOID_HI)
    return float(out) if np.ndim(out) == 0 else out


def _logits(params: ModelParams, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != params.dimension:
        raise DimensionMismatchError(
            f"expected {params.dimension} features, got {x.shape[-1]}"
        )
    return x @ params.weights + params.bias


def predict_proba(params: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.asarray(sigmoid(_logits(params, x)), dtype=float).reshape(x.shape[0])


def loss(params: ModelParams, x: np.ndarray, y: int) -> float:
    """Cross-entropy of a single sample."""
    return batch_loss(params, np.atleast_2d(x), np.array([y]))


def batch_loss(params: ModelParams, x: np.ndarray, y: np.ndarray, l2: float = 0.0) -> float:
    """
    Mean cross-entropy over a batch plus (l2/2)·|w|^2. Probabilities are
    clamped to [1e-12, 1 - 1e-12] before the logs, so one sample costs at
    most -log(1e-12) ~ 27.63.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    z = _logits(params, x)
    # 1 - p as expit(-z)
    p = np.clip(expit(z), PROB_CLAMP, 1.0 - PROB_CLAMP)
    q = np.clip(expit(-z), PROB_CLAMP, 1.0 - PROB_CLAMP)
    ce = -(y * np.log(p) + (1.0 - y) * np.log(q))
    return float(ce.mean() + 0.5 * l2 * params.weights @ params.weights)


def grad(params: ModelParams, x: np.ndarray, y: np.ndarray) -> GradientVec:
    """Mean over the batch of (sigma(w.x + b) - y) * x, and of the residual for the bias."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    residual = predict_proba(params, x) - np.asarray(y, dtype=float)
    return GradientVec(
        d_weights=residual @ x / x.shape[0],
        d_bias=float(residual.mean()),
    )


def l2_regularized_grad(params: ModelParams, x: np.ndarray, y: np.ndarray, lam: float = 0.01) -> GradientVec:
    """grad plus lam·w on the weights; the bias is not penalized."""
    if lam < 0:
        raise ConfigurationError("lambda must be non-negative")
    g = grad(params, x, y)
    return GradientVec(d_weights=g.d_weights + lam * params.weights, d_bias=g.d_bias)
