import logging
from dataclasses import dataclass, field

import numpy as np
import polars as pl
from scipy.spatial.distance import pdist, squareform

from config import (
    DEFAULT_PERPLEXITY,
    DEFAULT_TSNE_ITERS,
    LOGGER_NAME,
    TSNE_BISECTION_STEPS,
    TSNE_EXAGGERATION,
    TSNE_EXAGGERATION_ITERS,
    TSNE_LEARNING_RATE,
    TSNE_MOMENTUM,
    TSNE_PERPLEXITY_TOL,
)
from errors import ConfigError, DegenerateInputError, PerplexityError, ShapeError
from utils import derive_rng

logger = logging.getLogger(LOGGER_NAME)

MIN_GAIN = 0.01
INIT_SCALE = 1e-4


@dataclass
class TsneResult:
    coords: np.ndarray
    kl_trace: list = field(default_factory=list)
    perplexity: float = DEFAULT_PERPLEXITY

    def to_frame(self, labels=None):
        labels = [""] * len(self.coords) if labels is None else list(labels)
        return pl.DataFrame({
            "x": self.coords[:, 0],
            "y": self.coords[:, 1],
            "label": labels,
        })

    def kl_frame(self):
        return pl.DataFrame({
            "iteration": np.arange(1, len(self.kl_trace) + 1),
            "kl": self.kl_trace,
        })


def default_perplexity(n):
    return max(1.0, min(DEFAULT_PERPLEXITY, (n - 1) / 3.0))


def _row_affinities(distances, target_entropy):
    """Gaussian conditional probabilities for one row, precision found by bisection"""
    beta, lo, hi = 1.0, 0.0, np.inf
    shifted = distances - distances.min()
    for _ in range(TSNE_BISECTION_STEPS):
        weights = np.exp(-shifted * beta)
        total = weights.sum()
        probs = weights / total
        entropy = np.log(total) + beta * np.sum(shifted * probs)
        diff = entropy - target_entropy
        if abs(diff) < TSNE_PERPLEXITY_TOL:
            break
        if diff > 0:
            lo = beta
            beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
        else:
            hi = beta
            beta = (beta + lo) / 2.0
    return probs


def joint_probabilities(X, perplexity):
    """Symmetrized affinities P (sum 1, zero diagonal)"""
    n = X.shape[0]
    D = squareform(pdist(X, "sqeuclidean"))
    target = np.log(perplexity)
    P = np.zeros((n, n))
    others = ~np.eye(n, dtype=bool)
    for i in range(n):
        P[i, others[i]] = _row_affinities(D[i, others[i]], target)
    P = (P + P.T) / (2.0 * n)
    return np.maximum(P, 1e-12) * others


def _kl(P, Q):
    nz = P > 0
    return float(np.sum(P[nz] * np.log(P[nz] / Q[nz])))


def tsne_project(X, perplexity=None, iters=DEFAULT_TSNE_ITERS, seed=0):
    """Exact t-SNE to two dimensions

    Early exaggeration x12 for the first 250 iterations, momentum 0.5 then 0.8,
    adaptive gains. kl_trace holds KL(P || Q) per iteration against the
    unexaggerated P.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ShapeError(f"t-SNE input must be a nonempty N x d matrix, got {X.shape}")
    n = X.shape[0]
    perplexity = default_perplexity(n) if perplexity is None else float(perplexity)
    if not 1.0 <= perplexity < n:
        raise PerplexityError(f"perplexity must satisfy 1 <= perplexity < N={n}, got {perplexity}")
    if iters < 1:
        raise ConfigError(f"iters must be >= 1, got {iters}")
    if not np.all(np.isfinite(X)):
        raise DegenerateInputError("t-SNE input contains non-finite values")
    if np.all(X == X[0]):
        raise DegenerateInputError(f"all {n} input rows are identical")

    P = joint_probabilities(X, perplexity)
    Y = derive_rng(seed, "tsne-init").standard_normal((n, 2)) * INIT_SCALE
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl_trace = []

    for it in range(iters):
        exaggerating = it < TSNE_EXAGGERATION_ITERS
        P_eff = P * TSNE_EXAGGERATION if exaggerating else P
        momentum = TSNE_MOMENTUM[0] if exaggerating else TSNE_MOMENTUM[1]

        num = 1.0 / (1.0 + squareform(pdist(Y, "sqeuclidean")))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)

        W = (P_eff - Q) * num
        grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)

        same_sign = (grad > 0) == (velocity > 0)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, MIN_GAIN)
        velocity = momentum * velocity - TSNE_LEARNING_RATE * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

        kl_trace.append(_kl(P, Q))
        if (it + 1) % 100 == 0:
            logger.debug(f"t-SNE iteration {it + 1}/{iters}: KL={kl_trace[-1]:.5f}")

    if not np.all(np.isfinite(Y)):
        raise DegenerateInputError("t-SNE diverged to non-finite coordinates")
    logger.info(f"t-SNE of {n} points (perplexity={perplexity:g}, {iters} iterations): "
                f"final KL={kl_trace[-1]:.5f}")
    return TsneResult(coords=Y, kl_trace=kl_trace, perplexity=perplexity)
