import logging
from dataclasses import dataclass, field

import numpy as np
import polars as pl

from config import (
    DEFAULT_LAMBDA,
    DEFAULT_N_Z,
    DEFAULT_SEARCH_LR,
    DEFAULT_SEARCH_STEPS,
    LOGGER_NAME,
    SEARCH_CHUNK,
    Z_MODES,
)
from errors import ConfigError, NumericError, ShapeError
from fibrosis.anomaly.losses import check_lambda, per_sample_losses
from fibrosis.model import (
    check_latent,
    discriminator_forward,
    frozen,
    generator_forward,
    patches_to_tensor,
    tensor_to_patches,
)
from fibrosis.tensor_core import Adam, Tensor, no_grad
from utils import derive_rng, resize_bilinear

logger = logging.getLogger(LOGGER_NAME)


@dataclass
class AnomalyConfig:
    lam: float = DEFAULT_LAMBDA
    steps: int = DEFAULT_SEARCH_STEPS
    lr: float = DEFAULT_SEARCH_LR
    n_z: int = DEFAULT_N_Z
    seed: int = 0
    z_mode: str = "search"
    n_starts: int = 1

    def __post_init__(self):
        check_lambda(self.lam)
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.n_z < 1 or self.n_starts < 1:
            raise ConfigError(f"n_z and n_starts must be >= 1, got {self.n_z}, {self.n_starts}")
        if self.z_mode not in Z_MODES:
            raise ConfigError(f"z_mode must be one of {Z_MODES}, got {self.z_mode!r}")


@dataclass
class SearchResult:
    z: np.ndarray
    reconstruction: np.ndarray
    loss: float
    loss_trace: list = field(default_factory=list)
    best_trace: list = field(default_factory=list)

    def trace_frame(self):
        return pl.DataFrame({
            "step": list(range(len(self.loss_trace))),
            "loss": self.loss_trace,
            "best_loss": self.best_trace,
        })


@dataclass
class ReconstructionBatch:
    z: np.ndarray
    reconstructions: np.ndarray
    losses: np.ndarray

    def best(self):
        i = int(np.argmin(self.losses))
        return self.z[i], self.reconstructions[i], float(self.losses[i])


def fit_query(model, query):
    """Resize a query raster to the model's patch extents"""
    query = np.asarray(query, dtype=np.float64)
    if query.ndim != 3 or query.shape[2] != 3:
        raise ShapeError(f"query must be HxWx3, got {query.shape}")
    return resize_bilinear(query, (model.patch_size, model.patch_size))


def _search_chunk(model, x, fx, z0, cfg):
    """Adam on the rows of z0 jointly; every row keeps its own best-so-far point"""
    k = z0.shape[0]
    z = Tensor(z0.copy(), requires_grad=True)
    opt = Adam([z], lr=cfg.lr)
    best_loss = np.full(k, np.inf)
    best_z = z0.copy()
    best_rec = None
    traces = np.empty((cfg.steps + 1, k))

    with frozen(model):
        for step in range(cfg.steps + 1):
            gz = generator_forward(model, z)
            losses = per_sample_losses(model, x, gz, cfg.lam, fx=fx)
            values = losses.data.copy()
            if not np.all(np.isfinite(values)):
                raise NumericError(f"latent search produced a non-finite loss at step {step}")
            if best_rec is None:
                best_rec = gz.data.copy()
            improved = values < best_loss
            best_loss[improved] = values[improved]
            best_z[improved] = z.data[improved]
            best_rec[improved] = gz.data[improved]
            traces[step] = values
            if step < cfg.steps:
                opt.zero_grad()
                losses.sum().backward()
                opt.step()

    results = []
    for i in range(k):
        trace = traces[:, i].tolist()
        results.append(SearchResult(
            z=best_z[i],
            reconstruction=best_rec[i].transpose(1, 2, 0),
            loss=float(best_loss[i]),
            loss_trace=trace,
            best_trace=np.minimum.accumulate(traces[:, i]).tolist(),
        ))
    return results


def search_batch(model, query, z0, cfg):
    """Run one latent search per row of z0 against one query; returns SearchResults"""
    z0 = check_latent(model, z0).data
    z0 = z0.reshape(-1, model.latent_dim)
    x = patches_to_tensor(fit_query(model, query))
    with no_grad():
        _, fx = discriminator_forward(model, x)

    results = []
    for start in range(0, z0.shape[0], SEARCH_CHUNK):
        results.extend(_search_chunk(model, x, fx, z0[start:start + SEARCH_CHUNK], cfg))
    return results


def initial_latents(model, cfg, n, purpose="latent-search"):
    return derive_rng(cfg.seed, purpose).standard_normal((n, model.latent_dim))


def latent_search(model, query, cfg, z0=None):
    """Find z whose G(z) best matches the query under the combined loss

    Starts from seeded Gaussian latents (cfg.n_starts of them) unless z0 is
    given, and returns the start with the lowest best-so-far loss.
    """
    if z0 is None:
        z0 = initial_latents(model, cfg, cfg.n_starts)
    results = search_batch(model, query, z0, cfg)
    best = min(results, key=lambda r: r.loss)
    logger.debug(f"Latent search: {cfg.steps} steps, best loss {best.loss:.5f}")
    return best


def reconstruct_batch(model, query, cfg, n=None):
    """n reconstructions of a query: searched latents, or plain random latents in "random" mode"""
    n = cfg.n_z if n is None else n
    z0 = initial_latents(model, cfg, n)
    query = fit_query(model, query)

    if cfg.z_mode == "random":
        x = patches_to_tensor(query)
        reconstructions, losses = [], []
        with no_grad():
            for start in range(0, n, SEARCH_CHUNK):
                gz = generator_forward(model, z0[start:start + SEARCH_CHUNK])
                losses.append(per_sample_losses(model, x, gz, cfg.lam).data)
                reconstructions.append(tensor_to_patches(gz))
        return ReconstructionBatch(z=z0, reconstructions=np.concatenate(reconstructions),
                                   losses=np.concatenate(losses))

    results = search_batch(model, query, z0, cfg)
    logger.info(f"Searched {n} latents for {cfg.steps} steps "
                f"(best loss {min(r.loss for r in results):.5f})")
    return ReconstructionBatch(
        z=np.stack([r.z for r in results]),
        reconstructions=np.stack([r.reconstruction for r in results]),
        losses=np.array([r.loss for r in results]),
    )
