import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import polars as pl

from config import (
    ADAM_EPS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    GAN_BETA1,
    GAN_BETA2,
    GAN_LEARNING_RATE,
    LOGGER_NAME,
)
from errors import ConfigError, NumericError, ShapeError, TrainingDivergedError
from fibrosis.model import (
    discriminator_forward,
    frozen,
    generator_forward,
    patches_to_tensor,
    save_checkpoint,
)
from fibrosis.tensor_core import Adam, bce_loss, no_grad
from utils import derive_rng, write_frame

logger = logging.getLogger(LOGGER_NAME)

LOG_COLUMNS = ["epoch", "d_loss", "g_loss", "d_real", "d_fake"]


@dataclass
class TrainConfig:
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    lr: float = GAN_LEARNING_RATE
    beta1: float = GAN_BETA1
    beta2: float = GAN_BETA2
    eps: float = ADAM_EPS
    seed: int = 0
    checkpoint_every: int = 0
    checkpoint_dir: str = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.checkpoint_every < 0:
            raise ConfigError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")


@dataclass
class TrainLog:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def append(self, epoch, d_loss, g_loss, d_real, d_fake):
        self.rows.append({
            "epoch": epoch,
            "d_loss": d_loss,
            "g_loss": g_loss,
            "d_real": d_real,
            "d_fake": d_fake,
        })

    def to_frame(self):
        if not self.rows:
            return pl.DataFrame(schema={c: (pl.Int64 if c == "epoch" else pl.Float64) for c in LOG_COLUMNS})
        return pl.DataFrame(self.rows).select(LOG_COLUMNS)

    def write_csv(self, path):
        write_frame(self.to_frame(), path)


def _train_step(model, real, z, d_opt, g_opt):
    """One discriminator update then one generator update; returns batch stats"""
    with no_grad():
        fake = generator_forward(model, z).data

    d_opt.zero_grad()
    p_real, _ = discriminator_forward(model, real)
    p_fake, _ = discriminator_forward(model, fake)
    d_loss = bce_loss(p_real, 1.0) + bce_loss(p_fake, 0.0)
    d_loss.backward()
    d_opt.step()

    g_opt.zero_grad()
    with frozen(model, "discriminator"):
        p_gen, _ = discriminator_forward(model, generator_forward(model, z))
        g_loss = bce_loss(p_gen, 1.0)
        g_loss.backward()
    g_opt.step()

    return d_loss.item(), g_loss.item(), float(p_real.data.mean()), float(p_fake.data.mean())


def train(model, patches, cfg):
    """Adversarial training on a PatchSet; returns (trained copy of model, TrainLog)"""
    if len(patches) < cfg.batch_size:
        raise ConfigError(f"batch_size {cfg.batch_size} exceeds patch count {len(patches)}")
    if tuple(patches.patches.shape[1:]) != tuple(model.input_size):
        raise ShapeError(f"patches {patches.patches.shape[1:]} do not match model input {model.input_size}")

    model = model.copy()
    d_opt = Adam(model.discriminator.values(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    g_opt = Adam(model.generator.values(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    order_rng = derive_rng(cfg.seed, "batch-order")
    latent_rng = derive_rng(cfg.seed, "train-latent")
    data = patches_to_tensor(patches.patches).data
    log = TrainLog()

    logger.info(f"Training for {cfg.epochs} epochs on {len(patches)} patches (batch {cfg.batch_size})")
    for epoch in range(1, cfg.epochs + 1):
        order = order_rng.permutation(len(patches))
        stats = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            z = latent_rng.standard_normal((len(idx), model.latent_dim))
            try:
                stats.append(_train_step(model, data[idx], z, d_opt, g_opt))
            except NumericError as e:
                raise TrainingDivergedError(epoch, f"Training diverged at epoch {epoch}: {e}") from e

        d_loss, g_loss, d_real, d_fake = np.mean(stats, axis=0)
        if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
            raise TrainingDivergedError(epoch)
        log.append(epoch, float(d_loss), float(g_loss), float(d_real), float(d_fake))
        logger.info(f"Epoch {epoch}/{cfg.epochs}: d_loss={d_loss:.4f} g_loss={g_loss:.4f} "
                    f"D(real)={d_real:.3f} D(fake)={d_fake:.3f}")

        if cfg.checkpoint_every and cfg.checkpoint_dir and epoch % cfg.checkpoint_every == 0:
            save_checkpoint(model, Path(cfg.checkpoint_dir) / f"epoch_{epoch:04d}.ckpt")

    model.metadata = dict(model.metadata, epochs=cfg.epochs, source_id=patches.source_id,
                          patch_seed=patches.seed, train_seed=cfg.seed)
    return model, log
