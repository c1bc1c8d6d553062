import logging
from pathlib import Path

from config import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_LATENT_DIM,
    DEFAULT_PATCH_COUNT,
    DEFAULT_PATCH_SIZE,
    DEFAULT_SEED,
    GAN_BETA1,
    GAN_BETA2,
    GAN_LEARNING_RATE,
    LOGGER_NAME,
)
from fibrosis.model import build, fingerprint, save_checkpoint
from fibrosis.trainer import TrainConfig, sample_patches, train
from utils import load_rgb_png, write_json

from commands.common import require, run_provenance

logger = logging.getLogger(LOGGER_NAME)

DEFAULTS = {
    "image": None,
    "out": None,
    "patches": DEFAULT_PATCH_COUNT,
    "size": DEFAULT_PATCH_SIZE,
    "epochs": DEFAULT_EPOCHS,
    "batch_size": DEFAULT_BATCH_SIZE,
    "latent_dim": DEFAULT_LATENT_DIM,
    "lr": GAN_LEARNING_RATE,
    "beta1": GAN_BETA1,
    "beta2": GAN_BETA2,
    "seed": DEFAULT_SEED,
    "checkpoint_every": 0,
}


def add_arguments(parser):
    parser.add_argument("--image", help="The single normal training image (PNG)")
    parser.add_argument("--out", help="Output checkpoint path")
    parser.add_argument("--patches", type=int, help="Number of random training patches")
    parser.add_argument("--size", type=int, help="Patch side in pixels (multiple of 4)")
    parser.add_argument("--epochs", type=int, help="Training epochs")
    parser.add_argument("--batch-size", type=int, help="Mini-batch size")
    parser.add_argument("--latent-dim", type=int, help="Latent vector length")
    parser.add_argument("--lr", type=float, help="Adam learning rate")
    parser.add_argument("--beta1", type=float, help="Adam beta1")
    parser.add_argument("--beta2", type=float, help="Adam beta2")
    parser.add_argument("--seed", type=int, help="Seed for patches, initialization and training")
    parser.add_argument("--checkpoint-every", type=int, help="Also save a checkpoint every N epochs")


def run(settings):
    require(settings, "image", "out")
    out = Path(settings.out)
    seed = int(settings.seed)

    image = load_rgb_png(settings.image)
    patches = sample_patches(image, M=int(settings.patches), s=int(settings.size), seed=seed,
                             source_id=Path(settings.image).name)
    cfg = TrainConfig(
        epochs=int(settings.epochs),
        batch_size=int(settings.batch_size),
        lr=float(settings.lr),
        beta1=float(settings.beta1),
        beta2=float(settings.beta2),
        seed=seed,
        checkpoint_every=int(settings.checkpoint_every),
        checkpoint_dir=str(out.parent),
    )
    model = build(seed, latent_dim=int(settings.latent_dim), patch_size=int(settings.size))
    model, log = train(model, patches, cfg)
    model.metadata["provenance"] = run_provenance(settings)

    save_checkpoint(model, out)
    log.write_csv(out.with_suffix(".trainlog.csv"))
    write_json({"checkpoint_id": fingerprint(model), **model.metadata}, out.with_suffix(".json"))
    logger.info(f"Trained model {fingerprint(model)} saved to {out}")
    return 0
