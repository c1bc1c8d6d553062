"""Arguments and helpers shared by the query commands (score, segment, heatmap, eval)"""
import logging
from pathlib import Path

import numpy as np

from config import (
    DEFAULT_LAMBDA,
    DEFAULT_N_Z,
    DEFAULT_ROI_BLUR,
    DEFAULT_ROI_QUANTILE,
    DEFAULT_SEARCH_LR,
    DEFAULT_SEARCH_STEPS,
    DEFAULT_SEED,
    LOGGER_NAME,
    MIN_ROI_SIZE,
    Z_MODES,
)
from errors import ConfigError
from fibrosis.anomaly import AnomalyConfig
from fibrosis.model import fingerprint, load_checkpoint
from fibrosis.roi import HeuristicParams, detect_roi_heuristic, roi_from_config
from utils import load_rgb_png, provenance, save_mask_png, save_rgb_png, write_frame, write_json

logger = logging.getLogger(LOGGER_NAME)

ANOMALY_DEFAULTS = {
    "lam": DEFAULT_LAMBDA,
    "steps": DEFAULT_SEARCH_STEPS,
    "search_lr": DEFAULT_SEARCH_LR,
    "n_z": DEFAULT_N_Z,
    "n_starts": 1,
    "z_mode": "search",
    "seed": DEFAULT_SEED,
}

ROI_DEFAULTS = {
    "roi": None,
    "roi_auto": False,
    "roi_quantile": DEFAULT_ROI_QUANTILE,
    "roi_blur": DEFAULT_ROI_BLUR,
    "min_roi_size": MIN_ROI_SIZE,
    "score_on_resized": False,
}


def add_model_arguments(parser):
    parser.add_argument("--model", help="Checkpoint written by the train command")


def add_anomaly_arguments(parser):
    group = parser.add_argument_group("latent search")
    group.add_argument("--lambda", dest="lam", type=float, help="Weight of the feature-matching loss, in [0, 1]")
    group.add_argument("--steps", type=int, help="Adam steps per latent search")
    group.add_argument("--search-lr", type=float, help="Learning rate of the latent search")
    group.add_argument("--n-z", type=int, help="Latent samples for threshold estimation")
    group.add_argument("--n-starts", type=int, help="Random starts of the single best-match search")
    group.add_argument("--z-mode", choices=Z_MODES, help="Optimize z (search) or use random latents")
    group.add_argument("--seed", type=int, help="Seed for all random streams")


def add_roi_arguments(parser):
    group = parser.add_argument_group("region of interest")
    where = group.add_mutually_exclusive_group()
    where.add_argument("--roi", help="Left-ventricle box as x0,y0,w,h")
    where.add_argument("--roi-auto", action="store_true", default=None,
                       help="Detect the ROI as the largest bright region")
    group.add_argument("--roi-quantile", type=float, help="Intensity quantile for --roi-auto")
    group.add_argument("--roi-blur", type=float, help="Gaussian blur sigma for --roi-auto")
    group.add_argument("--min-roi-size", type=int, help="Smallest accepted ROI side in pixels")
    group.add_argument("--score-on-resized", action="store_true", default=None,
                       help="Segment the ROI after resizing it to the model's patch size")


def require(settings, *names):
    missing = [n for n in names if getattr(settings, n, None) in (None, "")]
    if missing:
        flags = ", ".join(f"--{n.replace('_', '-')}" for n in missing)
        raise ConfigError(f"{settings.command}: missing required setting(s) {flags}")


def anomaly_config(settings):
    return AnomalyConfig(
        lam=float(settings.lam),
        steps=int(settings.steps),
        lr=float(settings.search_lr),
        n_z=int(settings.n_z),
        seed=int(settings.seed),
        z_mode=settings.z_mode,
        n_starts=int(settings.n_starts),
    )


def load_model(path):
    model = load_checkpoint(path)
    logger.info(f"Loaded model {fingerprint(model)} from {path}")
    return model


def resolve_roi(image, settings, bbox=None):
    """ROI from --roi, then --roi-auto, then the given bbox (a manifest ventricle), then the whole image"""
    min_size = int(settings.min_roi_size)
    if settings.roi is not None:
        return roi_from_config(image, settings.roi, min_size=min_size)
    if settings.roi_auto:
        params = HeuristicParams(
            blur_radius=float(settings.roi_blur),
            intensity_quantile=float(settings.roi_quantile),
            min_size=min_size,
        )
        return detect_roi_heuristic(image, params)
    if bbox is not None:
        return roi_from_config(image, bbox, min_size=min_size)
    height, width = np.asarray(image).shape[:2]
    return roi_from_config(image, (0, 0, width, height), min_size=min_size)


def load_query(path):
    return load_rgb_png(path)


def run_provenance(settings):
    return provenance(settings.command, int(getattr(settings, "seed", DEFAULT_SEED)), settings)


def write_masks(result, out_dir, stem):
    out_dir = Path(out_dir)
    for mask in (result.green, result.red):
        save_mask_png(mask.bitmap, out_dir / f"{stem}_{mask.channel}_mask.png")
        write_frame(mask.to_frame(), out_dir / f"{stem}_{mask.channel}_coords.csv")


def write_heatmap(result, out_dir, stem):
    out_dir = Path(out_dir)
    result.heatmap.save(out_dir / f"{stem}_heatmap.png", out_dir / f"{stem}_heatmap.csv")
    save_rgb_png(result.reconstruction, out_dir / f"{stem}_reconstruction.png")


def write_report(report, out_dir, stem):
    write_json(report.to_dict(), Path(out_dir) / f"{stem}_report.json")
