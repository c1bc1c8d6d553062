import logging
from pathlib import Path

from config import LOGGER_NAME
from fibrosis.segscore import score_query
from utils import write_json

from commands.common import (
    ANOMALY_DEFAULTS,
    ROI_DEFAULTS,
    add_anomaly_arguments,
    add_model_arguments,
    add_roi_arguments,
    anomaly_config,
    load_model,
    load_query,
    require,
    resolve_roi,
    run_provenance,
    write_masks,
)

logger = logging.getLogger(LOGGER_NAME)

DEFAULTS = {
    "model": None,
    "image": None,
    "out": None,
    **ANOMALY_DEFAULTS,
    **ROI_DEFAULTS,
}


def add_arguments(parser):
    add_model_arguments(parser)
    parser.add_argument("--image", help="Query image (PNG)")
    parser.add_argument("--out", help="Output directory for the mask PNGs and coordinate CSVs")
    add_roi_arguments(parser)
    add_anomaly_arguments(parser)


def run(settings):
    require(settings, "model", "image", "out")
    model = load_model(settings.model)
    image = load_query(settings.image)
    roi = resolve_roi(image, settings)
    stem = Path(settings.image).stem
    result = score_query(model, image, roi, anomaly_config(settings), image_id=stem,
                         score_on_resized=bool(settings.score_on_resized))

    write_masks(result, settings.out, stem)
    write_json({
        "image_id": stem,
        "roi": roi.to_dict(),
        "theta_g": result.green.threshold,
        "theta_r": result.red.threshold,
        "green_pixels": result.green.count,
        "red_pixels": result.red.count,
        "provenance": run_provenance(settings),
    }, Path(settings.out) / f"{stem}_segmentation.json")
    return 0
