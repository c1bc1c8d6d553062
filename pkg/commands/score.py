import json
import logging
from pathlib import Path

from config import LOGGER_NAME
from fibrosis.segscore import score_query

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
    write_heatmap,
    write_masks,
    write_report,
)

logger = logging.getLogger(LOGGER_NAME)

DEFAULTS = {
    "model": None,
    "image": None,
    "out": None,
    "label": "",
    **ANOMALY_DEFAULTS,
    **ROI_DEFAULTS,
}


def add_arguments(parser):
    add_model_arguments(parser)
    parser.add_argument("--image", help="Query image (PNG)")
    parser.add_argument("--out", help="Directory for masks and heat map (default: <image>_score next to the image)")
    parser.add_argument("--label", help="Timepoint label recorded in the report")
    add_roi_arguments(parser)
    add_anomaly_arguments(parser)


def score_image(settings, model, image_path, out_dir, label="", bbox=None):
    """Score one image and write its artifacts; returns the QueryResult"""
    image = load_query(image_path)
    roi = resolve_roi(image, settings, bbox=bbox)
    stem = Path(image_path).stem
    result = score_query(
        model,
        image,
        roi,
        anomaly_config(settings),
        image_id=stem,
        label=label,
        score_on_resized=bool(settings.score_on_resized),
    )
    result.report.provenance = run_provenance(settings)
    write_masks(result, out_dir, stem)
    write_heatmap(result, out_dir, stem)
    write_report(result.report, out_dir, stem)
    return result


def run(settings):
    require(settings, "model", "image")
    image_path = Path(settings.image)
    out_dir = Path(settings.out) if settings.out else image_path.with_name(f"{image_path.stem}_score")
    model = load_model(settings.model)
    result = score_image(settings, model, image_path, out_dir, label=settings.label)
    print(json.dumps(result.report.to_dict(), indent=2, default=str))
    return 0
