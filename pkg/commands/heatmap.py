import logging
from pathlib import Path

from config import LOGGER_NAME
from fibrosis.anomaly import latent_search, residual_heatmap
from fibrosis.roi import crop_roi
from utils import save_rgb_png, write_frame, write_json

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
    parser.add_argument("--out", help="Output directory for the heat map PNG/CSV and the reconstruction")
    add_roi_arguments(parser)
    add_anomaly_arguments(parser)


def run(settings):
    require(settings, "model", "image", "out")
    model = load_model(settings.model)
    image = load_query(settings.image)
    roi = resolve_roi(image, settings)
    query_roi = crop_roi(image, roi)
    cfg = anomaly_config(settings)

    result = latent_search(model, query_roi, cfg)
    heatmap = residual_heatmap(query_roi, result.reconstruction)

    out = Path(settings.out)
    stem = Path(settings.image).stem
    heatmap.save(out / f"{stem}_heatmap.png", out / f"{stem}_heatmap.csv")
    save_rgb_png(result.reconstruction, out / f"{stem}_reconstruction.png")
    write_frame(result.trace_frame(), out / f"{stem}_search_trace.csv")
    write_json({
        "image_id": stem,
        "roi": roi.to_dict(),
        "loss": result.loss,
        "heatmap_mean": float(heatmap.display.mean()),
        "provenance": run_provenance(settings),
    }, out / f"{stem}_heatmap.json")
    return 0
