import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from config import LOGGER_NAME
from errors import ConfigError, FibrosisError
from fibrosis.phantom import load_manifest
from utils import load_mask_png

from commands.common import (
    ANOMALY_DEFAULTS,
    ROI_DEFAULTS,
    add_anomaly_arguments,
    add_roi_arguments,
    load_model,
    require,
    run_provenance,
)
from commands.evaluate.data_processing import build_scores_frame, monotonicity, result_row
from commands.evaluate.sections import (
    write_scores_section,
    write_summary_section,
    write_trend_chart_section,
)
from commands.score import score_image

logger = logging.getLogger(LOGGER_NAME)

DEFAULTS = {
    "manifest": None,
    "model": None,
    "out": None,
    "workers": 1,
    **ANOMALY_DEFAULTS,
    **ROI_DEFAULTS,
}


def add_arguments(parser):
    parser.add_argument("--manifest", nargs="+", help="Phantom manifest(s) written by synth")
    parser.add_argument("--model", nargs="+", help="One checkpoint for all manifests, or one per manifest")
    parser.add_argument("--out", help="Report directory")
    parser.add_argument("--workers", type=int, help="Score query images in parallel threads")
    add_roi_arguments(parser)
    add_anomaly_arguments(parser)


def _as_list(value):
    return [value] if isinstance(value, str) else list(value)


def _tasks(settings):
    manifests = _as_list(settings.manifest)
    models = _as_list(settings.model)
    if len(models) not in (1, len(manifests)):
        raise ConfigError(f"eval: {len(models)} models for {len(manifests)} manifests")
    if len(models) == 1:
        models = models * len(manifests)

    loaded = {path: load_model(path) for path in dict.fromkeys(models)}
    tasks = []
    for manifest_path, model_path in zip(manifests, models):
        manifest = load_manifest(manifest_path)
        for order, entry in enumerate(manifest.entries):
            tasks.append((manifest, order, entry, loaded[model_path]))
    return tasks


def _score_entry(settings, out_dir, task):
    manifest, order, entry, model = task
    image_dir = out_dir / manifest.modality
    try:
        # frozen() flips parameter flags: one model copy per task
        result = score_image(settings, model.copy(), manifest.path(entry.image), image_dir,
                             label=entry.label, bbox=manifest.ventricle)
        truth = load_mask_png(manifest.path(entry.truth))
        return result_row(manifest.modality, order, entry, result=result, truth=truth)
    except FibrosisError as e:
        logger.error(f"[{manifest.modality}] {entry.label}: {type(e).__name__}: {e}")
        return result_row(manifest.modality, order, entry, error=f"{type(e).__name__}: {e}")


def render(settings):
    """Score every query of the manifest(s) and write the evaluation report"""
    require(settings, "manifest", "model", "out")
    workers = int(settings.workers)
    if workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {workers}")
    out_dir = Path(settings.out)
    tasks = _tasks(settings)
    logger.info(f"Evaluating {len(tasks)} query images with {workers} worker(s)")

    if workers == 1:
        rows = [_score_entry(settings, out_dir, task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda task: _score_entry(settings, out_dir, task), tasks))

    df = build_scores_frame(rows)
    status = monotonicity(df)
    write_scores_section(df, out_dir)
    write_trend_chart_section(df, out_dir)
    write_summary_section(df, status, out_dir, run_provenance(settings))
    return 0
