import logging

import numpy as np
import polars as pl

from config import LOGGER_NAME
from fibrosis.roi import Roi, crop_roi
from fibrosis.segscore import dice
from utils import resize_bilinear

logger = logging.getLogger(LOGGER_NAME)


def truth_in_roi(truth, roi, shape):
    """Ground-truth mask cropped to the ROI and brought to the mask's extents"""
    crop = crop_roi(truth, roi)
    if crop.shape == tuple(shape):
        return crop
    return resize_bilinear(crop.astype(np.float64), shape) > 0.5


def result_row(modality, order, entry, result=None, truth=None, error=None):
    row = {
        "modality": modality,
        "order": order,
        "label": entry.label,
        "phi": entry.phi,
        "realized_fraction": entry.realized_fraction,
        "image_id": None,
        "roi_provenance": None,
        "t_g": None,
        "t_r": None,
        "score": None,
        "theta_g": None,
        "theta_r": None,
        "dice_green": None,
        "search_loss": None,
        "error": error,
    }
    if result is not None:
        report = result.report
        row.update(
            image_id=report.image_id,
            roi_provenance=report.roi["provenance"],
            t_g=report.t_g,
            t_r=report.t_r,
            score=report.score,
            theta_g=report.theta_g,
            theta_r=report.theta_r,
            search_loss=report.search_loss,
            error=report.error,
        )
        if truth is not None:
            target = truth_in_roi(truth, _report_roi(report), result.green.bitmap.shape)
            row["dice_green"] = dice(result.green.bitmap, target)
    return row


def _report_roi(report):
    r = report.roi
    return Roi(r["x0"], r["y0"], r["width"], r["height"], provenance=r.get("provenance", "manual"))


def build_scores_frame(rows):
    schema = {
        "modality": pl.Utf8, "order": pl.Int64, "label": pl.Utf8, "phi": pl.Float64,
        "realized_fraction": pl.Float64, "image_id": pl.Utf8,
        "roi_provenance": pl.Utf8, "t_g": pl.Int64, "t_r": pl.Int64,
        "score": pl.Float64, "theta_g": pl.Float64, "theta_r": pl.Float64,
        "dice_green": pl.Float64, "search_loss": pl.Float64, "error": pl.Utf8,
    }
    return pl.DataFrame(rows, schema=schema).sort(["modality", "order"])


def monotonicity(df):
    """Per modality: are defined scores strictly increasing in phi order?"""
    status = {}
    for (modality,), group in df.group_by(["modality"], maintain_order=True):
        scores = group.sort("phi")["score"].to_list()
        defined = all(s is not None for s in scores)
        increasing = defined and all(b > a for a, b in zip(scores, scores[1:]))
        status[modality] = {
            "strictly_increasing": bool(increasing),
            "all_defined": defined,
            "scores": scores,
        }
        if not increasing:
            logger.warning(f"{modality}: infarction scores are not strictly increasing with phi: {scores}")
    return status
