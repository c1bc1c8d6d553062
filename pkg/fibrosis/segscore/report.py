import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from config import CHANNELS, LOGGER_NAME
from errors import ShapeError, UndefinedScoreError
from fibrosis.anomaly import HeatMap, fit_query, reconstruct_batch, residual_heatmap
from fibrosis.model import fingerprint
from fibrosis.roi import Roi, crop_roi
from fibrosis.segscore.masks import SegMask, channel_mask, infarction_score

logger = logging.getLogger(LOGGER_NAME)


def thresholds_from_reconstructions(reconstructions):
    """(theta_g, theta_r): per-channel means over whole generated patches, averaged over the batch"""
    reconstructions = np.asarray(reconstructions, dtype=np.float64)
    if reconstructions.ndim != 4 or reconstructions.shape[-1] != 3 or reconstructions.shape[0] == 0:
        raise ShapeError(f"expected N x s x s x 3 reconstructions, got {reconstructions.shape}")
    means = reconstructions.mean(axis=(1, 2))
    return float(means[:, CHANNELS["green"]].mean()), float(means[:, CHANNELS["red"]].mean())


def estimate_thresholds(model, cfg, query_roi):
    batch = reconstruct_batch(model, query_roi, cfg)
    return thresholds_from_reconstructions(batch.reconstructions)


@dataclass
class InfarctionReport:
    image_id: str
    label: str
    t_g: int
    t_r: int
    score: Optional[float]
    theta_g: float
    theta_r: float
    z_mode: str
    seed: int
    checkpoint_id: str
    roi: dict = field(default_factory=dict)
    search_loss: Optional[float] = None
    error: Optional[str] = None
    provenance: dict = field(default_factory=dict)

    @property
    def defined(self):
        return self.score is not None

    def to_dict(self):
        return asdict(self)

    def to_row(self):
        """Flat form for CSV tables"""
        row = {k: v for k, v in asdict(self).items() if k not in ("roi", "provenance")}
        for key in ("x0", "y0", "width", "height"):
            row[f"roi_{key}"] = self.roi.get(key)
        return row


@dataclass
class QueryResult:
    report: InfarctionReport
    green: SegMask
    red: SegMask
    heatmap: HeatMap
    reconstruction: np.ndarray


def score_query(model, image, roi, cfg, image_id="", label="", score_on_resized=False, checkpoint_id=None):
    """Thresholds, masks, score and heat map for one query image

    Masks are taken on the native-resolution ROI, or on the ROI resized to the
    model's patch size when score_on_resized is set.
    """
    query_roi = crop_roi(image, roi)
    batch = reconstruct_batch(model, query_roi, cfg)
    theta_g, theta_r = thresholds_from_reconstructions(batch.reconstructions)
    _, best_rec, best_loss = batch.best()

    if score_on_resized:
        target = fit_query(model, query_roi)
        mask_roi = Roi(0, 0, target.shape[1], target.shape[0], provenance=roi.provenance)
    else:
        target, mask_roi = query_roi, Roi(0, 0, roi.width, roi.height, provenance=roi.provenance)
    green = channel_mask(target, mask_roi, "green", theta_g)
    red = channel_mask(target, mask_roi, "red", theta_r)
    if not score_on_resized:
        green = SegMask("green", roi, green.bitmap, theta_g)
        red = SegMask("red", roi, red.bitmap, theta_r)

    score, error = None, None
    try:
        score = infarction_score(green, red)
    except UndefinedScoreError as e:
        error = str(e)
        logger.warning(f"{image_id or 'query'}: {error}")

    report = InfarctionReport(
        image_id=image_id,
        label=label,
        t_g=green.count,
        t_r=red.count,
        score=score,
        theta_g=theta_g,
        theta_r=theta_r,
        z_mode=cfg.z_mode,
        seed=cfg.seed,
        checkpoint_id=checkpoint_id or fingerprint(model),
        roi=roi.to_dict(),
        search_loss=best_loss,
        error=error,
    )
    logger.info(f"Scored {image_id or 'query'}: T_g={report.t_g}, T_r={report.t_r}, "
                f"S={'undefined' if score is None else f'{score:.4f}'} "
                f"(theta_g={theta_g:.4f}, theta_r={theta_r:.4f})")
    return QueryResult(
        report=report,
        green=green,
        red=red,
        heatmap=residual_heatmap(query_roi, best_rec),
        reconstruction=best_rec,
    )
