import logging
from dataclasses import dataclass

import numpy as np
import polars as pl

from config import LOGGER_NAME
from errors import ShapeError
from utils import resize_bilinear, save_gray_png, write_frame

logger = logging.getLogger(LOGGER_NAME)


@dataclass
class HeatMap:
    """Residual difference map

    values: channel-mean |query - reconstruction| at the model's patch size.
    display: values resized back to the ROI extents.
    """
    values: np.ndarray
    display: np.ndarray

    @property
    def shape(self):
        return self.display.shape

    def to_frame(self):
        """Long-format table of the display raster: x, y, value"""
        h, w = self.display.shape
        ys, xs = np.mgrid[0:h, 0:w]
        return pl.DataFrame({
            "x": xs.ravel(),
            "y": ys.ravel(),
            "value": self.display.ravel(),
        })

    def save(self, png_path, csv_path=None):
        save_gray_png(self.display, png_path)
        logger.info(f"Saved heat map {png_path}")
        if csv_path is not None:
            write_frame(self.to_frame(), csv_path)


def residual_heatmap(query_roi, reconstruction):
    query_roi = np.asarray(query_roi, dtype=np.float64)
    reconstruction = np.asarray(reconstruction, dtype=np.float64)
    if reconstruction.ndim != 3 or reconstruction.shape[2] != 3:
        raise ShapeError(f"reconstruction must be HxWx3, got {reconstruction.shape}")
    if query_roi.ndim != 3 or query_roi.shape[2] != 3 or query_roi.shape[0] == 0 or query_roi.shape[1] == 0:
        raise ShapeError(f"query ROI must be a nonempty HxWx3 raster, got {query_roi.shape}")

    resized = resize_bilinear(query_roi, reconstruction.shape[:2])
    values = np.clip(np.abs(resized - reconstruction).mean(axis=2), 0.0, 1.0)
    display = np.clip(resize_bilinear(values, query_roi.shape[:2]), 0.0, 1.0)
    return HeatMap(values=values, display=display)
