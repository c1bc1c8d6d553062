import logging
from dataclasses import dataclass

import numpy as np
import polars as pl

from config import CHANNELS, LOGGER_NAME
from errors import ConfigError, EmptyRoiError, ShapeError, UndefinedScoreError
from fibrosis.roi import Roi, crop_roi

logger = logging.getLogger(LOGGER_NAME)


def channel_index(channel):
    if isinstance(channel, str):
        if channel not in CHANNELS:
            raise ConfigError(f"Unknown channel {channel!r}, expected one of {sorted(CHANNELS)}")
        return CHANNELS[channel]
    if channel not in CHANNELS.values():
        raise ConfigError(f"Channel index must be 0, 1 or 2, got {channel}")
    return int(channel)


def channel_name(channel):
    index = channel_index(channel)
    return next(name for name, i in CHANNELS.items() if i == index)


@dataclass
class SegMask:
    """Pixels of one ROI whose channel value is strictly above a threshold

    bitmap has the ROI's extents; coords() reports image coordinates.
    """
    channel: str
    roi: Roi
    bitmap: np.ndarray
    threshold: float

    def __post_init__(self):
        if self.bitmap.shape != (self.roi.height, self.roi.width):
            raise ShapeError(f"mask bitmap {self.bitmap.shape} does not match ROI "
                             f"{self.roi.height}x{self.roi.width}")

    @property
    def count(self):
        return int(np.count_nonzero(self.bitmap))

    def coords(self):
        ys, xs = np.nonzero(self.bitmap)
        return [(int(x) + self.roi.x0, int(y) + self.roi.y0) for y, x in zip(ys, xs)]

    def to_frame(self):
        ys, xs = np.nonzero(self.bitmap)
        return pl.DataFrame({
            "x": (xs + self.roi.x0).astype(np.int64),
            "y": (ys + self.roi.y0).astype(np.int64),
        })


def _roi_channel(image, roi, channel):
    if roi.area == 0:
        raise EmptyRoiError(f"ROI {roi.as_tuple()} has no pixels")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"expected an HxWx3 raster, got {image.shape}")
    return crop_roi(image, roi)[:, :, channel_index(channel)]


def mean_channel_intensity(image, roi, channel):
    return float(_roi_channel(image, roi, channel).mean())


def channel_mask(query, roi, channel, theta):
    """Mask of ROI pixels whose channel value is strictly greater than theta"""
    if not 0.0 <= theta <= 1.0:
        raise ConfigError(f"threshold must be in [0, 1], got {theta}")
    values = _roi_channel(query, roi, channel)
    return SegMask(channel=channel_name(channel), roi=roi, bitmap=values > theta, threshold=float(theta))


def infarction_score(green, red):
    """S = |green| / |red|"""
    if green.roi.as_tuple()[2:] != red.roi.as_tuple()[2:]:
        raise ShapeError(f"masks come from different ROIs: {green.roi.as_tuple()} vs {red.roi.as_tuple()}")
    if red.count == 0:
        raise UndefinedScoreError("red mask is empty; infarction score is undefined")
    return green.count / red.count


def _bitmap(mask):
    return mask.bitmap if isinstance(mask, SegMask) else np.asarray(mask, dtype=bool)


def dice(mask, truth):
    """2|A n B| / (|A| + |B|); 1.0 when both masks are empty"""
    a, b = _bitmap(mask), _bitmap(truth)
    if a.shape != b.shape:
        raise ShapeError(f"dice: mask {a.shape} vs truth {b.shape}")
    total = int(np.count_nonzero(a)) + int(np.count_nonzero(b))
    if total == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(a & b)) / total
