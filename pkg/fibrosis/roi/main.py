import logging
from dataclasses import dataclass

import numpy as np
from skimage.filters import gaussian
from skimage.measure import label, regionprops

from config import (
    DEFAULT_ROI_BLUR,
    DEFAULT_ROI_QUANTILE,
    LOGGER_NAME,
    MIN_ROI_SIZE,
    ROI_EXPANSION,
)
from errors import ConfigError, NoRoiFoundError, RoiBoundsError, ShapeError

logger = logging.getLogger(LOGGER_NAME)

PROVENANCES = ("manual", "heuristic")


@dataclass(frozen=True)
class Roi:
    """Axis-aligned box in pixel coordinates; (x0, y0) is the top-left corner"""
    x0: int
    y0: int
    width: int
    height: int
    provenance: str = "manual"

    def __post_init__(self):
        if min(self.x0, self.y0, self.width, self.height) < 0:
            raise RoiBoundsError(f"ROI {self.as_tuple()} has negative coordinates or extents")
        if self.provenance not in PROVENANCES:
            raise ConfigError(f"ROI provenance must be one of {PROVENANCES}, got {self.provenance!r}")

    @property
    def area(self):
        return self.width * self.height

    @property
    def x1(self):
        return self.x0 + self.width

    @property
    def y1(self):
        return self.y0 + self.height

    def as_tuple(self):
        return (self.x0, self.y0, self.width, self.height)

    def to_dict(self):
        return {
            "x0": self.x0,
            "y0": self.y0,
            "width": self.width,
            "height": self.height,
            "provenance": self.provenance,
        }


@dataclass
class HeuristicParams:
    blur_radius: float = DEFAULT_ROI_BLUR
    intensity_quantile: float = DEFAULT_ROI_QUANTILE
    min_size: int = MIN_ROI_SIZE

    def __post_init__(self):
        if self.blur_radius < 0:
            raise ConfigError(f"blur_radius must be >= 0, got {self.blur_radius}")
        if not 0.0 <= self.intensity_quantile <= 1.0:
            raise ConfigError(f"intensity_quantile must be in [0, 1], got {self.intensity_quantile}")


def _extents(image):
    image = np.asarray(image)
    if image.ndim not in (2, 3) or image.shape[0] == 0 or image.shape[1] == 0:
        raise ShapeError(f"expected a nonempty HxW or HxWxC raster, got {image.shape}")
    return image.shape[0], image.shape[1]


def check_bounds(image, roi):
    height, width = _extents(image)
    if roi.x1 > width or roi.y1 > height:
        raise RoiBoundsError(f"ROI {roi.as_tuple()} exceeds image extents {width}x{height}")
    return roi


def parse_roi(text):
    """Parse the CLI form "x0,y0,w,h" into an integer tuple"""
    parts = [p.strip() for p in str(text).split(",")]
    try:
        values = tuple(int(p) for p in parts)
    except ValueError as e:
        raise ConfigError(f"ROI must be four integers x0,y0,w,h; got {text!r}") from e
    if len(values) != 4:
        raise ConfigError(f"ROI must be four integers x0,y0,w,h; got {text!r}")
    return values


def roi_from_config(image, bbox, min_size=MIN_ROI_SIZE):
    """Validate a manually given box (x0, y0, w, h) against the image"""
    if isinstance(bbox, Roi):
        bbox = bbox.as_tuple()
    if isinstance(bbox, str):
        bbox = parse_roi(bbox)
    roi = check_bounds(image, Roi(*(int(v) for v in bbox), provenance="manual"))
    if roi.width < min_size or roi.height < min_size:
        raise RoiBoundsError(f"ROI {roi.as_tuple()} is smaller than the minimum {min_size}x{min_size}")
    return roi


def detect_roi_heuristic(image, params=None):
    """Bounding box of the largest bright 4-connected region, grown by 5% per side

    Threshold is the given quantile of the channel-sum raster; pixels at the
    image minimum never count as foreground. Ties between equally large
    components go to the smaller (x0, y0).
    """
    params = params or HeuristicParams()
    height, width = _extents(image)
    image = np.asarray(image, dtype=np.float64)
    intensity = image.sum(axis=2) if image.ndim == 3 else image
    if params.blur_radius > 0:
        intensity = gaussian(intensity, sigma=params.blur_radius, preserve_range=True)

    threshold = np.quantile(intensity, params.intensity_quantile)
    foreground = (intensity >= threshold) & (intensity > intensity.min())
    if not foreground.any():
        raise NoRoiFoundError("no pixel above the intensity threshold")

    regions = regionprops(label(foreground, connectivity=1))
    # bbox is (min_row, min_col, max_row, max_col)
    best = min(regions, key=lambda r: (-r.area, r.bbox[1], r.bbox[0]))
    r0, c0, r1, c1 = best.bbox
    pad_x = int(ROI_EXPANSION * (c1 - c0) + 0.5)
    pad_y = int(ROI_EXPANSION * (r1 - r0) + 0.5)
    x0, y0 = max(0, c0 - pad_x), max(0, r0 - pad_y)
    x1, y1 = min(width, c1 + pad_x), min(height, r1 + pad_y)

    roi = Roi(x0, y0, x1 - x0, y1 - y0, provenance="heuristic")
    if roi.width < params.min_size or roi.height < params.min_size:
        raise NoRoiFoundError(f"largest bright region {roi.as_tuple()} is smaller than "
                              f"{params.min_size}x{params.min_size}")
    logger.info(f"Detected ROI {roi.as_tuple()} from {len(regions)} candidate regions")
    return roi


def crop_roi(image, roi):
    """Exact pixel copy of the ROI"""
    check_bounds(image, roi)
    return np.array(np.asarray(image)[roi.y0:roi.y1, roi.x0:roi.x1], copy=True)
