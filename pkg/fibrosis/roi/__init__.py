from fibrosis.roi.main import (
    HeuristicParams,
    Roi,
    check_bounds,
    crop_roi,
    detect_roi_heuristic,
    parse_roi,
    roi_from_config,
)

__all__ = [
    "HeuristicParams",
    "Roi",
    "check_bounds",
    "crop_roi",
    "detect_roi_heuristic",
    "parse_roi",
    "roi_from_config",
]
