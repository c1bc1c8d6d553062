from fibrosis.segscore.masks import (
    SegMask,
    channel_index,
    channel_mask,
    channel_name,
    dice,
    infarction_score,
    mean_channel_intensity,
)
from fibrosis.segscore.report import (
    InfarctionReport,
    QueryResult,
    estimate_thresholds,
    score_query,
    thresholds_from_reconstructions,
)

__all__ = [
    "InfarctionReport",
    "QueryResult",
    "SegMask",
    "channel_index",
    "channel_mask",
    "channel_name",
    "dice",
    "estimate_thresholds",
    "infarction_score",
    "mean_channel_intensity",
    "score_query",
    "thresholds_from_reconstructions",
]
