from fibrosis.anomaly.losses import (
    check_lambda,
    combined_loss,
    feature_matching_loss,
    per_sample_losses,
    residual_loss,
)
from fibrosis.anomaly.search import (
    AnomalyConfig,
    ReconstructionBatch,
    SearchResult,
    fit_query,
    latent_search,
    reconstruct_batch,
    search_batch,
)
from fibrosis.anomaly.heatmap import HeatMap, residual_heatmap

__all__ = [
    "AnomalyConfig",
    "HeatMap",
    "ReconstructionBatch",
    "SearchResult",
    "check_lambda",
    "combined_loss",
    "feature_matching_loss",
    "fit_query",
    "latent_search",
    "per_sample_losses",
    "reconstruct_batch",
    "residual_heatmap",
    "residual_loss",
    "search_batch",
]
