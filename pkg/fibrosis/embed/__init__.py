from fibrosis.embed.features import Embeddings, cluster_separation, collect_embeddings
from fibrosis.embed.tsne import TsneResult, default_perplexity, joint_probabilities, tsne_project

__all__ = [
    "Embeddings",
    "TsneResult",
    "cluster_separation",
    "collect_embeddings",
    "default_perplexity",
    "joint_probabilities",
    "tsne_project",
]
