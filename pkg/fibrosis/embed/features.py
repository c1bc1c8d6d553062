import logging
from dataclasses import dataclass, field

import numpy as np
import polars as pl

from config import LOGGER_NAME
from errors import ShapeError
from fibrosis.model import extract_features_batch

logger = logging.getLogger(LOGGER_NAME)

FEATURE_BATCH = 64


@dataclass
class Embeddings:
    matrix: np.ndarray
    labels: list = field(default_factory=list)

    def __len__(self):
        return self.matrix.shape[0]

    def to_frame(self):
        frame = pl.DataFrame(self.matrix, schema=[f"f{i}" for i in range(self.matrix.shape[1])])
        return frame.insert_column(0, pl.Series("label", [str(v) for v in self.labels]))


def collect_embeddings(model, patches, labels):
    """Bottleneck feature rows for each patch, in input order"""
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim == 3:
        patches = patches[None]
    labels = list(labels)
    if patches.shape[0] < 1:
        raise ShapeError("collect_embeddings needs at least one patch")
    if len(labels) != patches.shape[0]:
        raise ShapeError(f"{patches.shape[0]} patches but {len(labels)} labels")

    rows = [extract_features_batch(model, patches[i:i + FEATURE_BATCH])
            for i in range(0, patches.shape[0], FEATURE_BATCH)]
    matrix = np.concatenate(rows, axis=0)
    logger.info(f"Collected {matrix.shape[0]} embeddings of dimension {matrix.shape[1]}")
    return Embeddings(matrix=matrix, labels=labels)


def cluster_separation(coords, labels):
    """(distance between the two label centroids, mean distance of points to their own centroid)"""
    coords = np.asarray(coords)
    labels = np.asarray([str(v) for v in labels])
    groups = sorted(set(labels))
    if len(groups) != 2:
        raise ShapeError(f"cluster_separation needs exactly two labels, got {groups}")
    centroids = [coords[labels == g].mean(axis=0) for g in groups]
    spread = np.mean([np.linalg.norm(coords[labels == g] - c, axis=1).mean()
                      for g, c in zip(groups, centroids)])
    return float(np.linalg.norm(centroids[0] - centroids[1])), float(spread)
