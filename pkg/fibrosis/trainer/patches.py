import logging
from dataclasses import dataclass, field

import numpy as np

from config import DEFAULT_PATCH_COUNT, DEFAULT_PATCH_SIZE, LOGGER_NAME
from errors import ConfigError, ImageTooSmallError
from utils import derive_rng

logger = logging.getLogger(LOGGER_NAME)


@dataclass
class PatchSet:
    """M random s x s crops of one normal image; coords are top-left (x0, y0)"""
    patches: np.ndarray
    source_id: str
    seed: int
    coords: list = field(default_factory=list)

    def __len__(self):
        return self.patches.shape[0]

    @property
    def size(self):
        return self.patches.shape[1]


def sample_patches(image, M=DEFAULT_PATCH_COUNT, s=DEFAULT_PATCH_SIZE, seed=0, source_id=""):
    """Crop M patches at uniformly random valid positions, deterministic per seed"""
    image = np.asarray(image, dtype=np.float64)
    if M < 1 or s < 1:
        raise ConfigError(f"need M >= 1 and s >= 1, got M={M}, s={s}")
    height, width = image.shape[:2]
    if height < s or width < s:
        raise ImageTooSmallError(f"image {width}x{height} is smaller than patch size {s}")

    rng = derive_rng(seed, "patches")
    xs = rng.integers(0, width - s + 1, size=M)
    ys = rng.integers(0, height - s + 1, size=M)
    patches = np.stack([image[y:y + s, x:x + s] for x, y in zip(xs, ys)])
    coords = [(int(x), int(y)) for x, y in zip(xs, ys)]
    logger.info(f"Sampled {M} patches of {s}x{s} from {source_id or 'image'} ({width}x{height})")
    return PatchSet(patches=patches, source_id=source_id, seed=int(seed), coords=coords)
