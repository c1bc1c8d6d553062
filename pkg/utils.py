import hashlib
import json
import logging
import platform
import re
import zlib
from contextlib import contextmanager
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import polars as pl
from PIL import Image
from skimage.transform import resize

from config import APP_NAME, APP_VERSION, DESTINATION_SETTINGS, LOGGER_NAME
from errors import ConfigError, FileAccessError, ImageReadError, ShapeError

logger = logging.getLogger(LOGGER_NAME)


@contextmanager
def file_access(path, action="write"):
    """Report filesystem failures on path as FileAccessError"""
    try:
        yield
    except OSError as e:
        raise FileAccessError(f"Cannot {action} {path}: {e.strerror or e}") from e


def derive_rng(seed, purpose):
    """Independent generator for one purpose ("patches", "latent", ...) of a named seed"""
    return np.random.default_rng([int(seed), zlib.crc32(purpose.encode("utf-8"))])


def load_rgb_png(path):
    """Load an 8-bit PNG as a float64 HxWx3 raster with values in [0, 1]"""
    path = Path(path)
    try:
        with Image.open(path) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    except (OSError, ValueError) as e:
        raise ImageReadError(f"Cannot read image {path}: {e}") from e
    logger.debug(f"Loaded {path} with shape {rgb.shape}")
    return rgb / 255.0


def to_uint8(values):
    return np.clip(np.rint(np.asarray(values) * 255.0), 0, 255).astype(np.uint8)


def save_rgb_png(image, path):
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"RGB image must be HxWx3, got {image.shape}")
    with file_access(path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(to_uint8(image)).save(path)


def save_gray_png(values, path):
    """Save a single-channel raster with values in [0, 1] as 8-bit grayscale"""
    with file_access(path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(to_uint8(values)).save(path)


def save_mask_png(bitmap, path):
    """Save a boolean raster as a 1-bit PNG"""
    with file_access(path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(np.asarray(bitmap, dtype=bool)).convert("1").save(path)


def load_mask_png(path):
    path = Path(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L")) > 127
    except (OSError, ValueError) as e:
        raise ImageReadError(f"Cannot read mask {path}: {e}") from e


def resize_bilinear(raster, size):
    """Bilinear resize of an HxW or HxWxC float raster to size=(h, w)

    Same-size input is returned as an exact copy.
    """
    raster = np.asarray(raster, dtype=np.float64)
    size = tuple(int(v) for v in size)
    if raster.shape[:2] == size:
        return raster.copy()
    out_shape = size + raster.shape[2:]
    return resize(raster, out_shape, order=1, mode="edge", anti_aliasing=False, preserve_range=True)


def slugify(label):
    slug = re.sub(r"[^a-z0-9]+", "_", str(label).lower()).strip("_")
    return slug or "image"


def load_config_file(path):
    """Load a flat JSON settings file; keys mirror the CLI flags with underscores"""
    if path is None:
        return {}
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    logger.info(f"Using settings from {path}: {sorted(data)}")
    return data


def resolve_settings(args, file_settings, defaults):
    """Merge settings: explicit flags win over the config file, the file over defaults"""
    merged = dict(defaults)
    unknown = sorted(set(file_settings) - set(defaults) - set(args))
    if unknown:
        raise ConfigError(f"Unknown setting(s) in config file: {unknown}")
    merged.update(file_settings)
    for key, value in args.items():
        if value is not None:
            merged[key] = value
        elif key not in merged:
            merged[key] = None
    return SimpleNamespace(**merged)


def settings_hash(settings):
    """SHA-256 of the canonical settings, output destinations excluded"""
    items = vars(settings) if isinstance(settings, SimpleNamespace) else dict(settings)
    items = {k: v for k, v in items.items() if k not in DESTINATION_SETTINGS}
    canonical = json.dumps(items, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def provenance(command, seed, settings):
    """Provenance block written into every output of a run"""
    return {
        "command": command,
        "seed": seed,
        "versions": {
            APP_NAME: APP_VERSION,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "polars": pl.__version__,
        },
        "config_hash": settings_hash(settings),
    }


def write_json(payload, path):
    path = Path(path)
    with file_access(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, default=str))
    logger.info(f"Saved {path}")


def write_frame(df, path):
    path = Path(path)
    with file_access(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        df.write_csv(path)
    logger.info(f"Saved {path} ({len(df)} rows)")
