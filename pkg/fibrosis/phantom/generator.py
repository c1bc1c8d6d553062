import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from config import LOGGER_NAME, PHANTOM_FRACTION_TOL, PHANTOM_MAX_PHI, PHANTOM_MODALITIES
from errors import ConfigError, PhantomPackingError
from utils import derive_rng

logger = logging.getLogger(LOGGER_NAME)


@dataclass
class PhantomSpec:
    """Synthetic SHG heart image: red myofiber streaks, green collagen blobs

    ventricle is (x0, y0, w, h); None means a centered box of half the extents.
    """
    width: int = 384
    height: int = 384
    ventricle: Optional[tuple] = None

    # Myofibers (red channel)
    streak_angle: float = 30.0
    streak_spacing: float = 12.0
    streak_amplitude: float = 0.25
    red_base: float = 0.45
    noise_sigma: float = 0.03

    # Collagen (green channel)
    phi: float = 0.0
    blob_radius: tuple = (4.0, 14.0)
    green_level: tuple = (0.6, 0.95)
    max_attempts: int = 5000

    # Staining
    modality: str = "unstained"
    counterstain: float = 0.25
    stained_contrast: float = 0.6

    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"phantom extents must be positive, got {self.width}x{self.height}")
        if not 0.0 <= self.phi <= PHANTOM_MAX_PHI:
            raise ConfigError(f"phi must be in [0, {PHANTOM_MAX_PHI}], got {self.phi}")
        if self.modality not in PHANTOM_MODALITIES:
            raise ConfigError(f"modality must be one of {PHANTOM_MODALITIES}, got {self.modality!r}")
        if self.streak_spacing <= 0 or self.noise_sigma < 0:
            raise ConfigError("streak_spacing must be > 0 and noise_sigma >= 0")
        r_min, r_max = self.blob_radius
        if not 0 < r_min <= r_max:
            raise ConfigError(f"blob_radius must satisfy 0 < min <= max, got {self.blob_radius}")
        g_min, g_max = self.green_level
        if not 0.6 <= g_min <= g_max <= 1.0:
            raise ConfigError(f"green_level must lie in [0.6, 1], got {self.green_level}")
        if self.ventricle is None:
            self.ventricle = (self.width // 4, self.height // 4, self.width // 2, self.height // 2)
        self.ventricle = tuple(int(v) for v in self.ventricle)
        x0, y0, w, h = self.ventricle
        if w < 1 or h < 1 or x0 < 0 or y0 < 0 or x0 + w > self.width or y0 + h > self.height:
            raise ConfigError(f"ventricle {self.ventricle} must be a nonempty box inside "
                              f"{self.width}x{self.height}")


@dataclass
class Phantom:
    image: np.ndarray
    truth: np.ndarray
    spec: PhantomSpec
    realized_fraction: float = 0.0
    blobs: list = field(default_factory=list)


def _myofibers(spec, rng):
    yy, xx = np.mgrid[0:spec.height, 0:spec.width].astype(np.float64)
    angle = np.deg2rad(spec.streak_angle)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    along = xx * np.cos(angle) + yy * np.sin(angle)
    amplitude = spec.streak_amplitude
    if spec.modality == "stained":
        amplitude *= spec.stained_contrast
    red = spec.red_base + amplitude * np.sin(2.0 * np.pi * along / spec.streak_spacing + phase)
    red += rng.normal(0.0, spec.noise_sigma, size=red.shape)
    return np.clip(red, 0.0, 1.0)


def _pack_blobs(spec, rng):
    """Paint disks inside the ventricle until the covered fraction reaches [phi, phi + tol]

    A disk that would overshoot is rejected and later disks are drawn at half
    the radius. Returns (mask over the ventricle, green values, disks).
    """
    x0, y0, w, h = spec.ventricle
    area = w * h
    lo, hi = spec.phi, spec.phi + PHANTOM_FRACTION_TOL
    yy, xx = np.mgrid[0:h, 0:w]
    mask = np.zeros((h, w), dtype=bool)
    green = np.zeros((h, w))
    blobs = []
    scale = 1.0
    covered = 0

    for _ in range(spec.max_attempts):
        radius = rng.uniform(*spec.blob_radius) * scale
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        level = rng.uniform(*spec.green_level)
        disk = (xx + 0.5 - cx) ** 2 + (yy + 0.5 - cy) ** 2 <= radius ** 2
        new = disk & ~mask
        if not new.any():
            continue
        if (covered + np.count_nonzero(new)) / area > hi:
            scale *= 0.5
            continue
        mask |= new
        green[new] = level
        covered += int(np.count_nonzero(new))
        blobs.append((cx + x0, cy + y0, radius))
        if covered / area >= lo:
            return mask, green, blobs

    raise PhantomPackingError(
        f"could not reach green fraction {spec.phi} (+{PHANTOM_FRACTION_TOL}) in ventricle "
        f"{spec.ventricle} after {spec.max_attempts} attempts (reached {covered / area:.4f})"
    )


def _render(spec):
    texture = derive_rng(spec.seed, "phantom-texture")
    red = _myofibers(spec, texture)
    blue = np.clip(np.abs(texture.normal(0.0, spec.noise_sigma / 3.0, size=red.shape)), 0.0, 1.0)
    if spec.modality == "stained":
        blue = np.clip(blue + spec.counterstain, 0.0, 1.0)
    green = np.zeros_like(red)
    truth = np.zeros(red.shape, dtype=bool)
    blobs, fraction = [], 0.0

    if spec.phi > 0:
        mask, levels, blobs = _pack_blobs(spec, derive_rng(spec.seed, "phantom-blobs"))
        x0, y0, w, h = spec.ventricle
        truth[y0:y0 + h, x0:x0 + w] = mask
        green[y0:y0 + h, x0:x0 + w] = levels
        red[truth] *= 1.0 - spec.phi
        fraction = mask.sum() / mask.size

    image = np.stack([red, green, blue], axis=2)
    return Phantom(image=image, truth=truth, spec=spec, realized_fraction=float(fraction), blobs=blobs)


def gen_normal(spec):
    """Healthy tissue: streaked red channel, green at zero, empty truth mask"""
    if spec.phi != 0:
        raise ConfigError(f"gen_normal needs phi = 0, got {spec.phi}")
    phantom = _render(spec)
    logger.info(f"Generated normal phantom {spec.width}x{spec.height} (seed={spec.seed}, {spec.modality})")
    return phantom


def gen_infarct(spec):
    """Infarcted tissue: green collagen blobs cover a fraction phi of the ventricle"""
    if not 0 < spec.phi <= PHANTOM_MAX_PHI:
        raise ConfigError(f"gen_infarct needs phi in (0, {PHANTOM_MAX_PHI}], got {spec.phi}")
    phantom = _render(spec)
    logger.info(f"Generated infarct phantom phi={spec.phi} -> {phantom.realized_fraction:.4f} "
                f"with {len(phantom.blobs)} blobs (seed={spec.seed}, {spec.modality})")
    return phantom
