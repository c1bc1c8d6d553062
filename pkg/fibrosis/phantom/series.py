import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from config import DEFAULT_TIMEPOINTS, LOGGER_NAME
from errors import ConfigError, ManifestError
from fibrosis.phantom.generator import PhantomSpec, gen_infarct, gen_normal
from utils import save_mask_png, save_rgb_png, slugify, write_json

logger = logging.getLogger(LOGGER_NAME)

MANIFEST_FORMAT = "phantom-series"
MANIFEST_VERSION = 1


@dataclass
class SeriesEntry:
    label: str
    phi: float
    image: str
    truth: str
    seed: int
    realized_fraction: float


@dataclass
class Manifest:
    """Phantom dataset index; image paths are relative to the manifest's directory"""
    seed: int
    modality: str
    extents: tuple
    ventricle: tuple
    normal_image: str
    normal_seed: int
    entries: list = field(default_factory=list)
    spec: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    root: Path = Path(".")

    def path(self, relative):
        return self.root / relative

    @property
    def ventricle_roi(self):
        return tuple(self.ventricle)

    def to_dict(self):
        return {
            "format": MANIFEST_FORMAT,
            "version": MANIFEST_VERSION,
            "seed": self.seed,
            "modality": self.modality,
            "extents": list(self.extents),
            "ventricle": dict(zip(("x0", "y0", "width", "height"), self.ventricle)),
            "normal": {"image": self.normal_image, "seed": self.normal_seed},
            "entries": [asdict(e) for e in self.entries],
            "spec": self.spec,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data, root=Path(".")):
        try:
            if data["format"] != MANIFEST_FORMAT or data["version"] != MANIFEST_VERSION:
                raise ManifestError(f"unsupported manifest {data['format']!r} v{data['version']}")
            v = data["ventricle"]
            return cls(
                seed=int(data["seed"]),
                modality=data["modality"],
                extents=tuple(data["extents"]),
                ventricle=(v["x0"], v["y0"], v["width"], v["height"]),
                normal_image=data["normal"]["image"],
                normal_seed=int(data["normal"]["seed"]),
                entries=[SeriesEntry(**e) for e in data["entries"]],
                spec=data.get("spec", {}),
                provenance=data.get("provenance", {}),
                root=Path(root),
            )
        except (KeyError, TypeError) as e:
            raise ManifestError(f"manifest is missing or has malformed field: {e}") from e


def write_manifest(manifest, path):
    write_json(manifest.to_dict(), path)


def load_manifest(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ManifestError(f"Manifest not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ManifestError(f"Manifest {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ManifestError(f"Manifest {path} must hold a JSON object")
    manifest = Manifest.from_dict(data, root=path.parent)
    logger.info(f"Loaded manifest {path} ({len(manifest.entries)} entries, {manifest.modality})")
    return manifest


def default_labels(phis):
    if len(phis) == len(DEFAULT_TIMEPOINTS):
        return list(DEFAULT_TIMEPOINTS)
    return [f"phi={phi:g}" for phi in phis]


def gen_series(base, phis, labels=None, out_dir=".", provenance=None):
    """Normal training image plus one infarct query per phi, truth masks and manifest.json

    Query i uses seed base.seed + 1 + i; the normal image uses base.seed.
    """
    if not isinstance(phis, (list, tuple)) or (labels is not None and not isinstance(labels, (list, tuple))):
        raise ConfigError(f"phis and labels must be lists, got {phis!r} and {labels!r}")
    phis = [_number("phis", p, float) for p in phis]
    labels = default_labels(phis) if labels is None else [str(label) for label in labels]
    if len(phis) != len(labels):
        raise ConfigError(f"got {len(phis)} phis but {len(labels)} labels")
    if not phis:
        raise ConfigError("a series needs at least one phi")
    out_dir = Path(out_dir)

    normal = gen_normal(replace(base, phi=0.0))
    normal_name = "normal.png"
    save_rgb_png(normal.image, out_dir / normal_name)

    entries = []
    for i, (phi, label) in enumerate(zip(phis, labels)):
        seed = base.seed + 1 + i
        phantom = gen_infarct(replace(base, phi=phi, seed=seed))
        stem = f"{i:02d}_{slugify(label)}"
        save_rgb_png(phantom.image, out_dir / f"{stem}.png")
        save_mask_png(phantom.truth, out_dir / f"{stem}_truth.png")
        entries.append(SeriesEntry(
            label=label,
            phi=phi,
            image=f"{stem}.png",
            truth=f"{stem}_truth.png",
            seed=seed,
            realized_fraction=phantom.realized_fraction,
        ))

    spec_dict = asdict(replace(base, phi=0.0))
    spec_dict.pop("phi")
    manifest = Manifest(
        seed=base.seed,
        modality=base.modality,
        extents=(base.width, base.height),
        ventricle=tuple(base.ventricle),
        normal_image=normal_name,
        normal_seed=base.seed,
        entries=entries,
        spec=spec_dict,
        provenance=provenance or {},
        root=out_dir,
    )
    write_manifest(manifest, out_dir / "manifest.json")
    logger.info(f"Wrote phantom series with {len(entries)} queries to {out_dir}")
    return manifest


def _number(name, value, kind):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"phantom spec {name} must be a finite number, got {value!r}")
    if kind is int and value != int(value):
        raise ConfigError(f"phantom spec {name} must be an integer, got {value!r}")
    return kind(value)


def _field_value(name, value):
    """Check one JSON value against the type of its PhantomSpec default"""
    default = PhantomSpec.__dataclass_fields__[name].default
    if name == "ventricle":
        if value is None:
            return None
        default = (0, 0, 0, 0)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"phantom spec {name} must be a list of {len(default)} numbers, got {value!r}")
        return tuple(_number(name, v, type(d)) for v, d in zip(value, default))
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"phantom spec {name} must be a string, got {value!r}")
        return value
    return _number(name, value, type(default))


def spec_from_dict(data):
    """PhantomSpec from a JSON object; unknown keys and mistyped values are rejected"""
    if not isinstance(data, dict):
        raise ConfigError(f"phantom spec must be a JSON object, got {type(data).__name__}")
    known = set(PhantomSpec.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown phantom spec keys: {sorted(unknown)}")
    return PhantomSpec(**{key: _field_value(key, value) for key, value in data.items()})
