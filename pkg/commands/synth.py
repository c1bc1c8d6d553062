import logging
from dataclasses import replace

from config import LOGGER_NAME
from errors import ConfigError
from fibrosis.phantom import gen_series, spec_from_dict
from utils import load_config_file

from commands.common import require, run_provenance

logger = logging.getLogger(LOGGER_NAME)

DEFAULTS = {
    "spec": None,
    "out": None,
    "phis": None,
    "labels": None,
    "modality": None,
    "seed": None,
}

SERIES_KEYS = ("phis", "labels")


def add_arguments(parser):
    parser.add_argument("--spec", help="JSON phantom spec: PhantomSpec fields plus phis and labels")
    parser.add_argument("--out", help="Output directory for images, truth masks and manifest.json")
    parser.add_argument("--phis", type=float, nargs="+", help="Target green fractions of the query images")
    parser.add_argument("--labels", nargs="+", help="Timepoint label per phi")
    parser.add_argument("--modality", choices=["unstained", "stained"], help="Staining modality")
    parser.add_argument("--seed", type=int, help="Seed of the normal image; queries use seed+1, seed+2, ...")


def run(settings):
    require(settings, "out")
    spec_data = load_config_file(settings.spec) if settings.spec else {}
    series = {k: spec_data.pop(k) for k in SERIES_KEYS if k in spec_data}

    phis = settings.phis if settings.phis is not None else series.get("phis")
    labels = settings.labels if settings.labels is not None else series.get("labels")
    if not phis:
        raise ConfigError("synth: no phis given (use --phis or a 'phis' list in --spec)")

    base = spec_from_dict(spec_data)
    overrides = {}
    if settings.modality is not None:
        overrides["modality"] = settings.modality
    if settings.seed is not None:
        overrides["seed"] = int(settings.seed)
    base = replace(base, **overrides) if overrides else base
    settings.seed = base.seed if settings.seed is None else settings.seed

    manifest = gen_series(base, phis, labels, out_dir=settings.out, provenance=run_provenance(settings))
    for entry in manifest.entries:
        logger.info(f"{entry.label}: phi={entry.phi:g}, realized={entry.realized_fraction:.4f}")
    return 0
