from fibrosis.phantom.generator import Phantom, PhantomSpec, gen_infarct, gen_normal
from fibrosis.phantom.series import (
    Manifest,
    SeriesEntry,
    default_labels,
    gen_series,
    load_manifest,
    spec_from_dict,
    write_manifest,
)

__all__ = [
    "Manifest",
    "Phantom",
    "PhantomSpec",
    "SeriesEntry",
    "default_labels",
    "gen_infarct",
    "gen_normal",
    "gen_series",
    "load_manifest",
    "spec_from_dict",
    "write_manifest",
]
