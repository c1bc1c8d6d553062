import logging
from pathlib import Path

import numpy as np

from chart_utils import create_themed_scatter, write_svg
from config import DEFAULT_EMBED_PATCHES, DEFAULT_SEED, DEFAULT_TSNE_ITERS, LOGGER_NAME
from errors import ConfigError
from fibrosis.embed import cluster_separation, collect_embeddings, tsne_project
from fibrosis.phantom import load_manifest
from fibrosis.roi import Roi, crop_roi
from fibrosis.trainer import sample_patches
from utils import load_rgb_png, write_frame, write_json

from commands.common import add_model_arguments, load_model, require, run_provenance

logger = logging.getLogger(LOGGER_NAME)

DEFAULTS = {
    "model": None,
    "manifest": None,
    "normal": None,
    "infarct": None,
    "out": None,
    "n_patches": DEFAULT_EMBED_PATCHES,
    "perplexity": None,
    "iters": DEFAULT_TSNE_ITERS,
    "seed": DEFAULT_SEED,
}


def add_arguments(parser):
    add_model_arguments(parser)
    parser.add_argument("--manifest", help="Phantom manifest: uses its normal image and its highest-phi query")
    parser.add_argument("--normal", help="Normal image (instead of --manifest)")
    parser.add_argument("--infarct", help="Infarcted image (instead of --manifest)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--n-patches", type=int, help="Patches drawn from each image")
    parser.add_argument("--perplexity", type=float, help="t-SNE perplexity (default min(30, (N-1)/3))")
    parser.add_argument("--iters", type=int, help="t-SNE iterations")
    parser.add_argument("--seed", type=int, help="Seed for patch sampling and t-SNE")


def _sources(settings):
    """(normal raster, infarct raster) from a manifest or explicit images"""
    if settings.manifest:
        manifest = load_manifest(settings.manifest)
        if not manifest.entries:
            raise ConfigError(f"manifest {settings.manifest} has no query images")
        normal = load_rgb_png(manifest.path(manifest.normal_image))
        worst = max(manifest.entries, key=lambda e: e.phi)
        infarct = crop_roi(load_rgb_png(manifest.path(worst.image)), Roi(*manifest.ventricle))
        return normal, infarct
    if settings.normal and settings.infarct:
        return load_rgb_png(settings.normal), load_rgb_png(settings.infarct)
    raise ConfigError("embed: give --manifest, or both --normal and --infarct")


def run(settings):
    require(settings, "model", "out")
    model = load_model(settings.model)
    seed = int(settings.seed)
    n = int(settings.n_patches)
    normal, infarct = _sources(settings)

    normal_patches = sample_patches(normal, M=n, s=model.patch_size, seed=seed, source_id="normal")
    infarct_patches = sample_patches(infarct, M=n, s=model.patch_size, seed=seed + 1, source_id="infarct")
    patches = np.concatenate([normal_patches.patches, infarct_patches.patches])
    labels = ["normal"] * n + ["infarct"] * n

    embeddings = collect_embeddings(model, patches, labels)
    result = tsne_project(embeddings.matrix, perplexity=settings.perplexity, iters=int(settings.iters), seed=seed)
    between, within = cluster_separation(result.coords, labels)
    logger.info(f"Centroid distance {between:.3f}, mean intra-cluster spread {within:.3f}")

    out = Path(settings.out)
    frame = result.to_frame(labels)
    write_frame(frame, out / "tsne.csv")
    write_frame(result.kl_frame(), out / "tsne_kl.csv")
    fig = create_themed_scatter(frame, "x", "y", color="label", title="Discriminator bottleneck features (t-SNE)")
    write_svg(fig, out / "tsne.svg")
    write_json({
        "n": len(labels),
        "perplexity": result.perplexity,
        "iters": int(settings.iters),
        "final_kl": result.kl_trace[-1],
        "centroid_distance": between,
        "intra_cluster_spread": within,
        "provenance": run_provenance(settings),
    }, out / "tsne_summary.json")
    return 0
