from fibrosis.model.networks import (
    FeatureVector,
    GanModel,
    build,
    check_latent,
    check_patches,
    discriminate,
    discriminate_batch,
    discriminator_forward,
    extract_features,
    extract_features_batch,
    fingerprint,
    frozen,
    generate,
    generate_batch,
    generator_forward,
    parameter_counts,
    patches_to_tensor,
    tensor_to_patches,
)
from fibrosis.model.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "FeatureVector",
    "GanModel",
    "build",
    "check_latent",
    "check_patches",
    "discriminate",
    "discriminate_batch",
    "discriminator_forward",
    "extract_features",
    "extract_features_batch",
    "fingerprint",
    "frozen",
    "generate",
    "generate_batch",
    "generator_forward",
    "load_checkpoint",
    "parameter_counts",
    "patches_to_tensor",
    "save_checkpoint",
    "tensor_to_patches",
]
