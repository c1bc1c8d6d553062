import copy
import hashlib
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from config import (
    DEFAULT_LATENT_DIM,
    DEFAULT_PATCH_SIZE,
    DISCRIMINATOR_CHANNELS,
    GENERATOR_DENSE_CHANNELS,
    GENERATOR_HIDDEN_CHANNELS,
    INIT_STD,
    KERNEL_SIZE,
    LEAKY_SLOPE,
    LOGGER_NAME,
    PADDING,
    STRIDE,
)
from errors import ConfigError, ShapeError
from fibrosis.tensor_core import (
    Tensor,
    conv2d,
    conv_transpose2d,
    dense,
    leaky_relu,
    no_grad,
    reshape,
    sigmoid,
    tanh,
)
from utils import derive_rng

logger = logging.getLogger(LOGGER_NAME)

MODEL_VERSION = "gan-v1"
IMAGE_CHANNELS = 3


@dataclass
class GanModel:
    """Generator and discriminator parameters plus architecture metadata

    Generator: dense(latent -> 128 x s/4 x s/4) -> conv-transpose 128->64 (s/2)
    -> conv-transpose 64->3 (s), tanh mapped to [0, 1].
    Discriminator: conv 3->64 (s/2) -> conv 64->128 (s/4) -> dense(1), sigmoid.
    """
    generator: dict
    discriminator: dict
    latent_dim: int
    input_size: tuple
    seed: int
    version: str = MODEL_VERSION
    metadata: dict = field(default_factory=dict)

    @property
    def patch_size(self):
        return self.input_size[0]

    @property
    def bottleneck_side(self):
        return self.patch_size // (STRIDE * STRIDE)

    @property
    def feature_dim(self):
        return DISCRIMINATOR_CHANNELS[1] * self.bottleneck_side ** 2

    def parameters(self):
        return list(self.generator.values()) + list(self.discriminator.values())

    def named_parameters(self):
        named = [(f"generator.{k}", t) for k, t in self.generator.items()]
        named += [(f"discriminator.{k}", t) for k, t in self.discriminator.items()]
        return named

    def copy(self):
        return GanModel(
            generator={k: Tensor(t.data.copy(), requires_grad=True) for k, t in self.generator.items()},
            discriminator={k: Tensor(t.data.copy(), requires_grad=True) for k, t in self.discriminator.items()},
            latent_dim=self.latent_dim,
            input_size=tuple(self.input_size),
            seed=self.seed,
            version=self.version,
            metadata=copy.deepcopy(self.metadata),
        )


def layer_shapes(latent_dim, patch_size):
    side = patch_size // (STRIDE * STRIDE)
    k = KERNEL_SIZE
    g_dense = GENERATOR_DENSE_CHANNELS * side * side
    d1, d2 = DISCRIMINATOR_CHANNELS
    generator = {
        "dense.weight": (g_dense, latent_dim),
        "dense.bias": (g_dense,),
        "deconv1.weight": (GENERATOR_DENSE_CHANNELS, GENERATOR_HIDDEN_CHANNELS, k, k),
        "deconv1.bias": (GENERATOR_HIDDEN_CHANNELS,),
        "deconv2.weight": (GENERATOR_HIDDEN_CHANNELS, IMAGE_CHANNELS, k, k),
        "deconv2.bias": (IMAGE_CHANNELS,),
    }
    discriminator = {
        "conv1.weight": (d1, IMAGE_CHANNELS, k, k),
        "conv1.bias": (d1,),
        "conv2.weight": (d2, d1, k, k),
        "conv2.bias": (d2,),
        "dense.weight": (1, d2 * side * side),
        "dense.bias": (1,),
    }
    return generator, discriminator


def build(seed, latent_dim=DEFAULT_LATENT_DIM, patch_size=DEFAULT_PATCH_SIZE):
    """Fresh model; weights ~ Normal(0, 0.02), biases zero, deterministic per seed"""
    if latent_dim < 1:
        raise ConfigError(f"latent_dim must be >= 1, got {latent_dim}")
    if patch_size < 4 or patch_size % (STRIDE * STRIDE) != 0:
        raise ConfigError(f"patch_size must be a positive multiple of 4, got {patch_size}")

    rng = derive_rng(seed, "model-init")
    g_shapes, d_shapes = layer_shapes(latent_dim, patch_size)

    def init(shapes):
        params = {}
        for name, shape in shapes.items():
            if name.endswith(".weight"):
                data = rng.normal(0.0, INIT_STD, size=shape)
            else:
                data = np.zeros(shape)
            params[name] = Tensor(data, requires_grad=True)
        return params

    model = GanModel(
        generator=init(g_shapes),
        discriminator=init(d_shapes),
        latent_dim=int(latent_dim),
        input_size=(patch_size, patch_size, IMAGE_CHANNELS),
        seed=int(seed),
    )
    logger.info(f"Built model (seed={seed}, latent_dim={latent_dim}, patch={patch_size}, "
                f"{sum(t.size for t in model.parameters()):,} parameters)")
    return model


def parameter_counts(model):
    """Parameter count per layer, e.g. {"generator.dense": 7446528, ...}"""
    counts = {}
    for name, tensor in model.named_parameters():
        layer = name.rsplit(".", 1)[0]
        counts[layer] = counts.get(layer, 0) + tensor.size
    return counts


def fingerprint(model):
    """Stable identifier of the parameter values (first 16 hex chars of SHA-256)"""
    digest = hashlib.sha256()
    for name, tensor in model.named_parameters():
        digest.update(name.encode("utf-8"))
        digest.update(np.ascontiguousarray(tensor.data, dtype="<f8").tobytes())
    return digest.hexdigest()[:16]


@contextmanager
def frozen(model, part="all"):
    """Stop gradient accumulation into "all", "generator" or "discriminator" parameters"""
    if part == "all":
        params = model.parameters()
    elif part in ("generator", "discriminator"):
        params = list(getattr(model, part).values())
    else:
        raise ValueError(f"Unknown model part {part!r}")
    flags = [(t, t.requires_grad) for t in params]
    for t, _ in flags:
        t.requires_grad = False
    try:
        yield model
    finally:
        for t, flag in flags:
            t.requires_grad = flag


# Image layout helpers: patches are HxWx3 arrays, the networks work on N x 3 x H x W

def patches_to_tensor(patches):
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim == 3:
        patches = patches[None]
    return Tensor(patches.transpose(0, 3, 1, 2))


def tensor_to_patches(images):
    return images.data.transpose(0, 2, 3, 1)


def check_patches(model, patches):
    patches = np.asarray(patches)
    expected = tuple(model.input_size)
    if patches.shape[-3:] != expected or patches.ndim not in (3, 4):
        raise ShapeError(f"patch shape {patches.shape} does not match model input {expected}")
    return patches


def check_latent(model, z):
    z = z if isinstance(z, Tensor) else Tensor(z)
    if z.ndim not in (1, 2) or z.shape[-1] != model.latent_dim:
        raise ShapeError(f"latent shape {z.shape} does not match latent_dim {model.latent_dim}")
    return z


# Forward passes

def generator_forward(model, z):
    """z[N, latent] -> images[N, 3, s, s] in [0, 1]"""
    g = model.generator
    z = check_latent(model, z)
    if z.ndim == 1:
        z = reshape(z, (1, model.latent_dim))
    side = model.bottleneck_side
    h = leaky_relu(dense(z, g["dense.weight"], g["dense.bias"]), LEAKY_SLOPE)
    h = reshape(h, (z.shape[0], GENERATOR_DENSE_CHANNELS, side, side))
    h = leaky_relu(conv_transpose2d(h, g["deconv1.weight"], g["deconv1.bias"], STRIDE, PADDING), LEAKY_SLOPE)
    h = tanh(conv_transpose2d(h, g["deconv2.weight"], g["deconv2.bias"], STRIDE, PADDING))
    return 0.5 * (h + 1.0)


def discriminator_forward(model, images):
    """images[N, 3, s, s] -> (probabilities[N, 1], bottleneck features[N, d_f])"""
    d = model.discriminator
    h = leaky_relu(conv2d(images, d["conv1.weight"], d["conv1.bias"], STRIDE, PADDING), LEAKY_SLOPE)
    h = leaky_relu(conv2d(h, d["conv2.weight"], d["conv2.bias"], STRIDE, PADDING), LEAKY_SLOPE)
    features = reshape(h, (h.shape[0], model.feature_dim))
    logits = dense(features, d["dense.weight"], d["dense.bias"])
    return sigmoid(logits), features


def generate_batch(model, z):
    with no_grad():
        return tensor_to_patches(generator_forward(model, z))


def generate(model, z):
    """One s x s x 3 patch in [0, 1] for latent vector z"""
    z = check_latent(model, z)
    if z.ndim != 1:
        raise ShapeError(f"generate() takes a single latent vector, got shape {z.shape}")
    return generate_batch(model, z)[0]


def discriminate_batch(model, patches):
    patches = check_patches(model, patches)
    with no_grad():
        probs, _ = discriminator_forward(model, patches_to_tensor(patches))
    return probs.data[:, 0]


def discriminate(model, patch):
    patch = check_patches(model, patch)
    if patch.ndim != 3:
        raise ShapeError(f"discriminate() takes a single patch, got shape {patch.shape}")
    return float(discriminate_batch(model, patch)[0])


@dataclass
class FeatureVector:
    values: np.ndarray
    source_id: str = ""

    @property
    def dim(self):
        return self.values.shape[0]


def extract_features_batch(model, patches):
    patches = check_patches(model, patches)
    with no_grad():
        _, features = discriminator_forward(model, patches_to_tensor(patches))
    return features.data


def extract_features(model, patch, source_id=""):
    """Flattened activations feeding the discriminator's final dense unit"""
    patch = check_patches(model, patch)
    if patch.ndim != 3:
        raise ShapeError(f"extract_features() takes a single patch, got shape {patch.shape}")
    return FeatureVector(values=extract_features_batch(model, patch)[0], source_id=source_id)
