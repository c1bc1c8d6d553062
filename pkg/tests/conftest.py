import numpy as np
import pytest

from fibrosis.model import build
from fibrosis.phantom import PhantomSpec

SMALL_PATCH = 16
SMALL_LATENT = 8


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_model():
    """Same layer widths as the full network, 16x16 patches and an 8-d latent"""
    return build(seed=3, latent_dim=SMALL_LATENT, patch_size=SMALL_PATCH)


@pytest.fixture
def tiny_spec():
    return PhantomSpec(width=64, height=64, ventricle=(16, 16, 32, 32), blob_radius=(2.0, 4.0), seed=5)


@pytest.fixture
def constant_model(small_model):
    """Generator emitting the constant color (r, g, b) = (0.2, 0.5, 0.1) for every z"""
    model = small_model.copy()
    for tensor in model.generator.values():
        tensor.data = np.zeros_like(tensor.data)
    color = np.array([0.2, 0.5, 0.1])
    model.generator["deconv2.bias"].data = np.arctanh(2.0 * color - 1.0)
    return model
