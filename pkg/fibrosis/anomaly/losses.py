import numpy as np

from errors import ConfigError, ShapeError
from fibrosis.model import discriminator_forward, patches_to_tensor
from fibrosis.tensor_core import Tensor, l1_loss, no_grad


def _as_images(value):
    """NCHW Tensor as is; HxWx3 (or NxHxWx3) arrays converted to NCHW"""
    if isinstance(value, Tensor):
        return value
    return patches_to_tensor(np.asarray(value, dtype=np.float64))


def check_lambda(lam):
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {lam}")
    return lam


def residual_loss(x, gz):
    """L_r: mean |x - G(z)| over all pixels and channels"""
    x, gz = _as_images(x), _as_images(gz)
    if x.shape != gz.shape:
        raise ShapeError(f"residual_loss: query {x.shape} vs generated {gz.shape}")
    return l1_loss(x, gz)


def feature_matching_loss(model, x, gz):
    """L_f: mean |f(x) - f(G(z))| over discriminator bottleneck features"""
    x, gz = _as_images(x), _as_images(gz)
    if x.shape != gz.shape:
        raise ShapeError(f"feature_matching_loss: query {x.shape} vs generated {gz.shape}")
    with no_grad():
        _, fx = discriminator_forward(model, x)
    _, fgz = discriminator_forward(model, gz)
    return l1_loss(fx, fgz)


def combined_loss(l_r, l_f, lam):
    """L = (1 - lambda) * L_r + lambda * L_f; floats or Tensors"""
    check_lambda(lam)
    return (1.0 - lam) * l_r + lam * l_f


def per_sample_losses(model, x, gz, lam, fx=None):
    """Combined loss of one query x[1,3,s,s] against each generated image gz[N,3,s,s]

    Returns a Tensor of shape [N]; rows are independent so summing them gives
    per-row gradients.
    """
    x, gz = _as_images(x), _as_images(gz)
    if x.shape[1:] != gz.shape[1:]:
        raise ShapeError(f"query {x.shape} vs generated {gz.shape}")
    if fx is None:
        with no_grad():
            _, fx = discriminator_forward(model, x)
    _, fgz = discriminator_forward(model, gz)
    l_r = (gz - x.data).abs().mean(axis=(1, 2, 3))
    l_f = (fgz - fx.data).abs().mean(axis=1)
    return combined_loss(l_r, l_f, lam)
