import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from config import BCE_EPS, LOGGER_NAME
from errors import NumericError, ShapeError
from fibrosis.tensor_core.tensor import as_tensor, record

logger = logging.getLogger(LOGGER_NAME)

ACTIVATIONS = ("leaky_relu", "tanh", "sigmoid")


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to the operand's shape"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# Elementwise and reduction plumbing

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record(data, "add", (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record(data, "sub", (a, b), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record(data, "mul", (a, b), backward)


def absolute(x):
    x = as_tensor(x)

    def backward(g):
        # subgradient 0 at x == 0
        return (g * np.sign(x.data),)

    return record(np.abs(x.data), "abs", (x,), backward)


def reduce_sum(x, axis=None):
    x = as_tensor(x)
    data = x.data.sum(axis=axis)

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return record(data, "sum", (x,), backward)


def reduce_mean(x, axis=None):
    x = as_tensor(x)
    data = x.data.mean(axis=axis)
    count = x.size // max(data.size, 1)

    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, x.shape).copy(),)

    return record(data, "mean", (x,), backward)


def reshape(x, shape):
    x = as_tensor(x)
    try:
        data = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"cannot reshape {x.shape} into {tuple(shape)}") from e

    def backward(g):
        return (g.reshape(x.shape),)

    return record(data, "reshape", (x,), backward)


# Layers

def _check_conv_args(x, kernel, bias, stride, padding, in_axis, out_axis, op):
    if x.ndim != 4:
        raise ShapeError(f"{op}: input must be [C,H,W] or [N,C,H,W], got {x.shape}")
    if kernel.ndim != 4:
        raise ShapeError(f"{op}: kernel must be 4-D, got {kernel.shape}")
    if kernel.shape[in_axis] != x.shape[1]:
        raise ShapeError(
            f"{op}: input channels {x.shape[1]} != kernel input channels {kernel.shape[in_axis]}"
        )
    if bias.shape != (kernel.shape[out_axis],):
        raise ShapeError(
            f"{op}: bias shape {bias.shape} != ({kernel.shape[out_axis]},) output channels"
        )
    if int(stride) < 1 or int(padding) < 0:
        raise ShapeError(f"{op}: stride must be >= 1 and padding >= 0, got {stride}, {padding}")


def _batched(fn):
    """Accept the unbatched [C,H,W] form by routing through a batch of one"""

    def wrapper(x, kernel, bias, stride=1, padding=0):
        x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
        if x.ndim == 3:
            out = fn(reshape(x, (1,) + x.shape), kernel, bias, stride, padding)
            return reshape(out, out.shape[1:])
        return fn(x, kernel, bias, stride, padding)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _scatter_windows(cols, out_shape, kh, kw, stride, rows, width):
    """Scatter-add per-tap contributions cols[N, rows, width, C, kh, kw] into an [N, C, H, W] buffer"""
    out = np.zeros(out_shape)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i:i + stride * rows:stride, j:j + stride * width:stride] += (
                cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            )
    return out


@_batched
def conv2d(x, kernel, bias, stride=1, padding=0):
    """2-D cross-correlation of x[N,C_in,H,W] with kernel[C_out,C_in,kh,kw] plus bias"""
    _check_conv_args(x, kernel, bias, stride, padding, 1, 0, "conv2d")
    s, p = int(stride), int(padding)
    n, c_in, h, w = x.shape
    c_out, _, kh, kw = kernel.shape
    if h + 2 * p < kh or w + 2 * p < kw:
        raise ShapeError(
            f"conv2d: padded input {h + 2 * p}x{w + 2 * p} smaller than kernel {kh}x{kw}"
        )

    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p)))
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]
    h_out, w_out = windows.shape[2], windows.shape[3]
    out = np.tensordot(windows, kernel.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    out = out + bias.data[None, :, None, None]

    def backward(g):
        g_kernel = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        g_bias = g.sum(axis=(0, 2, 3))
        cols = np.tensordot(g, kernel.data, axes=([1], [0]))
        g_xp = _scatter_windows(cols, xp.shape, kh, kw, s, h_out, w_out)
        g_x = g_xp[:, :, p:p + h, p:p + w]
        return g_x, g_kernel, g_bias

    return record(out, "conv2d", (x, kernel, bias), backward)


@_batched
def conv_transpose2d(x, kernel, bias, stride=1, padding=0):
    """Transposed convolution of x[N,C_in,H,W] with kernel[C_in,C_out,kh,kw] plus bias

    The linear part is the adjoint of conv2d with the same kernel array.
    """
    _check_conv_args(x, kernel, bias, stride, padding, 0, 1, "conv_transpose2d")
    s, p = int(stride), int(padding)
    n, c_in, h, w = x.shape
    _, c_out, kh, kw = kernel.shape
    full_h, full_w = (h - 1) * s + kh, (w - 1) * s + kw
    h_out, w_out = full_h - 2 * p, full_w - 2 * p
    if h_out <= 0 or w_out <= 0:
        raise ShapeError(f"conv_transpose2d: output extent {h_out}x{w_out} is not positive")

    cols = np.tensordot(x.data, kernel.data, axes=([1], [0]))
    full = _scatter_windows(cols, (n, c_out, full_h, full_w), kh, kw, s, h, w)
    out = full[:, :, p:p + h_out, p:p + w_out] + bias.data[None, :, None, None]

    def backward(g):
        g_full = np.zeros((n, c_out, full_h, full_w))
        g_full[:, :, p:p + h_out, p:p + w_out] = g
        windows = sliding_window_view(g_full, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]
        g_x = np.tensordot(windows, kernel.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
        g_kernel = np.tensordot(x.data, windows, axes=([0, 2, 3], [0, 2, 3]))
        g_bias = g.sum(axis=(0, 2, 3))
        return g_x, g_kernel, g_bias

    return record(np.ascontiguousarray(out), "conv_transpose2d", (x, kernel, bias), backward)


def dense(x, weight, bias):
    """weight @ x + bias for x[n] or a batch x[N,n]"""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if weight.ndim != 2 or x.ndim not in (1, 2):
        raise ShapeError(f"dense: input {x.shape} / weight {weight.shape} must be 1-2-D / 2-D")
    m, n_in = weight.shape
    if x.shape[-1] != n_in:
        raise ShapeError(f"dense: input features {x.shape[-1]} != weight columns {n_in}")
    if bias.shape != (m,):
        raise ShapeError(f"dense: bias shape {bias.shape} != ({m},)")

    out = x.data @ weight.data.T + bias.data

    def backward(g):
        if x.ndim == 1:
            return g @ weight.data, np.outer(g, x.data), g
        return g @ weight.data, g.T @ x.data, g.sum(axis=0)

    return record(out, "dense", (x, weight, bias), backward)


def activation(x, kind, slope=0.2):
    """Elementwise leaky_relu(slope), tanh or sigmoid"""
    x = as_tensor(x)
    if kind not in ACTIVATIONS:
        raise ValueError(f"Unknown activation {kind!r}; expected one of {ACTIVATIONS}")
    if not np.all(np.isfinite(x.data)):
        raise NumericError(f"{kind}: non-finite input")

    if kind == "leaky_relu":
        if not 0.0 < slope < 1.0:
            raise ValueError(f"leaky_relu slope must be in (0, 1), got {slope}")
        factor = np.where(x.data > 0, 1.0, slope)
        out = x.data * factor

        def backward(g):
            return (g * factor,)
    elif kind == "tanh":
        out = np.tanh(x.data)

        def backward(g):
            return (g * (1.0 - out ** 2),)
    else:
        out = expit(x.data)

        def backward(g):
            return (g * out * (1.0 - out),)

    return record(out, kind, (x,), backward)


def leaky_relu(x, slope=0.2):
    return activation(x, "leaky_relu", slope)


def tanh(x):
    return activation(x, "tanh")


def sigmoid(x):
    return activation(x, "sigmoid")


# Losses

def l1_loss(a, b):
    """Mean absolute difference; subgradient 0 at ties"""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"l1_loss: shapes differ, {a.shape} vs {b.shape}")
    diff = a.data - b.data
    out = np.abs(diff).mean()

    def backward(g):
        grad = g * np.sign(diff) / diff.size
        return grad, -grad

    return record(out, "l1_loss", (a, b), backward)


def bce_loss(pred, target):
    """Binary cross-entropy of probabilities against 0/1 targets, averaged

    Predictions are clamped to [eps, 1 - eps]; clamped entries pass no gradient.
    """
    pred = as_tensor(pred)
    target = np.broadcast_to(np.asarray(target, dtype=np.float64), pred.shape)
    p = np.clip(pred.data, BCE_EPS, 1.0 - BCE_EPS)
    out = -(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)).mean()

    def backward(g):
        inside = (pred.data >= BCE_EPS) & (pred.data <= 1.0 - BCE_EPS)
        grad = g * (-(target / p) + (1.0 - target) / (1.0 - p)) / p.size
        return (np.where(inside, grad, 0.0),)

    return record(out, "bce_loss", (pred,), backward)
