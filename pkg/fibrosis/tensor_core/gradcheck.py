import numpy as np

from fibrosis.tensor_core.tensor import Tensor, backward


def numerical_gradient(fn, arrays, index, h=1e-5):
    """Central-difference gradient of scalar fn(*arrays) w.r.t. arrays[index]"""
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    target = arrays[index]
    grad = np.zeros_like(target)
    for idx in np.ndindex(target.shape):
        original = target[idx]
        target[idx] = original + h
        plus = fn(*[Tensor(a) for a in arrays]).item()
        target[idx] = original - h
        minus = fn(*[Tensor(a) for a in arrays]).item()
        target[idx] = original
        grad[idx] = (plus - minus) / (2.0 * h)
    return grad


def analytic_gradients(fn, arrays):
    tensors = [Tensor(np.array(a, dtype=np.float64), requires_grad=True) for a in arrays]
    backward(fn(*tensors))
    return [np.zeros_like(t.data) if t.grad is None else t.grad for t in tensors]


def gradcheck(fn, arrays, h=1e-5, rtol=1e-4, atol=1e-7):
    """Compare autodiff gradients of scalar fn with central differences for every input

    Returns (ok, worst relative error).
    """
    analytic = analytic_gradients(fn, arrays)
    worst = 0.0
    ok = True
    for index, grad in enumerate(analytic):
        numeric = numerical_gradient(fn, arrays, index, h)
        scale = np.maximum(np.abs(grad), np.abs(numeric))
        err = np.abs(grad - numeric)
        rel = np.where(scale > atol, err / np.maximum(scale, atol), 0.0)
        worst = max(worst, float(rel.max(initial=0.0)))
        ok = ok and bool(np.all(err <= atol + rtol * scale))
    return ok, worst
