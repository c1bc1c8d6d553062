from dataclasses import dataclass, field, replace

import numpy as np

from config import ADAM_EPS
from errors import ConfigError, ShapeError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = ADAM_EPS
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if self.lr <= 0 or self.eps <= 0:
            raise ConfigError(f"Adam needs lr > 0 and eps > 0, got lr={self.lr}, eps={self.eps}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError(f"Adam betas must be in [0, 1), got {self.beta1}, {self.beta2}")
        if self.t < 0:
            raise ConfigError(f"Adam step count must be >= 0, got {self.t}")


def adam_step(params, grads, state):
    """One bias-corrected Adam update

    Returns the updated parameter arrays and a new state; inputs are left untouched.
    A missing gradient (None) counts as zero.
    """
    if len(params) != len(grads):
        raise ShapeError(f"adam_step: {len(params)} params but {len(grads)} grads")
    m = state.m or [np.zeros_like(p, dtype=np.float64) for p in params]
    v = state.v or [np.zeros_like(p, dtype=np.float64) for p in params]
    if len(m) != len(params):
        raise ShapeError(f"adam_step: state holds {len(m)} moments for {len(params)} params")

    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m_i, v_i in zip(params, grads, m, v):
        p = np.asarray(p, dtype=np.float64)
        g = np.zeros_like(p) if g is None else np.asarray(g, dtype=np.float64)
        if g.shape != p.shape or m_i.shape != p.shape:
            raise ShapeError(f"adam_step: grad {g.shape} / moment {m_i.shape} vs param {p.shape}")
        m_i = state.beta1 * m_i + (1.0 - state.beta1) * g
        v_i = state.beta2 * v_i + (1.0 - state.beta2) * g * g
        m_hat = m_i / (1.0 - state.beta1 ** t)
        v_hat = v_i / (1.0 - state.beta2 ** t)
        new_params.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m_i)
        new_v.append(v_i)

    return new_params, replace(state, t=t, m=new_m, v=new_v)


class Adam:
    """Adam over a list of Tensors, updating their data in place"""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=ADAM_EPS):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        arrays = [p.data for p in self.params]
        grads = [p.grad for p in self.params]
        updated, self.state = adam_step(arrays, grads, self.state)
        for p, data in zip(self.params, updated):
            p.data = data
