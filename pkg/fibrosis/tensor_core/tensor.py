import itertools
import logging
import threading
from contextlib import contextmanager

import numpy as np

from config import LOGGER_NAME
from errors import GraphConsumedError, ShapeError

logger = logging.getLogger(LOGGER_NAME)

# Global op counter; a node created later always has a larger index,
# so sorting by index is a topological order of any recorded graph.
_op_counter = itertools.count()
_state = threading.local()


def is_grad_enabled():
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad():
    """Run forward ops without recording them (inference, data-only generation)"""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Node:
    """One executed operation: its inputs and the map from output grad to input grads"""

    def __init__(self, op, inputs, backward_fn):
        self.op = op
        self.inputs = inputs
        self.backward_fn = backward_fn
        self.index = next(_op_counter)
        self.consumed = False


class Tensor:
    """Dense float64 array with optional gradient tracking"""

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._node = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Arithmetic sugar; implementations live in functional.py
    def __add__(self, other):
        from fibrosis.tensor_core.functional import add
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from fibrosis.tensor_core.functional import sub
        return sub(self, other)

    def __rsub__(self, other):
        from fibrosis.tensor_core.functional import sub
        return sub(other, self)

    def __mul__(self, other):
        from fibrosis.tensor_core.functional import mul
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from fibrosis.tensor_core.functional import mul
        return mul(self, -1.0)

    def abs(self):
        from fibrosis.tensor_core.functional import absolute
        return absolute(self)

    def sum(self, axis=None):
        from fibrosis.tensor_core.functional import reduce_sum
        return reduce_sum(self, axis)

    def mean(self, axis=None):
        from fibrosis.tensor_core.functional import reduce_mean
        return reduce_mean(self, axis)

    def reshape(self, *shape):
        from fibrosis.tensor_core.functional import reshape
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def record(data, op, inputs, backward_fn):
    """Wrap an op result, attaching a graph node when any input tracks gradients"""
    out = Tensor(data)
    if is_grad_enabled() and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._node = Node(op, tuple(inputs), backward_fn)
    return out


class Graph:
    """Ordered record of the operations a scalar loss depends on

    Nodes are kept in execution order; a graph supports exactly one backward pass.
    """

    def __init__(self, loss):
        self.loss = loss
        self.nodes = self._trace(loss)

    @staticmethod
    def _trace(loss):
        seen = {}
        stack = [loss._node] if loss._node is not None else []
        while stack:
            node = stack.pop()
            if node.index in seen:
                continue
            seen[node.index] = node
            for t in node.inputs:
                if t._node is not None and t._node.index not in seen:
                    stack.append(t._node)
        return [seen[k] for k in sorted(seen)]

    @property
    def consumed(self):
        return any(node.consumed for node in self.nodes)

    def run_backward(self):
        if self.consumed:
            raise GraphConsumedError("backward() called twice through the same graph")

        # Gradients are keyed by the index of the node that produced the tensor
        grads = {self.loss._node.index: np.ones_like(self.loss.data)}
        for node in reversed(self.nodes):
            out_grad = grads.pop(node.index, None)
            if out_grad is None:
                continue
            input_grads = node.backward_fn(out_grad)
            for t, g in zip(node.inputs, input_grads):
                if g is None or not t.requires_grad:
                    continue
                if t._node is not None:
                    key = t._node.index
                    grads[key] = g if key not in grads else grads[key] + g
                else:
                    t.grad = g.copy() if t.grad is None else t.grad + g

        for node in self.nodes:
            node.consumed = True
            node.backward_fn = None
            node.inputs = ()
        logger.debug(f"Backward pass over {len(self.nodes)} ops")


def backward(loss):
    """Populate .grad on every leaf tensor the scalar loss depends on"""
    loss = as_tensor(loss)
    if loss.size != 1:
        raise ShapeError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if loss._node is None:
        if loss.requires_grad:
            loss.grad = np.ones_like(loss.data) if loss.grad is None else loss.grad + 1.0
        return
    Graph(loss).run_backward()
