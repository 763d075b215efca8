"""A small reverse-mode autodiff tape over float64 numpy arrays.

Only the operations the autoencoder stack needs are provided. Every op
records its parents and a closure mapping the output gradient to parent
gradients; :meth:`Tensor.backward` walks the graph in reverse topological
order.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=float)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def T(self) -> "Tensor":
        return _make(self.data.T, (self,), lambda g: (g.T,))

    def __repr__(self):
        return f"Tensor({self.data!r}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        grads = {id(self): np.asarray(grad, dtype=float)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for p, pg in zip(node._parents, node._backward(g)):
                if pg is None or not p.requires_grad:
                    continue
                pg = _unbroadcast(pg, p.data.shape)
                grads[id(p)] = grads[id(p)] + pg if id(p) in grads else pg

    def __add__(self, other):
        other = as_tensor(other)
        return _make(self.data + other.data, (self, other), lambda g: (g, g))

    __radd__ = __add__

    def __sub__(self, other):
        other = as_tensor(other)
        return _make(self.data - other.data, (self, other), lambda g: (g, -g))

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __neg__(self):
        return _make(-self.data, (self,), lambda g: (-g,))

    def __mul__(self, other):
        other = as_tensor(other)
        a, b = self.data, other.data
        return _make(a * b, (self, other), lambda g: (g * b, g * a))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        a, b = self.data, other.data
        return _make(a / b, (self, other), lambda g: (g / b, -g * a / (b * b)))

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, p: float):
        a = self.data
        return _make(a ** p, (self,), lambda g: (g * p * a ** (p - 1),))

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self.data, other.data
        return _make(a @ b, (self, other), lambda g: (g @ b.T, a.T @ g))

    def __getitem__(self, idx):
        a = self.data

        def back(g):
            out = np.zeros_like(a)
            np.add.at(out, idx, g)
            return (out,)
        return _make(a[idx], (self,), back)

    def reshape(self, *shape):
        old = self.data.shape
        return _make(self.data.reshape(*shape), (self,), lambda g: (g.reshape(old),))

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return sum_(self, axis, keepdims) / n


def _make(data, parents, backward) -> Tensor:
    return Tensor(data, _parents=parents, _backward=backward)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=float), requires_grad=True)


def sum_(x: Tensor, axis=None, keepdims=False) -> Tensor:
    shape = x.data.shape

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)
    return _make(x.data.sum(axis=axis, keepdims=keepdims), (x,), back)


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return _make(out, (x,), lambda g: (g * out,))


def log(x: Tensor) -> Tensor:
    a = x.data
    return _make(np.log(a), (x,), lambda g: (g / a,))


def sqrt(x: Tensor) -> Tensor:
    out = np.sqrt(x.data)
    return _make(out, (x,), lambda g: (g * 0.5 / out,))


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return _make(out, (x,), lambda g: (g * (1 - out * out),))


ARTANH_CLIP = 1 - 1e-15


def artanh(x: Tensor) -> Tensor:
    a = np.clip(x.data, -ARTANH_CLIP, ARTANH_CLIP)
    return _make(np.arctanh(a), (x,), lambda g: (g / (1 - a * a),))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _make(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    out = 0.5 * (1 + np.tanh(0.5 * x.data))
    return _make(out, (x,), lambda g: (g * out * (1 - out),))


def identity(x: Tensor) -> Tensor:
    return x


def rownorm(x: Tensor, eps: float = 1e-15) -> Tensor:
    """Euclidean norm over the last axis (kept), floored at ``eps``.

    The gradient is taken as ``x / max(|x|, eps)``, i.e. zero at the origin.
    """
    a = x.data
    n = np.linalg.norm(a, axis=-1, keepdims=True)
    out = np.maximum(n, eps)
    return _make(out, (x,), lambda g: (g * np.where(n > eps, a / out, 0.0),))


def clip_norm(x: Tensor, limit: float) -> Tensor:
    """Rescale rows whose norm exceeds ``limit`` onto the sphere of that radius."""
    a = x.data
    n = np.linalg.norm(a, axis=-1, keepdims=True)
    over = n > limit
    safe = np.where(over, n, 1.0)
    out = np.where(over, a / safe * limit, a)

    def back(g):
        # d(limit x/|x|) = limit/|x| (g - x (x.g)/|x|^2)
        proj = g - a * np.sum(a * g, axis=-1, keepdims=True) / (safe * safe)
        return (np.where(over, proj * limit / safe, g),)
    return _make(out, (x,), back)


def logsumexp(x: Tensor, axis=-1) -> Tensor:
    a = x.data
    m = np.max(a, axis=axis, keepdims=True)
    e = np.exp(a - m)
    s = e.sum(axis=axis, keepdims=True)
    out = m + np.log(s)
    return _make(out, (x,), lambda g: (g * e / s,))


def concat(xs, axis=-1) -> Tensor:
    arrays = [t.data for t in xs]
    sizes = np.cumsum([a.shape[axis] for a in arrays])[:-1]
    return _make(np.concatenate(arrays, axis=axis), tuple(xs),
                 lambda g: tuple(np.split(g, sizes, axis=axis)))


ACTIVATIONS = {"tanh": tanh, "relu": relu, "identity": identity, "sigmoid": sigmoid}
