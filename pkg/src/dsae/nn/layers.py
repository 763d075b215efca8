"""Euclidean and Poincare-ball feed-forward layers."""

from __future__ import annotations

import numpy as np

from .. import hyperbolic as hyp
from . import autograd as ag
from .autograd import Tensor


def glorot(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_in, n_out))


class Dense:
    """``act(x @ W + b)`` on row-vector batches."""

    def __init__(self, n_in: int, n_out: int, activation: str = "tanh", rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.W = ag.parameter(glorot(rng, n_in, n_out))
        self.b = ag.parameter(np.zeros(n_out))
        self.activation = activation

    @property
    def params(self) -> dict[str, Tensor]:
        return {"W": self.W, "b": self.b}

    def __call__(self, x) -> Tensor:
        x = ag.as_tensor(x)
        if x.shape[-1] != self.W.shape[0]:
            raise ValueError(f"input width {x.shape[-1]} != layer width {self.W.shape[0]}")
        return ag.ACTIVATIONS[self.activation](x @ self.W + self.b)


# --- differentiable counterparts of the hyperbolic module -----------------

def exp0(v: Tensor, c: float) -> Tensor:
    sc = np.sqrt(c)
    n = ag.rownorm(v)
    return ag.clip_norm(ag.tanh(sc * n) * v / (sc * n), hyp.max_norm(c))


def log0(y: Tensor, c: float) -> Tensor:
    sc = np.sqrt(c)
    n = ag.rownorm(y)
    return ag.artanh(sc * n) * y / (sc * n)


def mobius_add(x: Tensor, y: Tensor, c: float) -> Tensor:
    xy = (x * y).sum(axis=-1, keepdims=True)
    x2 = (x * x).sum(axis=-1, keepdims=True)
    y2 = (y * y).sum(axis=-1, keepdims=True)
    num = (1 + 2 * c * xy + c * y2) * x + (1 - c * x2) * y
    den = 1 + 2 * c * xy + c * c * x2 * y2
    return ag.clip_norm(num / den, hyp.max_norm(c))


def mobius_matvec(x: Tensor, W: Tensor, c: float) -> Tensor:
    """Row-batch form ``exp0(log0(x) @ W)`` (``W`` stored input-major)."""
    return exp0(log0(x, c) @ W, c)


class HyperbolicDense:
    """Poincare-ball layer ``act((W (x) h) (+) exp0(b))``.

    The activation is applied in the tangent space at the origin,
    ``exp0(act(log0(.)))``; ``W`` and ``b`` are ordinary Euclidean parameters.
    """

    def __init__(self, n_in: int, n_out: int, c: float, activation: str = "tanh", rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        if not c > 0:
            raise ValueError("curvature magnitude must be positive")
        self.c = float(c)
        self.W = ag.parameter(glorot(rng, n_in, n_out))
        self.b = ag.parameter(np.zeros(n_out))
        self.activation = activation

    @property
    def params(self) -> dict[str, Tensor]:
        return {"W": self.W, "b": self.b}

    def __call__(self, h) -> Tensor:
        h = ag.as_tensor(h)
        if h.shape[-1] != self.W.shape[0]:
            raise ValueError(f"input width {h.shape[-1]} != layer width {self.W.shape[0]}")
        if np.any(self.c * np.sum(h.data ** 2, axis=-1) >= 1.0):
            raise ValueError("input lies outside the Poincare ball")
        c = self.c
        out = mobius_add(mobius_matvec(h, self.W, c), exp0(self.b.reshape(1, -1), c), c)
        if self.activation == "identity":
            return out
        return exp0(ag.ACTIVATIONS[self.activation](log0(out, c)), c)
