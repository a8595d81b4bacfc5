"""First-order optimizers over flat parameter vectors with per-group rates."""

from __future__ import annotations

import numpy as np


def group_rates(slices: dict[str, slice], rates: dict[str, float], size: int) -> np.ndarray:
    """Expand ``{group: lr}`` into one learning rate per vector entry."""
    lr = np.zeros(size)
    for name, sl in slices.items():
        if name not in rates:
            raise KeyError(f"no learning rate for parameter group {name!r}")
        lr[sl] = rates[name]
    return lr


class SGD:
    """Plain gradient descent ``x <- x - lr * g`` (``ascend=True`` flips the sign)."""

    def __init__(self, lr):
        self.lr = np.asarray(lr, dtype=np.float64)

    def step(self, x: np.ndarray, grad: np.ndarray, ascend: bool = False) -> np.ndarray:
        sign = 1.0 if ascend else -1.0
        return x + sign * self.lr * grad

    def state_dict(self) -> dict:
        return {"kind": "sgd"}


class Adam:
    def __init__(self, lr, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = np.asarray(lr, dtype=np.float64)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = None
        self.v = None
        self.t = 0

    def step(self, x: np.ndarray, grad: np.ndarray, ascend: bool = False) -> np.ndarray:
        g = -grad if ascend else grad
        if self.m is None:
            self.m = np.zeros_like(x)
            self.v = np.zeros_like(x)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * g
        self.v = self.beta2 * self.v + (1 - self.beta2) * g * g
        mhat = self.m / (1 - self.beta1**self.t)
        vhat = self.v / (1 - self.beta2**self.t)
        return x - self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def state_dict(self) -> dict:
        return {"kind": "adam", "t": self.t}


def make_optimizer(kind: str, lr):
    if kind == "sgd":
        return SGD(lr)
    if kind == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {kind!r}")
