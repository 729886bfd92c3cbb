"""Elementwise activations and their derivatives wrt the pre-activation."""

import numpy as np


def relu(z):
    return np.maximum(z, 0.0)


def relu_grad(z):
    return (z > 0).astype(z.dtype)


def tanh_grad(z):
    t = np.tanh(z)
    return 1.0 - t * t


def hard_sigmoid(z):
    """Piecewise-linear sigmoid: ``clip(0.2 z + 0.5, 0, 1)``."""
    return np.clip(0.2 * np.asarray(z, dtype=np.float64) + 0.5, 0.0, 1.0)


def hard_sigmoid_grad(z):
    return np.where((z > -2.5) & (z < 2.5), 0.2, 0.0)


def linear(z):
    return z


def linear_grad(z):
    return np.ones_like(z)


ACTIVATIONS = {
    "relu": (relu, relu_grad),
    "tanh": (np.tanh, tanh_grad),
    "hard_sigmoid": (hard_sigmoid, hard_sigmoid_grad),
    "linear": (linear, linear_grad),
}


def get(name):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; expected one of {sorted(ACTIVATIONS)}") from None
