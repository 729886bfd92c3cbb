"""Central finite-difference check of analytic gradients."""

import numpy as np

from .network import mse


def relative_error(analytic, numeric, floor=1e-6):
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``.

    The floor keeps gradients at the roundoff level of the difference
    quotient (about 1e-11 for eps=1e-5) from dominating the maximum.
    """
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def numeric_gradients(net, x, y, eps=1e-5, names=None):
    out = {}
    for name, p in net.parameters().items():
        if names is not None and name not in names:
            continue
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = mse(net.forward(x)[:, 0], y)
            flat[j] = orig - eps
            down = mse(net.forward(x)[:, 0], y)
            flat[j] = orig
            gflat[j] = (up - down) / (2 * eps)
        out[name] = g
    return out


def check_gradients(net, x, y, eps=1e-5, floor=1e-6):
    """Max relative error per parameter between backprop and central differences."""
    net.loss_and_grads(x, y)
    analytic = {k: v.copy() for k, v in net.gradients().items()}
    numeric = numeric_gradients(net, x, y, eps)
    return {k: float(relative_error(analytic[k], numeric[k], floor).max()) for k in analytic}
