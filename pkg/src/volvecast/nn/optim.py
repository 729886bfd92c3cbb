"""Adam with bias-corrected moment estimates."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


class Adam:
    def __init__(self, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.state = AdamState(beta1, beta2, eps)

    def step(self, params, grads):
        """Update ``params`` in place from ``grads`` (both dicts of arrays)."""
        s = self.state
        s.t += 1
        bc1 = 1.0 - s.beta1**s.t
        bc2 = 1.0 - s.beta2**s.t
        for k, p in params.items():
            g = grads[k]
            if k not in s.m:
                s.m[k] = np.zeros_like(p)
                s.v[k] = np.zeros_like(p)
            m, v = s.m[k], s.v[k]
            m *= s.beta1
            m += (1.0 - s.beta1) * g
            v *= s.beta2
            v += (1.0 - s.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + s.eps)


def adam_step(params, grads, state: AdamState, lr=0.001):
    """Functional form: one Adam update using (and mutating) ``state``."""
    opt = Adam(lr)
    opt.state = state
    opt.step(params, grads)
    return params, state
