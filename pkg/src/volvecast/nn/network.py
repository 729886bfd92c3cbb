"""A sequential stack of layers with MSE loss and flat-parameter checkpoints."""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from ..errors import ShapeError
from .layers import LayerSpec, infer_shapes, make_layer

CHECKPOINT_FORMAT = "volvecast-network v1"


def mse(pred, target):
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_grad(pred, target):
    return 2.0 * (pred - target) / pred.size


class Network:
    """Layer chain mapping ``(batch, *input_shape)`` to ``(batch,)`` predictions."""

    def __init__(self, specs, input_shape, seed=0):
        self.specs = tuple(specs)
        self.input_shape = tuple(input_shape)
        self.seed = seed
        self.shapes = infer_shapes(self.specs, self.input_shape)
        if self.shapes and self.shapes[-1] != (1,):
            raise ShapeError(f"network must end in a single output, got shape {self.shapes[-1]}")
        rng = np.random.default_rng(seed)
        self.layers = []
        shape = self.input_shape
        for spec in self.specs:
            layer = make_layer(spec, shape)
            layer.init_params(rng)
            self.layers.append(layer)
            shape = layer.output_shape

    def forward(self, x):
        out = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            out = layer.forward(out)
        return out

    def predict(self, x, batch_size=1024):
        x = np.asarray(x, dtype=np.float64)
        parts = [self.forward(x[i : i + batch_size])[:, 0] for i in range(0, len(x), batch_size)]
        return np.concatenate(parts) if parts else np.zeros(0)

    def backward(self, dout):
        grad = dout
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def loss_and_grads(self, x, y):
        """MSE on one batch; leaves gradients in every layer's ``grads``.

        A non-finite loss is returned without running the backward pass.
        """
        pred = self.forward(x)[:, 0]
        loss = mse(pred, y)
        if not np.isfinite(loss):
            return loss
        self.backward(mse_grad(pred, y)[:, None])
        return loss

    # parameter access -------------------------------------------------

    def parameters(self):
        """``{"<layer>.<name>": array}`` views of the live parameters."""
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.params.items()}

    def gradients(self):
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.grads.items()}

    def n_params(self):
        return sum(v.size for v in self.parameters().values())

    def get_flat(self):
        params = self.parameters()
        if not params:
            return np.zeros(0)
        return np.concatenate([v.ravel() for v in params.values()])

    def set_flat(self, flat):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.n_params():
            raise ShapeError(f"expected {self.n_params()} parameters, got {flat.size}")
        pos = 0
        for v in self.parameters().values():
            v[...] = flat[pos : pos + v.size].reshape(v.shape)
            pos += v.size

    # checkpoints ------------------------------------------------------

    def header(self, extra=None):
        h = {
            "format": CHECKPOINT_FORMAT,
            "input_shape": list(self.input_shape),
            "seed": self.seed,
            "layers": [s.to_dict() for s in self.specs],
            "parameters": [[k, list(v.shape)] for k, v in self.parameters().items()],
        }
        if extra:
            h["extra"] = extra
        return h

    def save(self, path, extra=None):
        """Write a JSON header line followed by little-endian float64 parameters."""
        payload = self.get_flat().astype("<f8").tobytes()
        with open(path, "wb") as fh:
            fh.write(json.dumps(self.header(extra)).encode() + b"\n")
            fh.write(payload)

    @classmethod
    def load(cls, path):
        data = Path(path).read_bytes()
        line, _, payload = data.partition(b"\n")
        header = json.loads(line)
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ShapeError(f"{path}: not a network checkpoint")
        net = cls([LayerSpec.from_dict(d) for d in header["layers"]], header["input_shape"], header["seed"])
        net.set_flat(np.frombuffer(payload, dtype="<f8"))
        net.extra = header.get("extra", {})
        return net
