"""Layer kinds with hand-derived forward and backward passes.

All layers take a leading batch axis. Sequence tensors are ``(batch, length,
channels)``. Each layer caches what its backward pass needs during
``forward``; calling ``backward`` without a cached forward is an error.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import NumericError, ShapeError
from . import activations

KINDS = ("dense", "conv1d", "maxpool1d", "flatten", "lstm")
LSTM_GATES = ("i", "f", "o", "c")


@dataclass(frozen=True)
class LayerSpec:
    """Architecture description of one layer.

    ``units`` is the width of a dense layer, the filter count of a
    convolution, or the hidden size of an LSTM. Convolution and pooling use
    valid (unpadded) windows.
    """

    kind: str
    units: int = 0
    kernel: int = 1
    stride: int = 1
    activation: str = "linear"
    return_sequences: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ShapeError(f"unknown layer kind {self.kind!r}")
        if self.kernel < 1 or self.stride < 1:
            raise ShapeError("kernel and stride must be >= 1")
        if self.kind in ("dense", "conv1d", "lstm") and self.units < 1:
            raise ShapeError(f"{self.kind} layer needs units >= 1")
        activations.get(self.activation)

    @classmethod
    def dense(cls, units, activation="linear"):
        return cls("dense", units, activation=activation)

    @classmethod
    def conv1d(cls, filters, kernel=2, stride=1, activation="relu"):
        return cls("conv1d", filters, kernel, stride, activation)

    @classmethod
    def maxpool1d(cls, kernel=2, stride=1):
        return cls("maxpool1d", kernel=kernel, stride=stride)

    @classmethod
    def flatten(cls):
        return cls("flatten")

    @classmethod
    def lstm(cls, units, return_sequences=False):
        return cls("lstm", units, activation="tanh", return_sequences=return_sequences)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def output_shape(self, input_shape):
        """Per-sample output shape (no batch axis)."""
        shape = tuple(input_shape)
        if self.kind == "dense":
            if len(shape) != 1:
                raise ShapeError(f"dense layer expects a vector input, got shape {shape}")
            return (self.units,)
        if self.kind == "flatten":
            return (int(np.prod(shape)),)
        if len(shape) != 2:
            raise ShapeError(f"{self.kind} layer expects a (length, channels) input, got shape {shape}")
        length, channels = shape
        if self.kind == "lstm":
            return (length, self.units) if self.return_sequences else (self.units,)
        if length < self.kernel:
            raise ShapeError(f"{self.kind}: input length {length} shorter than kernel {self.kernel}")
        out_len = (length - self.kernel) // self.stride + 1
        return (out_len, self.units if self.kind == "conv1d" else channels)


def infer_shapes(specs, input_shape):
    """Per-sample shapes after every layer of the chain."""
    shapes = []
    shape = tuple(input_shape)
    for spec in specs:
        shape = spec.output_shape(shape)
        shapes.append(shape)
    return shapes


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def orthogonal(rng, rows, cols):
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    return q.T if rows < cols else q


class Layer:
    def __init__(self, spec: LayerSpec, input_shape):
        self.spec = spec
        self.input_shape = tuple(input_shape)
        self.output_shape = spec.output_shape(self.input_shape)
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def init_params(self, rng):
        pass

    def zero_grads(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def _need_cache(self):
        if self._cache is None:
            raise RuntimeError(f"{self.spec.kind}: backward called without a cached forward pass")
        return self._cache

    def _check_input(self, x):
        if x.shape[1:] != self.input_shape:
            raise ShapeError(f"{self.spec.kind}: expected per-sample shape {self.input_shape}, got {x.shape[1:]}")


class Dense(Layer):
    def init_params(self, rng):
        (n_in,) = self.input_shape
        n_out = self.spec.units
        self.params = {"W": glorot_uniform(rng, (n_in, n_out), n_in, n_out), "b": np.zeros(n_out)}
        self.zero_grads()

    def forward(self, x):
        self._check_input(x)
        f, df = activations.get(self.spec.activation)
        z = x @ self.params["W"] + self.params["b"]
        self._cache = (x, z, df)
        return f(z)

    def backward(self, dout):
        x, z, df = self._need_cache()
        dz = dout * df(z)
        self.grads["W"] = x.T @ dz
        self.grads["b"] = dz.sum(axis=0)
        return dz @ self.params["W"].T


class Flatten(Layer):
    def forward(self, x):
        self._check_input(x)
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._need_cache())


def _window_index(length, kernel, stride):
    out_len = (length - kernel) // stride + 1
    return (np.arange(out_len) * stride)[:, None] + np.arange(kernel)[None, :]


class Conv1D(Layer):
    """Valid cross-correlation: ``z[l, f] = sum_k,c x[l*S + k, c] W[k, c, f] + b[f]``.

    This equals a true convolution with the kernel reversed along its length.
    """

    def init_params(self, rng):
        length, channels = self.input_shape
        k, f = self.spec.kernel, self.spec.units
        self.params = {
            "W": glorot_uniform(rng, (k, channels, f), k * channels, k * f),
            "b": np.zeros(f),
        }
        self.zero_grads()

    def forward(self, x):
        self._check_input(x)
        length, channels = self.input_shape
        k, f = self.spec.kernel, self.spec.units
        idx = _window_index(length, k, self.spec.stride)
        patches = x[:, idx, :]  # (n, out_len, k, c)
        n, out_len = patches.shape[:2]
        cols = patches.reshape(n * out_len, k * channels)
        z = (cols @ self.params["W"].reshape(k * channels, f)).reshape(n, out_len, f) + self.params["b"]
        act, dact = activations.get(self.spec.activation)
        self._cache = (x.shape, idx, cols, z, dact)
        return act(z)

    def backward(self, dout):
        xshape, idx, cols, z, dact = self._need_cache()
        k, f = self.spec.kernel, self.spec.units
        channels = xshape[2]
        dz = dout * dact(z)
        dz2 = dz.reshape(-1, f)
        self.grads["W"] = (cols.T @ dz2).reshape(k, channels, f)
        self.grads["b"] = dz2.sum(axis=0)
        dcols = (dz2 @ self.params["W"].reshape(k * channels, f).T).reshape(xshape[0], idx.shape[0], k, channels)
        dx = np.zeros(xshape)
        for j in range(k):
            # for a fixed kernel offset the target positions are distinct
            dx[:, idx[:, j], :] += dcols[:, :, j, :]
        return dx


class MaxPool1D(Layer):
    def forward(self, x):
        self._check_input(x)
        idx = _window_index(self.input_shape[0], self.spec.kernel, self.spec.stride)
        windows = x[:, idx, :]  # (n, out_len, k, c)
        arg = windows.argmax(axis=2)
        out = np.take_along_axis(windows, arg[:, :, None, :], axis=2)[:, :, 0, :]
        self._cache = (x.shape, idx, arg)
        return out

    def backward(self, dout):
        xshape, idx, arg = self._need_cache()
        dx = np.zeros(xshape)
        for j in range(idx.shape[1]):
            dx[:, idx[:, j], :] += dout * (arg == j)
        return dx


class LSTM(Layer):
    """LSTM with hard-sigmoid gates and tanh candidate/output activations.

    ``i, f, o = hard_sigmoid(x W_x* + h W_h* + b_*)``, ``g = tanh(x W_xc + h W_hc + b_c)``,
    ``c_t = f c_{t-1} + i g``, ``h_t = o tanh(c_t)``.
    """

    def init_params(self, rng):
        length, channels = self.input_shape
        u = self.spec.units
        wx = glorot_uniform(rng, (channels, 4 * u), channels, 4 * u)
        wh = orthogonal(rng, u, 4 * u)
        self.params = {}
        for g, gate in enumerate(LSTM_GATES):
            self.params[f"W_x{gate}"] = wx[:, g * u : (g + 1) * u].copy()
        for g, gate in enumerate(LSTM_GATES):
            self.params[f"W_h{gate}"] = wh[:, g * u : (g + 1) * u].copy()
        for gate in LSTM_GATES:
            self.params[f"b_{gate}"] = np.ones(u) if gate == "f" else np.zeros(u)
        self.zero_grads()

    def forward(self, x, h0=None, c0=None):
        self._check_input(x)
        n, steps, _ = x.shape
        u = self.spec.units
        p = self.params
        h = np.zeros((n, u)) if h0 is None else np.broadcast_to(h0, (n, u)).astype(np.float64)
        c = np.zeros((n, u)) if c0 is None else np.broadcast_to(c0, (n, u)).astype(np.float64)
        hs = [h]
        cs = [c]
        trace = []
        for t in range(steps):
            xt = x[:, t, :]
            zi = xt @ p["W_xi"] + h @ p["W_hi"] + p["b_i"]
            zf = xt @ p["W_xf"] + h @ p["W_hf"] + p["b_f"]
            zo = xt @ p["W_xo"] + h @ p["W_ho"] + p["b_o"]
            zc = xt @ p["W_xc"] + h @ p["W_hc"] + p["b_c"]
            i = activations.hard_sigmoid(zi)
            f = activations.hard_sigmoid(zf)
            o = activations.hard_sigmoid(zo)
            g = np.tanh(zc)
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            if not (np.isfinite(c).all() and np.isfinite(h).all()):
                raise NumericError(f"lstm: non-finite state at step {t}")
            trace.append((zi, zf, zo, i, f, o, g, tc))
            hs.append(h)
            cs.append(c)
        self._cache = (x, hs, cs, trace)
        self.last_state = (h, c)
        if self.spec.return_sequences:
            return np.stack(hs[1:], axis=1)
        return h

    def backward(self, dout):
        x, hs, cs, trace = self._need_cache()
        n, steps, _ = x.shape
        u = self.spec.units
        p = self.params
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        if self.spec.return_sequences:
            dH = dout
        else:
            dH = np.zeros((n, steps, u))
            dH[:, -1, :] = dout
        dx = np.zeros_like(x)
        dh_next = np.zeros((n, u))
        dc_next = np.zeros((n, u))
        hs_grad = activations.hard_sigmoid_grad
        for t in reversed(range(steps)):
            zi, zf, zo, i, f, o, g, tc = trace[t]
            h_prev, c_prev = hs[t], cs[t]
            dh = dH[:, t, :] + dh_next
            dc = dh * o * (1.0 - tc * tc) + dc_next
            dz = {
                "i": dc * g * hs_grad(zi),
                "f": dc * c_prev * hs_grad(zf),
                "o": dh * tc * hs_grad(zo),
                "c": dc * i * (1.0 - g * g),
            }
            xt = x[:, t, :]
            dxt = np.zeros_like(xt)
            dh_next = np.zeros((n, u))
            for gate in LSTM_GATES:
                d = dz[gate]
                grads[f"W_x{gate}"] += xt.T @ d
                grads[f"W_h{gate}"] += h_prev.T @ d
                grads[f"b_{gate}"] += d.sum(axis=0)
                dxt += d @ p[f"W_x{gate}"].T
                dh_next += d @ p[f"W_h{gate}"].T
            dc_next = dc * f
            dx[:, t, :] = dxt
        self.grads = grads
        return dx


LAYER_CLASSES = {"dense": Dense, "conv1d": Conv1D, "maxpool1d": MaxPool1D, "flatten": Flatten, "lstm": LSTM}


def make_layer(spec: LayerSpec, input_shape) -> Layer:
    return LAYER_CLASSES[spec.kind](spec, input_shape)
