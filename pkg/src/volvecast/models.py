"""Architecture ladders, the least-squares baseline, and the training loop."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError, ShapeError
from .nn.layers import LayerSpec
from .nn.network import CHECKPOINT_FORMAT, Network, mse
from .nn.optim import Adam

log = logging.getLogger(__name__)

FAMILIES = ("linreg", "cnn", "lstm")
FINAL_VARIANT = {"lstm": 3, "cnn": 4}

# Hidden widths for the non-final rungs reuse the final models' widths.
_L = LayerSpec
LSTM_VARIANTS = {
    1: (_L.lstm(30), _L.dense(20, "relu"), _L.dense(1)),
    2: (_L.lstm(30, True), _L.lstm(20), _L.dense(20, "relu"), _L.dense(1)),
    3: (_L.lstm(30, True), _L.lstm(20), _L.dense(20, "relu"), _L.dense(16, "relu"), _L.dense(1)),
    4: (_L.lstm(30, True), _L.lstm(20, True), _L.lstm(20), _L.dense(20, "relu"), _L.dense(16, "relu"), _L.dense(1)),
    5: (
        _L.lstm(30, True),
        _L.lstm(20, True),
        _L.lstm(20),
        _L.dense(20, "relu"),
        _L.dense(16, "relu"),
        _L.dense(16, "relu"),
        _L.dense(1),
    ),
}
_conv = _L.conv1d(64, kernel=2, stride=1, activation="relu")
_pool = _L.maxpool1d(kernel=2, stride=1)
CNN_VARIANTS = {
    1: (_conv, _pool, _L.flatten(), _L.dense(1)),
    2: (_conv, _conv, _pool, _L.flatten(), _L.dense(1)),
    3: (_conv, _conv, _pool, _L.flatten(), _L.dense(20, "relu"), _L.dense(1)),
    4: (_conv, _conv, _conv, _pool, _L.flatten(), _L.dense(1)),
    5: (_conv, _conv, _conv, _pool, _L.flatten(), _L.dense(20, "relu"), _L.dense(1)),
}
del _L

#: trainable-parameter totals published for the two final architectures
PUBLISHED_PARAM_COUNTS = {"cnn": 18049, "lstm": 9893}
#: published (FLOPs, MAE, R2) for every rung of both ladders
PUBLISHED_LADDER = {
    ("lstm", 1): (27552, 136.37, 0.97),
    ("lstm", 2): (30272, 113.39, 0.98),
    ("lstm", 3): (33312, 111.16, 0.98),
    ("lstm", 4): (40352, 114.58, 0.97),
    ("lstm", 5): (48288, 117.40, 0.97),
    ("cnn", 1): (385056, 199.88, 0.94),
    ("cnn", 2): (1955872, 322.88, 0.84),
    ("cnn", 3): (1993696, 293.49, 0.85),
    ("cnn", 4): (3008544, 151.64, 0.96),
    ("cnn", 5): (3046368, 161.34, 0.95),
}


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    max_steps: int | None = None


@dataclass(frozen=True)
class ModelConfig:
    family: str
    variant: int | str
    layers: tuple = ()
    train: TrainConfig = field(default_factory=TrainConfig)

    @property
    def name(self):
        return f"{self.family}-{self.variant}"

    @property
    def layer_kinds(self):
        return [s.kind for s in self.layers]

    def to_dict(self):
        return {
            "family": self.family,
            "variant": self.variant,
            "layers": [s.to_dict() for s in self.layers],
            "train": asdict(self.train),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], d["variant"], tuple(LayerSpec.from_dict(s) for s in d["layers"]), TrainConfig(**d["train"]))


def parse_variant(variant):
    if variant == "final" or variant is None:
        return "final"
    try:
        v = int(variant)
    except (TypeError, ValueError):
        raise ConfigError(f"unknown variant {variant!r}; expected 1-5 or 'final'") from None
    if v not in range(1, 6):
        raise ConfigError(f"unknown variant {variant!r}; expected 1-5 or 'final'")
    return v


def build_model(family, variant="final", train: TrainConfig | None = None) -> ModelConfig:
    """Layer chain for one rung of a ladder. ``final`` is lstm 3 / cnn 4."""
    train = train or TrainConfig()
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}; expected one of {FAMILIES}")
    variant = parse_variant(variant)
    if family == "linreg":
        return ModelConfig("linreg", "final", (), train)
    rung = FINAL_VARIANT[family] if variant == "final" else variant
    ladder = LSTM_VARIANTS if family == "lstm" else CNN_VARIANTS
    return ModelConfig(family, variant, ladder[rung], train)


# --------------------------------------------------------------------------
# least-squares baseline
# --------------------------------------------------------------------------

LINREG_FORMAT = "volvecast-linreg v1"


@dataclass(eq=False)
class LinRegModel:
    """``y = coef . flatten(window) + intercept``."""

    coef: np.ndarray
    intercept: float
    rank: int
    rank_deficient: bool
    input_shape: tuple

    def predict(self, windows):
        X = np.asarray(windows, dtype=np.float64).reshape(len(windows), -1)
        return X @ self.coef + self.intercept

    def n_params(self):
        return self.coef.size + 1

    def save(self, path, extra=None):
        header = {
            "format": LINREG_FORMAT,
            "input_shape": list(self.input_shape),
            "rank": self.rank,
            "rank_deficient": self.rank_deficient,
        }
        if extra:
            header["extra"] = extra
        payload = np.concatenate([self.coef, [self.intercept]]).astype("<f8").tobytes()
        with open(path, "wb") as fh:
            fh.write(json.dumps(header).encode() + b"\n")
            fh.write(payload)

    @classmethod
    def load(cls, path):
        line, _, payload = Path(path).read_bytes().partition(b"\n")
        header = json.loads(line)
        theta = np.frombuffer(payload, dtype="<f8").copy()
        model = cls(theta[:-1], float(theta[-1]), header["rank"], header["rank_deficient"], tuple(header["input_shape"]))
        model.extra = header.get("extra", {})
        return model


def design_matrix(windows):
    X = np.asarray(windows, dtype=np.float64).reshape(len(windows), -1)
    return np.hstack([X, np.ones((len(X), 1))])


def fit_linear_regression(windows, targets) -> LinRegModel:
    """Minimise the residual sum of squares with a rank-safe least-squares solve.

    Rank-deficient designs (e.g. one input an exact multiple of another) get
    the minimum-norm solution and ``rank_deficient=True``.
    """
    windows = np.asarray(windows, dtype=np.float64)
    A = design_matrix(windows)
    y = np.asarray(targets, dtype=np.float64)
    if A.shape[0] < A.shape[1]:
        raise ShapeError(f"need at least {A.shape[1]} samples for {A.shape[1] - 1} regressors, got {A.shape[0]}")
    theta, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    deficient = int(rank) < A.shape[1]
    if deficient:
        log.warning("design matrix rank %d < %d columns; using the minimum-norm solution", rank, A.shape[1])
    return LinRegModel(theta[:-1], float(theta[-1]), int(rank), deficient, windows.shape[1:])


def sum_of_squares(y, y_hat):
    """(SST, SSE, SSR) about the mean of ``y``."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    ybar = y.mean()
    return float(((y - ybar) ** 2).sum()), float(((y - y_hat) ** 2).sum()), float(((y_hat - ybar) ** 2).sum())


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------


@dataclass
class TrainHistory:
    losses: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list, compare=False)
    holdout_losses: list = field(default_factory=list)
    steps: int = 0

    @property
    def final_epoch(self):
        return len(self.losses) - 1

    def write_csv(self, stream, timing=False):
        """Per-epoch losses. Wall-clock seconds only with ``timing=True`` so the
        default output is identical across reruns."""
        stream.write("epoch,train_loss,holdout_loss" + (",seconds" if timing else "") + "\n")
        for e, loss in enumerate(self.losses):
            hold = repr(self.holdout_losses[e]) if e < len(self.holdout_losses) else ""
            row = f"{e},{loss!r},{hold}"
            if timing:
                row += "," + (f"{self.epoch_seconds[e]:.6f}" if e < len(self.epoch_seconds) else "")
            stream.write(row + "\n")


def steps_per_epoch(n, batch_size):
    return math.ceil(n / batch_size)


def train(config: ModelConfig, windows, targets, holdout=None, callback=None):
    """Fit ``config`` on scaled windows/targets.

    Neural families run ``epochs`` passes of Adam on MSE over mini-batches
    reshuffled each epoch with the run seed, stopping early only when
    ``max_steps`` is set. ``holdout=(windows, targets)`` is scored after each
    epoch for logging and never alters training.

    Returns ``(model, history)``.
    """
    windows = np.asarray(windows, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    tc = config.train
    history = TrainHistory()
    if config.family == "linreg":
        t0 = time.perf_counter()
        model = fit_linear_regression(windows, targets)
        history.losses.append(mse(model.predict(windows), targets))
        history.epoch_seconds.append(time.perf_counter() - t0)
        if callback is not None:
            callback(0, history)
        return model, history

    net = Network(config.layers, windows.shape[1:], seed=tc.seed)
    opt = Adam(tc.lr)
    rng = np.random.default_rng(tc.seed)
    n = len(targets)
    if n == 0:
        raise ShapeError("empty training set")
    params = net.parameters()
    for epoch in range(tc.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, tc.batch_size)):
            idx = order[start : start + tc.batch_size]
            loss = net.loss_and_grads(windows[idx], targets[idx])
            if not math.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}")
            opt.step(params, net.gradients())
            total += loss * len(idx)
            history.steps += 1
            if tc.max_steps is not None and history.steps >= tc.max_steps:
                break
        seen = min(n, (b + 1) * tc.batch_size)
        history.losses.append(total / seen)
        history.epoch_seconds.append(time.perf_counter() - t0)
        if holdout is not None:
            history.holdout_losses.append(mse(net.predict(holdout[0]), np.asarray(holdout[1])))
        if callback is not None:
            callback(epoch, history)
        if tc.max_steps is not None and history.steps >= tc.max_steps:
            break
    return net, history


def save_model(model, path, extra=None):
    model.save(path, extra)


def load_model(path):
    line = Path(path).read_bytes().split(b"\n", 1)[0]
    fmt = json.loads(line).get("format")
    if fmt == LINREG_FORMAT:
        return LinRegModel.load(path)
    if fmt == CHECKPOINT_FORMAT:
        return Network.load(path)
    raise ConfigError(f"{path}: unknown checkpoint format {fmt!r}")
