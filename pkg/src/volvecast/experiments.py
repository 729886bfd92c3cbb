"""Fit-and-score helpers and the two hyperparameter sweeps.

Every sweep point owns its model, seed (``base + index``) and output
subdirectory, so points can run in separate processes and a failing point is
recorded without stopping the others.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .evaluation import evaluate
from .models import CNN_VARIANTS, LSTM_VARIANTS, ModelConfig, TrainConfig, build_model, train
from .nn.complexity import count_flops, count_params
from .preprocess import CuratedDataset, curate

log = logging.getLogger(__name__)

SEQLEN_DEFAULT = (3, 4, 5, 6, 7, 8)


def model_complexity(config: ModelConfig, input_shape):
    """``(n_params, flops)`` per sample for a model config.

    The linear baseline counts one multiply-accumulate per regressor plus the
    intercept add.
    """
    if config.family == "linreg":
        n = int(np.prod(input_shape))
        return n + 1, 2 * n + 1
    return count_params(config.layers, input_shape), count_flops(config.layers, input_shape)


def fit_and_score(config: ModelConfig, dataset: CuratedDataset, holdout=False):
    """Train on the global training set and score the test set.

    Returns ``(model, history, MetricsReport, PredictionTrace)``.
    """
    shape = dataset.train.windows.shape[1:]
    hold = (dataset.test.windows, dataset.test.targets) if holdout else None
    model, history = train(config, dataset.train.windows, dataset.train.targets, holdout=hold)
    n_params, flops = model_complexity(config, shape)
    report, trace = evaluate(model, dataset.test, dataset.scalers, config.name, n_params, flops)
    return model, history, report, trace


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------


@dataclass
class SweepRow:
    label: str
    family: str
    variant: int | str
    seq_len: int
    seed: int
    status: str = "ok"
    mae: float = math.nan
    r2: float = math.nan
    flops: int | None = None
    n_params: int | None = None
    error: str = ""

    @property
    def ok(self):
        return self.status == "ok"


FIELDS = ("label", "family", "variant", "seq_len", "seed", "status", "mae", "r2", "flops", "n_params", "error")


def select_optimum(rows: Sequence[SweepRow]):
    """Argmin MAE over successful rows, ties broken by FLOPs then label.

    Depends only on the set of rows, never on their order. ``None`` when no
    point succeeded.
    """
    ok = [r for r in rows if r.ok and not math.isnan(r.mae)]
    if not ok:
        return None
    return min(ok, key=lambda r: (r.mae, r.flops if r.flops is not None else math.inf, r.label))


@dataclass
class SweepResult:
    axis: str
    rows: list = field(default_factory=list)

    @property
    def optimum(self) -> SweepRow | None:
        return select_optimum(self.rows)

    @property
    def failed(self):
        return [r for r in self.rows if not r.ok]

    def to_dict(self):
        best = self.optimum
        return {"axis": self.axis, "rows": [asdict(r) for r in self.rows], "optimum": best.label if best else None}

    @classmethod
    def from_dict(cls, d):
        return cls(d["axis"], [SweepRow(**r) for r in d["rows"]])

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_csv(self, stream: IO[str]):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(FIELDS)
        for r in self.rows:
            writer.writerow(["" if getattr(r, f) is None else getattr(r, f) for f in FIELDS])


# --------------------------------------------------------------------------
# sweep points
# --------------------------------------------------------------------------


def _write_point(directory, model, history, report, trace):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    model.save(directory / "model.bin")
    (directory / "metrics.json").write_text(report.to_json() + "\n")
    with open(directory / "history.csv", "w", newline="") as fh:
        history.write_csv(fh)
    with open(directory / "trace.csv", "w", newline="") as fh:
        trace.write_csv(fh)


def _score_point(row: SweepRow, config: ModelConfig, dataset: CuratedDataset, out):
    try:
        model, history, report, trace = fit_and_score(config, dataset)
        g = report.global_row
        row = replace(row, mae=g.mae, r2=g.r2, flops=report.flops, n_params=report.n_params)
        if out is not None:
            _write_point(out, model, history, report, trace)
    except Exception as exc:  # per-point isolation
        log.warning("sweep point %s failed: %s", row.label, exc)
        row = replace(row, status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


def _seqlen_point(args):
    row, series, family, variant, train_cfg, policy, ratio, fit_scope, out = args
    config = build_model(family, variant, replace(train_cfg, seed=row.seed))
    try:
        dataset = curate(series, seq_len=row.seq_len, policy=policy, ratio=ratio, fit_scope=fit_scope, seed=row.seed)
    except Exception as exc:
        log.warning("sweep point %s failed: %s", row.label, exc)
        return replace(row, status="failed", error=f"{type(exc).__name__}: {exc}")
    return _score_point(row, config, dataset, out)


def _arch_point(args):
    row, dataset, train_cfg, out = args
    config = build_model(row.family, row.variant, replace(train_cfg, seed=row.seed))
    return _score_point(row, config, dataset, out)


def _run(fn, tasks, workers):
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _subdir(out, i, label):
    return None if out is None else Path(out) / f"point-{i:02d}-{label}"


def run_seqlen_sweep(
    series,
    lengths=SEQLEN_DEFAULT,
    family="lstm",
    variant="final",
    train_cfg: TrainConfig | None = None,
    seed=0,
    policy="table",
    ratio=0.70,
    fit_scope="per_well",
    workers=1,
    out=None,
) -> SweepResult:
    """Re-curate, train and score once per sequence length."""
    train_cfg = train_cfg or TrainConfig()
    tasks = []
    for i, L in enumerate(lengths):
        label = f"seq{L}"
        row = SweepRow(label, family, variant, int(L), seed + i)
        tasks.append((row, series, family, variant, train_cfg, policy, ratio, fit_scope, _subdir(out, i, label)))
    return SweepResult("seq_len", _run(_seqlen_point, tasks, workers))


def arch_grid():
    """The ten ladder rungs as ``(family, variant)`` pairs, LSTM first."""
    return [("lstm", v) for v in sorted(LSTM_VARIANTS)] + [("cnn", v) for v in sorted(CNN_VARIANTS)]


def run_arch_sweep(dataset: CuratedDataset, train_cfg: TrainConfig | None = None, seed=0, workers=1, out=None, grid=None) -> SweepResult:
    """Train and score every ladder rung on one curated dataset."""
    train_cfg = train_cfg or TrainConfig()
    tasks = []
    for i, (family, variant) in enumerate(grid or arch_grid()):
        label = f"{family}{variant}"
        row = SweepRow(label, family, variant, dataset.seq_len, seed + i)
        tasks.append((row, dataset, train_cfg, _subdir(out, i, label)))
    return SweepResult("architecture", _run(_arch_point, tasks, workers))
