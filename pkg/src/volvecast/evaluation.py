"""Metrics, per-well/global scoring in original units, and report export."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

import numpy as np

from .preprocess import SampleSet, ScalerParams, invert_scaler

GLOBAL = "global"


def _pair(actual, predicted):
    y = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise ValueError(f"length mismatch: {y.size} actual vs {p.size} predicted")
    if y.size == 0:
        raise ValueError("metrics need at least one sample")
    return y, p


def mae(actual, predicted):
    y, p = _pair(actual, predicted)
    return float(np.mean(np.abs(y - p)))


def r2(actual, predicted):
    """Coefficient of determination; ``nan`` when ``actual`` is constant."""
    y, p = _pair(actual, predicted)
    if y.size < 2:
        raise ValueError("r2 needs at least two samples")
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0.0:
        return math.nan
    return 1.0 - float(((y - p) ** 2).sum()) / sst


def improvement(base_mae, model_mae):
    """Fractional MAE reduction relative to the baseline."""
    return (base_mae - model_mae) / base_mae


@dataclass(frozen=True, eq=False)
class PredictionTrace:
    """Actual and predicted target per test sample, in original units."""

    well_codes: np.ndarray
    target_dates: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray

    def __len__(self):
        return len(self.actual)

    def __eq__(self, other):
        return (
            isinstance(other, PredictionTrace)
            and np.array_equal(self.well_codes, other.well_codes)
            and np.array_equal(self.target_dates, other.target_dates)
            and np.array_equal(self.actual, other.actual)
            and np.array_equal(self.predicted, other.predicted)
        )

    __hash__ = None

    def wells(self):
        return list(dict.fromkeys(self.well_codes.tolist()))

    def write_csv(self, stream: IO[str]):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["well", "date", "actual", "predicted"])
        for w, d, a, p in zip(self.well_codes, self.target_dates, self.actual, self.predicted):
            writer.writerow([w, str(d), repr(float(a)), repr(float(p))])

    @classmethod
    def read_csv(cls, stream: IO[str]):
        reader = csv.reader(stream)
        next(reader)
        rows = [r for r in reader if r]
        return cls(
            np.array([r[0] for r in rows], dtype=str),
            np.array([r[1] for r in rows], dtype="datetime64[D]"),
            np.array([float(r[2]) for r in rows]),
            np.array([float(r[3]) for r in rows]),
        )


@dataclass(frozen=True)
class MetricRow:
    mae: float
    r2: float
    n: int
    abs_error_sum: float


@dataclass
class MetricsReport:
    """Per-well and global scores for one model."""

    model: str
    rows: dict = field(default_factory=dict)
    n_params: int | None = None
    flops: int | None = None

    @property
    def global_row(self) -> MetricRow:
        return self.rows[GLOBAL]

    def wells(self):
        return [k for k in self.rows if k != GLOBAL]

    def to_dict(self):
        return {
            "model": self.model,
            "n_params": self.n_params,
            "flops": self.flops,
            "rows": {k: vars(v) for k, v in self.rows.items()},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["model"], {k: MetricRow(**v) for k, v in d["rows"].items()}, d.get("n_params"), d.get("flops"))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def report_from_trace(trace: PredictionTrace, model_name, n_params=None, flops=None, wells: Sequence[str] | None = None) -> MetricsReport:
    """Score a trace. Expected ``wells`` without samples are omitted with a warning."""
    rows = {}
    present = trace.wells()
    for w in wells if wells is not None else present:
        sel = trace.well_codes == w
        if not sel.any():
            warnings.warn(f"well {w} has no test samples; row omitted", stacklevel=2)
            continue
        a, p = trace.actual[sel], trace.predicted[sel]
        rows[w] = MetricRow(mae(a, p), r2(a, p) if sel.sum() > 1 else math.nan, int(sel.sum()), float(np.abs(a - p).sum()))
    rows[GLOBAL] = MetricRow(
        mae(trace.actual, trace.predicted),
        r2(trace.actual, trace.predicted) if len(trace) > 1 else math.nan,
        len(trace),
        float(np.abs(trace.actual - trace.predicted).sum()),
    )
    return MetricsReport(model_name, rows, n_params, flops)


def predict_trace(model, test: SampleSet, scalers: Mapping[str, ScalerParams] | ScalerParams) -> PredictionTrace:
    """Run ``model`` on the test windows and map targets and predictions to original units."""
    pred_scaled = np.asarray(model.predict(test.windows), dtype=np.float64)
    target = test.features.target
    actual = np.empty(len(test))
    predicted = np.empty(len(test))
    for w in test.wells():
        sel = test.well_codes == w
        params = scalers if isinstance(scalers, ScalerParams) else scalers[w]
        actual[sel] = invert_scaler(test.targets[sel], params, target)
        predicted[sel] = invert_scaler(pred_scaled[sel], params, target)
    if not (np.isfinite(actual).all() and np.isfinite(predicted).all()):
        raise ValueError("non-finite predictions")
    return PredictionTrace(test.well_codes, test.target_dates, actual, predicted)


def evaluate(model, test: SampleSet, scalers, model_name="model", n_params=None, flops=None, wells=None):
    """Score ``model`` per well and globally; returns ``(MetricsReport, PredictionTrace)``."""
    trace = predict_trace(model, test, scalers)
    return report_from_trace(trace, model_name, n_params, flops, wells), trace


def comparison_table(reports: Sequence[MetricsReport], stream: IO[str], baseline: str | None = None, wells=None, delimiter=","):
    """Write one MAE row and one R2 row per model with wells as columns.

    The last column is the MAE improvement over ``baseline`` in percent.
    """
    reports = list(reports)
    wells = list(wells or dict.fromkeys(w for r in reports for w in r.wells()))
    base = next((r for r in reports if r.model == baseline), None)
    writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["model", "metric", *wells, GLOBAL, "flops", "params", "improvement_pct"])
    for rep in reports:
        if base is None:
            imp = ""
        elif rep is base:
            imp = "baseline"
        else:
            imp = f"{100 * improvement(base.global_row.mae, rep.global_row.mae):+.2f}"
        for metric in ("mae", "r2"):
            cells = []
            for w in wells + [GLOBAL]:
                row = rep.rows.get(w)
                cells.append("" if row is None else f"{getattr(row, metric):.6g}")
            flops = "" if rep.flops is None else str(rep.flops)
            params = "" if rep.n_params is None else str(rep.n_params)
            writer.writerow([rep.model, metric, *cells, flops, params, imp])
