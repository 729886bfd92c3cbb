"""Next-day oil-production forecasting with from-scratch numpy networks."""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, NumericError, VolvecastError
from .evaluation import MetricsReport, PredictionTrace, evaluate, mae, r2
from .ingest import WellSeries, correlation_matrix, missing_audit, parse_production_csv, well_summary
from .models import TrainConfig, build_model, fit_linear_regression, train
from .preprocess import CuratedDataset, curate, select_features

__all__ = [
    "ConfigError",
    "CuratedDataset",
    "DataError",
    "MetricsReport",
    "NumericError",
    "PredictionTrace",
    "TrainConfig",
    "VolvecastError",
    "WellSeries",
    "build_model",
    "correlation_matrix",
    "curate",
    "evaluate",
    "fit_linear_regression",
    "mae",
    "missing_audit",
    "parse_production_csv",
    "r2",
    "select_features",
    "train",
    "well_summary",
]
