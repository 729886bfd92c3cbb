"""Imputation, scaling, feature selection, windowing and train/test curation.

The pipeline runs per well: window positions depend only on calendar dates,
so the chronological split boundary is known before any value is touched.
Medians and scaler statistics are then fitted on the rows the training
windows cover, applied to the whole well, and the scaled series is cut into
stride-1 windows predicting the next day's oil volume.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import AlignmentError, DataError, FeatureError, FitError, ImputationError, SplitError
from .ingest import CorrMatrix, SummaryStats, WellSeries, correlation_matrix, summarize, well_summary

log = logging.getLogger(__name__)

TARGET = "O"
#: the twelve numeric attributes read by both architectures (WI is injector-only)
TABLE_FEATURES = ("OSH", "ADP", "ADT", "ADPT", "AAP", "ACP", "AWP", "AWT", "DPC", "O", "W", "G")

CURATED_FORMAT = "volvecast-curated v1"


# --------------------------------------------------------------------------
# feature selection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureSpec:
    inputs: tuple
    target: str = TARGET
    exclusions: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if len(set(self.inputs)) != len(self.inputs):
            raise FeatureError(f"duplicate input features in {self.inputs}")

    @property
    def width(self):
        return len(self.inputs)

    @property
    def scaled(self):
        """Attributes the scaler must cover: inputs plus the target."""
        return self.inputs if self.target in self.inputs else self.inputs + (self.target,)

    def to_dict(self):
        return {"inputs": list(self.inputs), "target": self.target, "exclusions": dict(self.exclusions)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["inputs"]), d["target"], dict(d.get("exclusions", {})))


@dataclass(frozen=True)
class FeaturePolicy:
    """How to pick inputs from the candidate attributes.

    ``threshold`` enables correlation pruning: while some pair of remaining
    candidates has ``|r| >= threshold``, the non-target attribute involved
    in the most such pairs is dropped. ``autoregressive=False`` removes the
    target from the inputs.
    """

    name: str
    threshold: float | None = None
    exclude: tuple = ()
    autoregressive: bool = True
    candidates: tuple = TABLE_FEATURES


POLICIES = {
    "table": FeaturePolicy("table"),
    "strict": FeaturePolicy("strict", threshold=0.95),
}


def select_features(corr: CorrMatrix | None, policy="table", target=TARGET) -> FeatureSpec:
    if isinstance(policy, str):
        try:
            policy = POLICIES[policy]
        except KeyError:
            raise FeatureError(f"unknown feature policy {policy!r}") from None
    if target in policy.exclude:
        raise FeatureError(f"policy {policy.name!r} excludes the target {target!r}")
    remaining = [a for a in policy.candidates if a not in policy.exclude]
    exclusions = {a: "excluded by policy" for a in policy.exclude if a in policy.candidates}

    if policy.threshold is not None:
        if corr is None:
            raise FeatureError(f"policy {policy.name!r} needs a correlation matrix")
        missing = [a for a in remaining if a not in corr.attributes]
        if missing:
            raise FeatureError(f"correlation matrix lacks {missing}")
        while True:
            partners = {}
            for a in remaining:
                if a == target:
                    continue
                hits = []
                for b in remaining:
                    if b == a:
                        continue
                    r = corr[a, b]
                    if not math.isnan(r) and abs(r) >= policy.threshold:
                        hits.append((abs(r), b))
                if hits:
                    partners[a] = hits
            if not partners:
                break
            order = {a: i for i, a in enumerate(remaining)}
            # most high-correlation partners first, then strongest coefficient, then later position
            drop = max(partners, key=lambda a: (len(partners[a]), max(partners[a])[0], order[a]))
            r, b = max(partners[drop])
            exclusions[drop] = f"|r|={r:.4f} with {b} (threshold {policy.threshold})"
            remaining.remove(drop)

    if target not in remaining and policy.autoregressive:
        raise FeatureError(f"target {target!r} is not among the candidate attributes")
    if not policy.autoregressive and target in remaining:
        remaining.remove(target)
        exclusions[target] = "target removed from inputs (non-autoregressive)"
    return FeatureSpec(tuple(remaining), target, exclusions)


# --------------------------------------------------------------------------
# imputation and scaling
# --------------------------------------------------------------------------


def impute_median(series: WellSeries, stats: SummaryStats, attributes=None) -> WellSeries:
    """Replace missing cells of ``attributes`` with the medians in ``stats``.

    ``stats`` should come from the training portion of the data.
    """
    attributes = tuple(attributes or stats.by_attribute)
    values = series.values.copy()
    for a in attributes:
        j = series.index(a)
        col = values[:, j]
        holes = np.isnan(col)
        if not holes.any():
            continue
        s = stats[a]
        if s.absent:
            raise ImputationError(a)
        col[holes] = s.median
    return series.with_values(values)


@dataclass(frozen=True, eq=False)
class ScalerParams:
    features: tuple
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=np.float64))
        if np.any(~(self.sigma > 0)):
            bad = self.features[int(np.argmax(~(self.sigma > 0)))]
            raise FitError(bad)

    def __eq__(self, other):
        if not isinstance(other, ScalerParams):
            return NotImplemented
        return self.features == other.features and np.array_equal(self.mu, other.mu) and np.array_equal(self.sigma, other.sigma)

    __hash__ = None

    def _cols(self, attributes):
        try:
            return [self.features.index(a) for a in attributes]
        except ValueError:
            unknown = [a for a in attributes if a not in self.features]
            raise AlignmentError(f"scaler was not fitted on {unknown}") from None

    def of(self, attribute):
        j = self._cols([attribute])[0]
        return float(self.mu[j]), float(self.sigma[j])

    def to_dict(self):
        return {"features": list(self.features), "mu": self.mu.tolist(), "sigma": self.sigma.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["features"]), d["mu"], d["sigma"])


def _training_matrix(records, attributes):
    if isinstance(records, WellSeries):
        return records.values[:, [records.index(a) for a in attributes]]
    if isinstance(records, np.ndarray):
        return np.asarray(records, dtype=np.float64)
    return np.vstack([_training_matrix(r, attributes) for r in records])


def fit_scaler(train_records, features: FeatureSpec | Sequence[str]) -> ScalerParams:
    """Fit per-attribute mean and population standard deviation.

    ``train_records`` is a WellSeries, a list of them (pooled), or a matrix
    whose columns follow ``features``.
    """
    attributes = features.scaled if isinstance(features, FeatureSpec) else tuple(features)
    X = _training_matrix(train_records, attributes)
    if X.shape[1] != len(attributes):
        raise AlignmentError(f"expected {len(attributes)} columns, got {X.shape[1]}")
    if np.isnan(X).any():
        raise FitError(attributes[int(np.argmax(np.isnan(X).any(axis=0)))], "training rows contain missing values; impute first")
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    for a, s in zip(attributes, sigma):
        if not s > 0:
            raise FitError(a)
    return ScalerParams(attributes, mu, sigma)


def apply_scaler(records, params: ScalerParams, attributes=None):
    """Standardise ``records``.

    A WellSeries comes back with every fitted attribute scaled (others
    untouched). An array is scaled column-wise, its last axis aligned with
    ``attributes`` (default: all fitted attributes).
    """
    if isinstance(records, WellSeries):
        values = records.values.copy()
        for a, m, s in zip(params.features, params.mu, params.sigma):
            j = records.index(a)
            values[:, j] = (values[:, j] - m) / s
        return records.with_values(values)
    attributes = tuple(attributes or params.features)
    cols = params._cols(attributes)
    x = np.asarray(records, dtype=np.float64)
    if x.shape[-1] != len(cols):
        raise AlignmentError(f"last axis has {x.shape[-1]} columns, expected {len(cols)}")
    return (x - params.mu[cols]) / params.sigma[cols]


def invert_scaler(values, params: ScalerParams, attribute=None):
    """Map scaled values back to original units.

    With ``attribute`` the input is a plain array of that attribute's values;
    otherwise its last axis must cover every fitted attribute.
    """
    x = np.asarray(values, dtype=np.float64)
    if attribute is not None:
        mu, sigma = params.of(attribute)
        return x * sigma + mu
    if x.shape[-1] != len(params.features):
        raise AlignmentError(f"last axis has {x.shape[-1]} columns, expected {len(params.features)}")
    return x * params.sigma + params.mu


# --------------------------------------------------------------------------
# windows
# --------------------------------------------------------------------------


class SequenceSample(NamedTuple):
    window: np.ndarray
    target: float
    well_code: str
    target_date: np.datetime64


@dataclass(frozen=True, eq=False)
class SampleSet:
    """A batch of windows stored as arrays.

    ``windows`` is ``(n, seq_len, n_features)``; ``targets``, ``well_codes``
    and ``target_dates`` are length ``n``.
    """

    windows: np.ndarray
    targets: np.ndarray
    well_codes: np.ndarray
    target_dates: np.ndarray
    features: FeatureSpec
    seq_len: int

    def __post_init__(self):
        n = len(self.targets)
        shape = (n, self.seq_len, self.features.width)
        windows = np.asarray(self.windows, dtype=np.float64).reshape(shape)
        object.__setattr__(self, "windows", windows)
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=np.float64))
        object.__setattr__(self, "well_codes", np.asarray(self.well_codes, dtype=str).reshape(n))
        object.__setattr__(self, "target_dates", np.asarray(self.target_dates, dtype="datetime64[D]").reshape(n))

    def __len__(self):
        return len(self.targets)

    def __getitem__(self, i):
        return SequenceSample(self.windows[i], float(self.targets[i]), str(self.well_codes[i]), self.target_dates[i])

    @property
    def start_dates(self):
        return self.target_dates - np.timedelta64(self.seq_len, "D")

    def window_dates(self, i):
        return self.start_dates[i] + np.arange(self.seq_len).astype("timedelta64[D]")

    def take(self, idx):
        return SampleSet(self.windows[idx], self.targets[idx], self.well_codes[idx], self.target_dates[idx], self.features, self.seq_len)

    def wells(self):
        return list(dict.fromkeys(self.well_codes.tolist()))

    def for_well(self, well_code):
        return self.take(self.well_codes == well_code)

    @classmethod
    def empty(cls, features, seq_len):
        return cls(np.zeros((0, seq_len, features.width)), np.zeros(0), np.zeros(0, dtype=str), np.zeros(0, dtype="datetime64[D]"), features, seq_len)

    @classmethod
    def concat(cls, parts: Sequence["SampleSet"]):
        parts = list(parts)
        if not parts:
            raise ValueError("nothing to concatenate")
        first = parts[0]
        for p in parts[1:]:
            if p.features.inputs != first.features.inputs or p.features.target != first.features.target:
                raise FeatureError("sample sets use different feature lists")
            if p.seq_len != first.seq_len:
                raise FeatureError("sample sets use different sequence lengths")
        return cls(
            np.concatenate([p.windows for p in parts]),
            np.concatenate([p.targets for p in parts]),
            np.concatenate([p.well_codes for p in parts]),
            np.concatenate([p.target_dates for p in parts]),
            first.features,
            first.seq_len,
        )


def window_starts(dates, seq_len):
    """Start indices of gap-free windows of ``seq_len`` days plus a next-day target."""
    if seq_len < 1:
        raise ValueError("seq_len must be >= 1")
    days = np.asarray(dates, dtype="datetime64[D]").astype(np.int64)
    n = len(days) - seq_len
    if n <= 0:
        return np.zeros(0, dtype=np.int64)
    span = days[seq_len:] - days[:n]
    return np.flatnonzero(span == seq_len)


def make_windows(series: WellSeries, seq_len: int, features: FeatureSpec) -> SampleSet:
    starts = window_starts(series.dates, seq_len)
    if len(starts) == 0:
        warnings.warn(f"{series.well_code}: fewer than seq_len + 1 = {seq_len + 1} consecutive days; no windows", stacklevel=2)
        return SampleSet.empty(features, seq_len)
    cols = [series.index(a) for a in features.inputs]
    X = series.values[:, cols]
    y = series.column(features.target)
    idx = starts[:, None] + np.arange(seq_len)[None, :]
    windows = X[idx]
    targets = y[starts + seq_len]
    if not (np.isfinite(windows).all() and np.isfinite(targets).all()):
        raise DataError(f"{series.well_code}: windows contain missing values; impute before windowing")
    return SampleSet(
        windows,
        targets,
        np.full(len(starts), series.well_code),
        series.dates[starts + seq_len],
        features,
        seq_len,
    )


# --------------------------------------------------------------------------
# splits
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WellSplit:
    well_code: str
    n_samples: int
    n_train: int
    n_test: int
    n_purged: int
    boundary_date: str

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class SplitManifest:
    wells: dict

    @property
    def train_total(self):
        return sum(w.n_train for w in self.wells.values())

    @property
    def test_total(self):
        return sum(w.n_test for w in self.wells.values())

    def to_dict(self):
        return {
            "wells": {k: v.to_dict() for k, v in self.wells.items()},
            "train_total": self.train_total,
            "test_total": self.test_total,
        }

    @classmethod
    def from_dict(cls, d):
        return cls({k: WellSplit(**v) for k, v in d["wells"].items()})


def n_train_for(n, ratio):
    return math.floor(round(ratio * n, 9))


def chrono_split(samples: SampleSet, ratio=0.70, purge=True):
    """Chronological split of one well's date-ordered samples.

    The first ``floor(ratio * n)`` samples train; the boundary is the last
    training target date. With ``purge`` any later sample whose window starts
    on or before the boundary is dropped, so no test window overlaps the
    training period.
    """
    n = len(samples)
    well = samples.well_codes[0] if n else "?"
    if n < 2:
        raise SplitError(f"{well}: need at least 2 samples to split, got {n}")
    if len(set(samples.well_codes.tolist())) != 1:
        raise SplitError("chrono_split expects samples from a single well")
    if np.any(np.diff(samples.target_dates.astype(np.int64)) <= 0):
        raise SplitError(f"{well}: samples are not date-ordered")
    k = n_train_for(n, ratio)
    if not 1 <= k < n:
        raise SplitError(f"{well}: ratio {ratio} leaves an empty side for n={n}")
    boundary = samples.target_dates[k - 1]
    rest = np.arange(k, n)
    if purge:
        rest = rest[samples.start_dates[rest] > boundary]
    train = samples.take(np.arange(k))
    test = samples.take(rest)
    info = WellSplit(str(well), n, k, len(rest), n - k - len(rest), str(boundary))
    return train, test, info


def split_wells(per_well: Mapping[str, SampleSet], ratio=0.70, purge=True):
    train, test, infos = {}, {}, {}
    for well, samples in per_well.items():
        train[well], test[well], infos[well] = chrono_split(samples, ratio, purge)
    return train, test, SplitManifest(infos)


def build_global_sets(train: Mapping[str, SampleSet], test: Mapping[str, SampleSet], seed=0):
    """Amalgamate per-well splits.

    The training set is shuffled with ``seed``; the test set stays ordered by
    well then date so traces can be plotted directly.
    """
    wells = sorted(train)
    global_train = SampleSet.concat([train[w] for w in wells])
    global_test = SampleSet.concat([test[w] for w in sorted(test)])
    if global_train.features.inputs != global_test.features.inputs:
        raise FeatureError("train and test sets use different feature lists")
    order = np.random.default_rng(seed).permutation(len(global_train))
    return global_train.take(order), global_test


# --------------------------------------------------------------------------
# end-to-end curation
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CuratedDataset:
    features: FeatureSpec
    seq_len: int
    ratio: float
    fit_scope: str
    seed: int
    scalers: dict
    medians: dict
    manifest: SplitManifest
    train: SampleSet
    test: SampleSet

    def scaler_for(self, well_code):
        return self.scalers[well_code]

    def header(self):
        return {
            "format": CURATED_FORMAT,
            "features": self.features.to_dict(),
            "seq_len": self.seq_len,
            "ratio": self.ratio,
            "fit_scope": self.fit_scope,
            "seed": self.seed,
            "scalers": {w: p.to_dict() for w, p in self.scalers.items()},
            "medians": self.medians,
            "manifest": self.manifest.to_dict(),
            "layout": {
                "files": ["train.npz", "test.npz"],
                "windows": "float64 [n, seq_len, n_features], features in header order; scaled units",
                "targets": "float64 [n]; scaled next-day target",
                "well_codes": "unicode [n]",
                "target_dates": "datetime64[D] [n]",
            },
        }


FIT_SCOPES = ("per_well", "global")


def curate(
    series: Sequence[WellSeries],
    seq_len=5,
    policy="table",
    ratio=0.70,
    fit_scope="per_well",
    seed=0,
    purge=True,
) -> CuratedDataset:
    """Build the global training and test sets from raw well series.

    Injector wells are skipped. Wells too short to yield two windows are
    skipped with a warning.
    """
    if fit_scope not in FIT_SCOPES:
        raise ValueError(f"fit_scope must be one of {FIT_SCOPES}")
    producers = [s for s in series if s.is_producer]
    if not producers:
        raise SplitError("no producer wells in the input")
    pol = POLICIES[policy] if isinstance(policy, str) else policy
    corr = correlation_matrix(producers, pol.candidates) if pol.threshold is not None else None
    features = select_features(corr, pol)
    attrs = features.scaled

    # training rows per well: everything up to the last training target date
    train_rows = {}
    for s in producers:
        starts = window_starts(s.dates, seq_len)
        n = len(starts)
        if n < 2:
            warnings.warn(f"{s.well_code}: only {n} window(s) at seq_len={seq_len}; well skipped", stacklevel=2)
            continue
        k = n_train_for(n, ratio)
        boundary = s.dates[starts[k - 1] + seq_len]
        train_rows[s.well_code] = s.dates <= boundary
    usable = [s for s in producers if s.well_code in train_rows]
    if not usable:
        raise SplitError(f"no well has enough consecutive days for seq_len={seq_len}")

    if fit_scope == "global":
        pooled = np.vstack([s.values[train_rows[s.well_code]][:, [s.index(a) for a in attrs]] for s in usable])
        shared_stats = summarize(pooled, attrs)
    imputed = {}
    medians = {}
    for s in usable:
        stats = shared_stats if fit_scope == "global" else well_summary(s.subset(train_rows[s.well_code]), attrs)
        imputed[s.well_code] = impute_median(s, stats, attrs)
        medians[s.well_code] = {a: stats[a].median for a in attrs}
    if fit_scope == "global":
        shared = fit_scaler([imputed[s.well_code].subset(train_rows[s.well_code]) for s in usable], features)
        scalers = {s.well_code: shared for s in usable}
    else:
        scalers = {s.well_code: fit_scaler(imputed[s.well_code].subset(train_rows[s.well_code]), features) for s in usable}

    per_well = {w: make_windows(apply_scaler(imputed[w], scalers[w]), seq_len, features) for w in imputed}
    train, test, manifest = split_wells(per_well, ratio, purge)
    global_train, global_test = build_global_sets(train, test, seed)
    log.info("curated %d train / %d test samples from %d wells", len(global_train), len(global_test), len(usable))
    return CuratedDataset(features, seq_len, ratio, fit_scope, seed, scalers, medians, manifest, global_train, global_test)


def _save_samples(path, samples: SampleSet):
    np.savez(
        path,
        windows=samples.windows,
        targets=samples.targets,
        well_codes=samples.well_codes,
        target_dates=samples.target_dates,
    )


def _load_samples(path, features, seq_len):
    with np.load(path, allow_pickle=False) as z:
        return SampleSet(z["windows"], z["targets"], z["well_codes"], z["target_dates"], features, seq_len)


def save_curated(dataset: CuratedDataset, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "header.json").write_text(json.dumps(dataset.header(), indent=2))
    _save_samples(directory / "train.npz", dataset.train)
    _save_samples(directory / "test.npz", dataset.test)


def load_curated(directory) -> CuratedDataset:
    directory = Path(directory)
    header = json.loads((directory / "header.json").read_text())
    if header.get("format") != CURATED_FORMAT:
        raise AlignmentError(f"{directory}: unsupported curated dataset format {header.get('format')!r}")
    features = FeatureSpec.from_dict(header["features"])
    seq_len = header["seq_len"]
    return CuratedDataset(
        features,
        seq_len,
        header["ratio"],
        header["fit_scope"],
        header["seed"],
        {w: ScalerParams.from_dict(p) for w, p in header["scalers"].items()},
        header["medians"],
        SplitManifest.from_dict(header["manifest"]),
        _load_samples(directory / "train.npz", features, seq_len),
        _load_samples(directory / "test.npz", features, seq_len),
    )
