"""Parsing, validation and exploratory statistics for daily well production data.

Input files follow the column layout of the public Volve production export
(one row per well and day). Parsing returns immutable :class:`WellSeries`
objects holding a ``(n_days, n_attributes)`` float matrix where ``NaN`` marks
a missing cell.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import IO, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import IntegrityError, SchemaError

ATTRIBUTES = ("OSH", "ADP", "ADT", "ADPT", "AAP", "ACP", "AWP", "AWT", "DPC", "O", "W", "G", "WI")

ATTRIBUTE_NAMES = {
    "OSH": "On stream hours",
    "ADP": "Average downhole pressure",
    "ADT": "Average downhole temperature",
    "ADPT": "Average differential pressure of tubing",
    "AAP": "Average annular pressure",
    "ACP": "Average choke size percentage",
    "AWP": "Average wellhead pressure",
    "AWT": "Average wellhead temperature",
    "DPC": "Differential pressure of choke size",
    "O": "Oil volume",
    "W": "Water volume",
    "G": "Gas volume",
    "WI": "Water volume injected",
}

#: canonical role -> column name in the Volve export
VOLVE_SCHEMA = {
    "DATE": "DATEPRD",
    "WELL": "WELL_BORE_CODE",
    "FLOW_KIND": "FLOW_KIND",
    "WELL_TYPE": "WELL_TYPE",
    "OSH": "ON_STREAM_HRS",
    "ADP": "AVG_DOWNHOLE_PRESSURE",
    "ADT": "AVG_DOWNHOLE_TEMPERATURE",
    "ADPT": "AVG_DP_TUBING",
    "AAP": "AVG_ANNULUS_PRESS",
    "ACP": "AVG_CHOKE_SIZE_P",
    "AWP": "AVG_WHP_P",
    "AWT": "AVG_WHT_P",
    "DPC": "DP_CHOKE_SIZE",
    "O": "BORE_OIL_VOL",
    "W": "BORE_WAT_VOL",
    "G": "BORE_GAS_VOL",
    "WI": "BORE_WI_VOL",
}

NON_NEGATIVE = frozenset({"OSH", "O", "W", "G", "WI"})
MISSING_TOKENS = frozenset({"", "NULL", "NA", "N/A", "NAN", "NONE"})
DATE_FORMATS = ("%d-%b-%y", "%d-%b-%Y", "%Y-%m-%d", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%m/%d/%Y")

CANONICAL_MAGIC = "# volvecast-canonical v1"
CANONICAL_MISSING = "NA"


class WellType(str, enum.Enum):
    PRODUCER = "producer"
    INJECTOR = "injector"


class DailyRecord(NamedTuple):
    date: date
    values: dict


def _readonly(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WellSeries:
    """One well's daily measurements.

    ``values[i, j]`` is attribute ``attributes[j]`` on ``dates[i]``; ``NaN``
    marks a missing cell. Arrays are copied and frozen on construction.
    """

    well_code: str
    well_type: WellType
    dates: np.ndarray
    values: np.ndarray
    attributes: tuple = ATTRIBUTES

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape != (len(dates), len(self.attributes)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"({len(dates)}, {len(self.attributes)})"
            )
        if len(dates) > 1 and not np.all(np.diff(dates) > np.timedelta64(0, "D")):
            raise IntegrityError(f"{self.well_code}: dates must be strictly increasing")
        if np.isinf(values).any():
            raise ValueError("infinite values must be stored as missing")
        object.__setattr__(self, "dates", _readonly(dates))
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "well_type", WellType(self.well_type))

    def __len__(self):
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, WellSeries):
            return NotImplemented
        return (
            self.well_code == other.well_code
            and self.well_type == other.well_type
            and self.attributes == other.attributes
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    __hash__ = None

    @property
    def is_producer(self):
        return self.well_type is WellType.PRODUCER

    @property
    def missing_mask(self):
        return np.isnan(self.values)

    def index(self, attribute):
        try:
            return self.attributes.index(attribute)
        except ValueError:
            raise KeyError(f"{self.well_code} has no attribute {attribute!r}") from None

    def column(self, attribute):
        return self.values[:, self.index(attribute)]

    def subset(self, rows):
        """Series restricted to ``rows`` (slice, index array or boolean mask)."""
        return WellSeries(self.well_code, self.well_type, self.dates[rows], self.values[rows], self.attributes)

    def with_values(self, values):
        return WellSeries(self.well_code, self.well_type, self.dates, values, self.attributes)

    @property
    def records(self):
        out = []
        for d, row in zip(self.dates, self.values):
            vals = {a: (None if math.isnan(v) else float(v)) for a, v in zip(self.attributes, row)}
            out.append(DailyRecord(d.item(), vals))
        return out


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def parse_date(text):
    text = text.strip()
    for fmt in DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"unrecognised date {text!r}")


def parse_value(text, attribute=None, decimal_comma=False):
    """Parse one numeric cell. Unparseable, non-finite or sentinel cells give ``nan``."""
    token = text.strip()
    if token.upper() in MISSING_TOKENS:
        return math.nan
    if decimal_comma:
        token = token.replace(",", ".")
    try:
        value = float(token)
    except ValueError:
        return math.nan
    if not math.isfinite(value):
        return math.nan
    if attribute in NON_NEGATIVE and value < 0:
        return math.nan
    return value


def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8-sig")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8-sig")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8-sig")
    return data.lstrip("﻿")


def detect_delimiter(header_line):
    return ";" if header_line.count(";") > header_line.count(",") else ","


def _is_injector(flow_kind, well_type):
    return flow_kind.strip().lower().startswith("inj") or well_type.strip().upper() in {"WI", "INJ", "INJECTOR"}


def parse_production_csv(source, schema: Mapping[str, str] = VOLVE_SCHEMA) -> list[WellSeries]:
    """Parse a production export into one :class:`WellSeries` per well.

    ``source`` may be a path, raw bytes, or an open binary/text stream.
    ``schema`` maps canonical roles (``DATE``, ``WELL``, ``FLOW_KIND``,
    ``WELL_TYPE`` and every attribute code) to column names. Comma and
    semicolon delimiters are detected from the header. A well is an injector
    as soon as any of its rows reports injection flow or a water-injection
    well type.

    Raises
    ------
    SchemaError
        A required column is absent from the header.
    IntegrityError
        The same (well, date) pair occurs more than once, or a date is
        unparseable.
    """
    text = _read_text(source)
    lines = text.splitlines()
    if not lines:
        raise SchemaError(schema["DATE"], "empty input: no header row")
    delimiter = detect_delimiter(lines[0])
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = [h.strip() for h in next(reader)]
    position = {name: i for i, name in enumerate(header)}
    roles = ("DATE", "WELL", "FLOW_KIND", "WELL_TYPE") + ATTRIBUTES
    cols = {}
    for role in roles:
        name = schema[role]
        if name not in position:
            raise SchemaError(name)
        cols[role] = position[name]

    decimal_comma = delimiter == ";"
    rows_by_well: dict[str, list] = {}
    injector: dict[str, bool] = {}
    bad_dates = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        row = row + [""] * (len(header) - len(row))
        well = row[cols["WELL"]].strip()
        try:
            day = parse_date(row[cols["DATE"]])
        except ValueError:
            bad_dates.append((lineno, row[cols["DATE"]]))
            continue
        values = [parse_value(row[cols[a]], a, decimal_comma) for a in ATTRIBUTES]
        rows_by_well.setdefault(well, []).append((day, values))
        injector[well] = injector.get(well, False) or _is_injector(row[cols["FLOW_KIND"]], row[cols["WELL_TYPE"]])
    if bad_dates:
        raise IntegrityError(f"{len(bad_dates)} row(s) with unparseable dates", bad_dates)

    duplicates = []
    out = []
    for well, rows in rows_by_well.items():
        rows.sort(key=lambda r: r[0])
        for prev, cur in zip(rows, rows[1:]):
            if prev[0] == cur[0]:
                duplicates.append((well, cur[0].isoformat()))
        if duplicates:
            continue
        dates = np.array([r[0] for r in rows], dtype="datetime64[D]")
        values = np.array([r[1] for r in rows], dtype=np.float64).reshape(len(rows), len(ATTRIBUTES))
        wtype = WellType.INJECTOR if injector[well] else WellType.PRODUCER
        out.append(WellSeries(well, wtype, dates, values))
    if duplicates:
        raise IntegrityError(f"{len(duplicates)} duplicate (well, date) row(s)", duplicates)
    out.sort(key=lambda s: s.well_code)
    return out


def _fmt(value, missing=""):
    return missing if math.isnan(value) else repr(float(value))


def write_production_csv(series: Iterable[WellSeries], stream: IO[str], schema: Mapping[str, str] = VOLVE_SCHEMA):
    """Write series back in the export layout; :func:`parse_production_csv` inverts it exactly."""
    writer = csv.writer(stream, lineterminator="\n")
    roles = ("DATE", "WELL", "FLOW_KIND", "WELL_TYPE") + ATTRIBUTES
    writer.writerow([schema[r] for r in roles])
    for s in series:
        inj = s.well_type is WellType.INJECTOR
        flow, wtype = ("injection", "WI") if inj else ("production", "OP")
        cols = [s.index(a) for a in ATTRIBUTES]
        for d, row in zip(s.dates, s.values):
            writer.writerow([str(d), s.well_code, flow, wtype] + [_fmt(row[j]) for j in cols])


def write_canonical(series: Iterable[WellSeries], stream: IO[str]):
    """Canonical dataset: magic line, header, one record per line, ``NA`` for missing."""
    stream.write(CANONICAL_MAGIC + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["WELL", "WELL_TYPE", "DATE", *ATTRIBUTES])
    for s in series:
        cols = [s.index(a) for a in ATTRIBUTES]
        for d, row in zip(s.dates, s.values):
            writer.writerow([s.well_code, s.well_type.value, str(d)] + [_fmt(row[j], CANONICAL_MISSING) for j in cols])


def read_canonical(source) -> list[WellSeries]:
    text = _read_text(source)
    first, _, rest = text.partition("\n")
    if first.strip() != CANONICAL_MAGIC:
        raise SchemaError("WELL", "not a canonical dataset file (bad magic line)")
    reader = csv.reader(io.StringIO(rest))
    header = next(reader)
    attrs = tuple(header[3:])
    groups: dict[tuple, list] = {}
    for row in reader:
        if not row:
            continue
        key = (row[0], row[1])
        vals = [math.nan if c == CANONICAL_MISSING else float(c) for c in row[3:]]
        groups.setdefault(key, []).append((row[2], vals))
    out = []
    for (well, wtype), rows in groups.items():
        dates = np.array([r[0] for r in rows], dtype="datetime64[D]")
        values = np.array([r[1] for r in rows], dtype=np.float64).reshape(len(rows), len(attrs))
        out.append(WellSeries(well, WellType(wtype), dates, values, attrs))
    out.sort(key=lambda s: s.well_code)
    return out


# --------------------------------------------------------------------------
# statistics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AttributeStats:
    count: int
    mean: float
    std: float
    min: float
    q1: float
    median: float
    q3: float
    max: float

    @property
    def absent(self):
        return self.count == 0


_ABSENT = AttributeStats(0, *([math.nan] * 7))


@dataclass(frozen=True)
class SummaryStats:
    n_records: int
    by_attribute: dict = field(default_factory=dict)

    def __getitem__(self, attribute) -> AttributeStats:
        return self.by_attribute[attribute]

    def __iter__(self):
        return iter(self.by_attribute)

    def medians(self):
        return {a: s.median for a, s in self.by_attribute.items()}


def summarize(values, attributes: Sequence[str], ddof=0) -> SummaryStats:
    """Column statistics over present (non-NaN) values.

    Quartiles use linear interpolation between closest ranks. ``ddof=0``
    gives the population standard deviation, ``ddof=1`` the sample one.
    """
    values = np.asarray(values, dtype=np.float64)
    by_attr = {}
    for j, attr in enumerate(attributes):
        col = values[:, j]
        col = col[~np.isnan(col)]
        if col.size == 0:
            by_attr[attr] = _ABSENT
            continue
        q = np.percentile(col, [0, 25, 50, 75, 100], method="linear")
        std = float(np.std(col, ddof=ddof)) if col.size > ddof else math.nan
        by_attr[attr] = AttributeStats(int(col.size), float(np.mean(col)), std, *map(float, q))
    return SummaryStats(values.shape[0], by_attr)


def well_summary(series: WellSeries, attributes=None, ddof=0) -> SummaryStats:
    if len(series) == 0:
        raise ValueError(f"{series.well_code}: cannot summarise an empty series")
    attributes = tuple(attributes or series.attributes)
    cols = [series.index(a) for a in attributes]
    return summarize(series.values[:, cols], attributes, ddof=ddof)


class AttributeAudit(NamedTuple):
    missing: int
    present: int


def missing_audit(series: WellSeries) -> dict[str, AttributeAudit]:
    mask = series.missing_mask
    missing = mask.sum(axis=0)
    return {a: AttributeAudit(int(m), int(len(series) - m)) for a, m in zip(series.attributes, missing)}


STATS_ROWS = (
    ("Count", "count"),
    ("Mean", "mean"),
    ("STD", "std"),
    ("Min", "min"),
    ("1st quartile", "q1"),
    ("Median", "median"),
    ("3rd quartile", "q3"),
    ("Max", "max"),
)


def write_stats_report(stats: SummaryStats, stream: IO[str], attributes=None, delimiter=","):
    """Statistics table with attributes as columns and one row per statistic."""
    attributes = list(attributes or stats.by_attribute)
    writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["", *attributes])
    for label, key in STATS_ROWS:
        row = [label]
        for a in attributes:
            s = stats[a]
            if key == "count":
                row.append(str(s.count))
            else:
                row.append("" if s.absent else repr(getattr(s, key)))
        writer.writerow(row)


@dataclass(frozen=True, eq=False)
class CorrMatrix:
    """Pearson coefficients; ``NaN`` where the coefficient is undefined."""

    attributes: tuple
    values: np.ndarray
    n_pairs: np.ndarray

    @property
    def undefined(self):
        return np.isnan(self.values)

    def __getitem__(self, pair):
        a, b = pair
        return float(self.values[self.attributes.index(a), self.attributes.index(b)])


def _pearson(x, y):
    if x.size < 2:
        return math.nan
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        return math.nan
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def correlation_matrix(series_set, attributes=None, complete_case=False, producers_only=True) -> CorrMatrix:
    """Pearson correlation over the merged records of ``series_set``.

    Pairs use every row where both attributes are present (pairwise-complete
    deletion) unless ``complete_case`` restricts all pairs to rows with no
    missing attribute. Entries with fewer than two paired observations or a
    zero-variance side are ``NaN``.
    """
    if isinstance(series_set, WellSeries):
        series_set = [series_set]
    series_set = [s for s in series_set if s.is_producer or not producers_only]
    if not series_set:
        raise ValueError("no series to correlate")
    attributes = tuple(attributes or series_set[0].attributes)
    data = np.vstack([s.values[:, [s.index(a) for a in attributes]] for s in series_set])
    present = ~np.isnan(data)
    if complete_case:
        keep = present.all(axis=1)
        data = data[keep]
        present = present[keep]
    k = len(attributes)
    out = np.full((k, k), np.nan)
    counts = np.zeros((k, k), dtype=np.int64)
    for i in range(k):
        for j in range(i, k):
            both = present[:, i] & present[:, j]
            counts[i, j] = counts[j, i] = int(both.sum())
            r = _pearson(data[both, i], data[both, j])
            if i == j and not math.isnan(r):
                r = 1.0
            out[i, j] = out[j, i] = r
    return CorrMatrix(attributes, _readonly(out), _readonly(counts))


def write_corr_matrix(corr: CorrMatrix, stream: IO[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["", *corr.attributes])
    for a, row in zip(corr.attributes, corr.values):
        writer.writerow([a] + ["" if math.isnan(v) else repr(float(v)) for v in row])
