"""Seeded synthetic production data in the Volve export layout.

Each producer gets a mean-reverting reservoir pressure and a
piecewise-constant choke schedule, so train and test periods share one
distribution. Daily oil is a three-day distributed-lag response to a
logistic function of choke opening times squared pressure and on-stream
hours, plus Gaussian noise scaled to a fraction of the noise-free oil
standard deviation. Gas is a fixed multiple of oil; water follows a slowly
wandering water cut. About ``missing_rate`` of the sensor cells are blanked.
"""

from __future__ import annotations

import csv
import io
from datetime import date, timedelta

import numpy as np

from .ingest import ATTRIBUTES, VOLVE_SCHEMA

GAS_OIL_RATIO = 147.0
LAG_WEIGHTS = (0.5, 0.3, 0.2)
SENSORS = ("ADP", "ADT", "ADPT", "AAP", "ACP", "AWP", "AWT", "DPC")
_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")


def _fmt_date(d: date):
    # locale-independent dd-Mon-yy
    return f"{d.day:02d}-{_MONTHS[d.month - 1]}-{d.year % 100:02d}"


def well_code(i):
    return f"NO 15/9-S-{i + 1} H"


def _ar1(rng, n, phi, sigma):
    # zero-mean stationary AR(1) started from its stationary distribution
    out = np.empty(n)
    x = rng.normal(0, sigma / np.sqrt(1 - phi * phi))
    for k in range(n):
        x = phi * x + rng.normal(0, sigma)
        out[k] = x
    return out


def _choke_schedule(rng, days, p_change=0.15):
    levels = np.empty(days)
    level = rng.uniform(30, 100)
    for t in range(days):
        if rng.random() < p_change:
            level = rng.uniform(15, 100)
        levels[t] = level
    return np.clip(levels + rng.normal(0, 0.5, days), 0, 100)


def _producer(rng, days, noise):
    lag = len(LAG_WEIGHTS)
    n = days + lag
    qmax = rng.uniform(1500, 5000)
    p0 = rng.uniform(250, 320)
    pres = p0 + _ar1(rng, n, 0.98, 1.5)
    choke = _choke_schedule(rng, n)
    osh = np.full(n, 24.0)
    partial = rng.random(n) < 0.03
    osh[partial] = np.round(rng.uniform(6, 23, partial.sum()), 1)

    opening = 1.0 / (1.0 + np.exp(-(choke - 50.0) / 4.0))
    capacity = qmax * opening * (pres / p0) ** 2 * (osh / 24.0)
    clean = sum(w * capacity[lag - k - 1 : n - k - 1] for k, w in enumerate(LAG_WEIGHTS))
    oil = clean + rng.normal(0, noise * clean.std(), days)
    oil = np.round(np.maximum(oil, 0.0), 2)
    sl = slice(lag, n)
    pres, choke, osh = pres[sl], choke[sl], osh[sl]

    water_cut = np.clip(0.3 + _ar1(rng, days, 0.99, 0.005), 0.05, 0.9)
    water = np.round(oil * water_cut / (1 - water_cut), 2)
    gas = np.round(oil * GAS_OIL_RATIO, 3)
    adp = pres - 60 * choke / 100 + rng.normal(0, 1.0, days)
    adt = 60 + 0.18 * adp + rng.normal(0, 0.5, days)
    awp = 0.25 * adp + 8 + rng.normal(0, 1.0, days)
    adpt = adp - awp
    aap = 15.0 + _ar1(rng, days, 0.95, 0.3)
    awt = 40 + 45 * oil / (qmax + 1) + rng.normal(0, 0.5, days)
    dpc = awp * (1 - choke / 100) + rng.normal(0, 0.3, days)
    cols = {
        "OSH": osh, "ADP": adp, "ADT": adt, "ADPT": adpt, "AAP": aap, "ACP": choke,
        "AWP": awp, "AWT": awt, "DPC": dpc, "O": oil, "W": water, "G": gas,
        "WI": np.full(days, np.nan),
    }
    return {a: (v if a in ("O", "W", "G", "OSH", "WI") else np.round(v, 4)) for a, v in cols.items()}


def _injector(rng, days):
    wi = np.round(np.maximum(rng.normal(5000, 800, days), 0), 2)
    adp = np.round(300 + rng.normal(0, 3, days), 4)
    zeros = np.zeros(days)
    nan = np.full(days, np.nan)
    return {
        "OSH": np.full(days, 24.0), "ADP": adp, "ADT": np.round(60 + 0.1 * adp, 4), "ADPT": nan,
        "AAP": nan, "ACP": np.round(np.full(days, 100.0), 4), "AWP": np.round(adp - 180, 4),
        "AWT": nan, "DPC": nan, "O": zeros, "W": zeros, "G": zeros, "WI": wi,
    }


def generate(seed=0, wells=5, days=800, injectors=1, missing_rate=0.03, noise=0.05, start=date(2010, 1, 1)):
    """Return ``[(well_code, is_injector, dates, {attribute: values})]``."""
    if wells < 1 or days < 30:
        raise ValueError("need wells >= 1 and days >= 30")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(wells + injectors):
        inj = i >= wells
        cols = _injector(rng, days) if inj else _producer(rng, days, noise)
        for a in SENSORS:
            holes = rng.random(days) < missing_rate
            cols[a] = np.where(holes, np.nan, cols[a])
        first = start + timedelta(days=int(rng.integers(0, 60)))
        dates = [first + timedelta(days=k) for k in range(days)]
        out.append((well_code(i), inj, dates, cols))
    return out


def generate_csv(seed=0, wells=5, days=800, injectors=1, missing_rate=0.03, noise=0.05) -> str:
    """Synthetic export as CSV text; byte-identical for a given seed."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    roles = ("DATE", "WELL", "FLOW_KIND", "WELL_TYPE") + ATTRIBUTES
    writer.writerow([VOLVE_SCHEMA[r] for r in roles])
    for code, inj, dates, cols in generate(seed, wells, days, injectors, missing_rate, noise):
        flow, wtype = ("injection", "WI") if inj else ("production", "OP")
        for k, d in enumerate(dates):
            cells = []
            for a in ATTRIBUTES:
                v = cols[a][k]
                cells.append("" if np.isnan(v) else repr(float(v)))
            writer.writerow([_fmt_date(d), code, flow, wtype, *cells])
    return buf.getvalue()
