import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volvecast.errors import IntegrityError, SchemaError
from volvecast.ingest import (
    ATTRIBUTES,
    VOLVE_SCHEMA,
    WellSeries,
    WellType,
    correlation_matrix,
    missing_audit,
    parse_date,
    parse_production_csv,
    read_canonical,
    summarize,
    well_summary,
    write_canonical,
    write_production_csv,
    write_stats_report,
)

HEADER = ",".join(
    VOLVE_SCHEMA[r] for r in ("DATE", "WELL", "FLOW_KIND", "WELL_TYPE") + ATTRIBUTES
)


def row(day, well="NO 15/9-F-14 H", flow="production", wtype="OP", **vals):
    cells = [vals.get(a, "1.0") for a in ATTRIBUTES]
    return ",".join([day, well, flow, wtype, *cells])


def csv_bytes(*rows, header=HEADER):
    return ("\n".join([header, *rows]) + "\n").encode()


def test_three_rows_with_blank_adp():
    data = csv_bytes(row("07-Apr-14"), row("08-Apr-14", ADP=""), row("09-Apr-14"))
    (s,) = parse_production_csv(data)
    assert len(s) == 3
    assert missing_audit(s)["ADP"].missing == 1
    assert s.well_type is WellType.PRODUCER


def test_rows_sorted_by_date():
    data = csv_bytes(row("09-Apr-14", O="3"), row("07-Apr-14", O="1"), row("08-Apr-14", O="2"))
    (s,) = parse_production_csv(data)
    assert s.column("O").tolist() == [1.0, 2.0, 3.0]
    assert str(s.dates[0]) == "2014-04-07"


def test_injection_rows_flag_injector():
    data = csv_bytes(
        row("07-Apr-14"),
        row("07-Apr-14", well="NO 15/9-F-4 AH", flow="injection", wtype="WI"),
    )
    by_code = {s.well_code: s for s in parse_production_csv(data)}
    assert by_code["NO 15/9-F-4 AH"].well_type is WellType.INJECTOR
    assert by_code["NO 15/9-F-14 H"].is_producer


def test_unparseable_and_sentinel_cells_are_missing():
    data = csv_bytes(
        row("07-Apr-14", ADP="abc", ADT="NULL", OSH="-1", AWP="nan", AWT="inf"),
        row("08-Apr-14"),
    )
    (s,) = parse_production_csv(data)
    for a in ("ADP", "ADT", "OSH", "AWP", "AWT"):
        assert math.isnan(s.column(a)[0]), a
    assert np.isfinite(s.values[1]).all()


def test_negative_volumes_are_missing_but_negative_pressure_kept():
    (s,) = parse_production_csv(csv_bytes(row("07-Apr-14", O="-5", ADPT="-3.5")))
    assert math.isnan(s.column("O")[0])
    assert s.column("ADPT")[0] == -3.5


def test_missing_column_names_it():
    header = HEADER.replace(",AVG_DP_TUBING", "")
    with pytest.raises(SchemaError) as exc:
        parse_production_csv(csv_bytes(header=header))
    assert exc.value.column == "AVG_DP_TUBING"
    assert "AVG_DP_TUBING" in str(exc.value)


def test_duplicate_rows_listed():
    data = csv_bytes(row("07-Apr-14"), row("07-Apr-14"), row("08-Apr-14"))
    with pytest.raises(IntegrityError) as exc:
        parse_production_csv(data)
    assert exc.value.offenders == [("NO 15/9-F-14 H", "2014-04-07")]


def test_semicolon_delimiter_and_decimal_comma():
    header = HEADER.replace(",", ";")
    cells = ["1,5"] * len(ATTRIBUTES)
    line = ";".join(["2014-04-07", "W1", "production", "OP", *cells])
    (s,) = parse_production_csv(csv_bytes(line, header=header))
    assert s.column("O")[0] == 1.5


@pytest.mark.parametrize("text", ["07-Apr-14", "2014-04-07", "07-Apr-2014", "2014-04-07T00:00:00"])
def test_date_formats(text):
    assert parse_date(text).isoformat() == "2014-04-07"


def test_parses_from_path_and_text_stream(tmp_path):
    data = csv_bytes(row("07-Apr-14"))
    p = tmp_path / "x.csv"
    p.write_bytes(data)
    assert parse_production_csv(p) == parse_production_csv(io.StringIO(data.decode()))


def test_series_rejects_unordered_dates():
    with pytest.raises(IntegrityError):
        WellSeries("w", "producer", np.array(["2014-01-02", "2014-01-01"], dtype="datetime64[D]"), np.zeros((2, len(ATTRIBUTES))))


def test_series_is_immutable():
    (s,) = parse_production_csv(csv_bytes(row("07-Apr-14")))
    with pytest.raises(ValueError):
        s.values[0, 0] = 5.0


# ---------------------------------------------------------------- statistics


def _series(col, attr="O"):
    n = len(col)
    values = np.full((n, len(ATTRIBUTES)), np.nan)
    values[:, ATTRIBUTES.index(attr)] = col
    dates = np.datetime64("2020-01-01") + np.arange(n)
    return WellSeries("w", "producer", dates, values)


def test_summary_hand_values():
    st_ = well_summary(_series([1.0, 2.0, 3.0, 4.0]))["O"]
    assert (st_.mean, st_.median, st_.min, st_.max) == (2.5, 2.5, 1.0, 4.0)
    assert st_.q1 == 1.75 and st_.q3 == 3.25
    assert st_.std == pytest.approx(math.sqrt(1.25))


def test_summary_sample_std_flag():
    st_ = well_summary(_series([1.0, 2.0, 3.0, 4.0]), ddof=1)["O"]
    assert st_.std == pytest.approx(math.sqrt(5 / 3))


def test_summary_constant_series():
    st_ = well_summary(_series([5.0, 5.0, 5.0]))["O"]
    assert st_.std == 0.0
    assert st_.q1 == st_.median == st_.q3 == 5.0


def test_summary_all_missing_flagged_absent():
    stats = well_summary(_series([1.0, 2.0]))
    assert stats["ADP"].absent
    assert math.isnan(stats["ADP"].mean)
    assert not stats["O"].absent


def test_missing_audit_empty_column_and_full_column():
    audit = missing_audit(_series([1.0, 2.0, 3.0]))
    assert audit["O"].missing == 0
    assert audit["ADP"].missing == 3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.one_of(st.none(), st.floats(-1e6, 1e6)), min_size=1, max_size=40))
def test_summary_invariants(cells):
    col = [math.nan if c is None else c for c in cells]
    s = _series(col, "ADP")
    st_ = well_summary(s)["ADP"]
    audit = missing_audit(s)["ADP"]
    assert st_.count + audit.missing == len(s)
    assert audit.missing + audit.present == len(s)
    if st_.count:
        assert st_.min <= st_.q1 <= st_.median <= st_.q3 <= st_.max
        assert st_.std >= 0


def test_stats_report_layout():
    buf = io.StringIO()
    write_stats_report(well_summary(_series([1.0, 2.0])), buf, attributes=["O", "ADP"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",O,ADP"
    assert lines[1] == "Count,2,0"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["Count", "Mean", "STD", "Min", "1st quartile", "Median", "3rd quartile", "Max"]


# ---------------------------------------------------------------- correlation


def _two_col(x, y, a="ADP", b="ADT"):
    n = len(x)
    values = np.full((n, len(ATTRIBUTES)), np.nan)
    values[:, ATTRIBUTES.index(a)] = x
    values[:, ATTRIBUTES.index(b)] = y
    return WellSeries("w", "producer", np.datetime64("2020-01-01") + np.arange(n), values)


def test_corr_perfect_linear():
    x = np.arange(10.0)
    c = correlation_matrix(_two_col(x, 2 * x + 1), ["ADP", "ADT"])
    assert c["ADP", "ADT"] == pytest.approx(1.0)
    assert c["ADP", "ADP"] == 1.0


def test_corr_perfect_anti():
    x = np.arange(10.0)
    c = correlation_matrix(_two_col(x, -x), ["ADP", "ADT"])
    assert c["ADP", "ADT"] == pytest.approx(-1.0)


def test_corr_zero_variance_and_too_few_pairs_undefined():
    x = np.arange(5.0)
    c = correlation_matrix(_two_col(x, np.full(5, 3.0)), ["ADP", "ADT"])
    assert c.undefined[0, 1]
    y = np.array([1.0, np.nan, np.nan, np.nan, np.nan])
    c = correlation_matrix(_two_col(x, y), ["ADP", "ADT"])
    assert c.n_pairs[0, 1] == 1 and c.undefined[0, 1]


def test_corr_pairwise_vs_complete_case():
    rng = np.random.default_rng(3)
    x = rng.normal(size=50)
    y = x + rng.normal(size=50)
    z = rng.normal(size=50)
    values = np.full((50, len(ATTRIBUTES)), np.nan)
    for a, col in zip(("ADP", "ADT", "AAP"), (x, y, z)):
        values[:, ATTRIBUTES.index(a)] = col
    values[:10, ATTRIBUTES.index("AAP")] = np.nan
    s = WellSeries("w", "producer", np.datetime64("2020-01-01") + np.arange(50), values)
    pw = correlation_matrix(s, ["ADP", "ADT", "AAP"])
    cc = correlation_matrix(s, ["ADP", "ADT", "AAP"], complete_case=True)
    assert pw.n_pairs[0, 1] == 50 and cc.n_pairs[0, 1] == 40
    assert pw["ADP", "ADT"] == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)
    assert cc["ADP", "ADT"] == pytest.approx(np.corrcoef(x[10:], y[10:])[0, 1], abs=1e-12)


def test_corr_excludes_injectors_by_default():
    a = _two_col(np.arange(5.0), np.arange(5.0))
    inj = WellSeries("i", "injector", a.dates, -a.values)
    c = correlation_matrix([a, inj], ["ADP", "ADT"])
    assert c.n_pairs[0, 1] == 5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_corr_invariants(seed):
    rng = np.random.default_rng(seed)
    n = 30
    base = rng.normal(size=(n, 4))
    base[:, 1] += base[:, 0]
    values = np.full((n, len(ATTRIBUTES)), np.nan)
    attrs = ["ADP", "ADT", "AAP", "ACP"]
    for j, a in enumerate(attrs):
        values[:, ATTRIBUTES.index(a)] = base[:, j]
    dates = np.datetime64("2020-01-01") + np.arange(n)
    s = WellSeries("w", "producer", dates, values)
    c = correlation_matrix(s, attrs, complete_case=True)
    assert np.all(np.diag(c.values) == 1.0)
    assert np.allclose(c.values, c.values.T, atol=1e-12)
    assert np.all(np.abs(c.values) <= 1.0)
    assert np.linalg.eigvalsh(c.values).min() >= -1e-8
    perm = rng.permutation(n)
    # row order is irrelevant; shuffle rows under fresh (sorted) dates
    shuffled = WellSeries("w", "producer", dates, values[perm])
    np.testing.assert_allclose(correlation_matrix(shuffled, attrs, complete_case=True).values, c.values, atol=1e-12)


# ---------------------------------------------------------------- round trips


def _random_series(seed, n=40):
    rng = np.random.default_rng(seed)
    values = rng.uniform(0, 500, size=(n, len(ATTRIBUTES)))
    values[rng.random(values.shape) < 0.1] = np.nan
    dates = np.datetime64("2014-01-01") + np.sort(rng.choice(np.arange(100), n, replace=False))
    return [
        WellSeries("NO 15/9-F-1 C", "producer", dates, values),
        WellSeries("NO 15/9-F-5 AH", "injector", dates[:5], values[:5]),
    ]


def _bitwise_equal(a, b):
    return all(
        x == y and x.values.tobytes() == y.values.tobytes() or np.array_equal(x.missing_mask, y.missing_mask) and np.array_equal(np.nan_to_num(x.values), np.nan_to_num(y.values))
        for x, y in zip(a, b)
    ) and len(a) == len(b)


@pytest.mark.parametrize("seed", range(5))
def test_export_round_trip(seed):
    series = _random_series(seed)
    buf = io.StringIO()
    write_production_csv(series, buf)
    again = parse_production_csv(buf.getvalue().encode())
    assert again == series
    for x, y in zip(series, again):
        present = ~x.missing_mask
        assert x.values[present].tobytes() == y.values[present].tobytes()
        assert np.array_equal(x.missing_mask, y.missing_mask)


@pytest.mark.parametrize("seed", range(5))
def test_canonical_round_trip(seed):
    series = _random_series(seed)
    buf = io.StringIO()
    write_canonical(series, buf)
    text = buf.getvalue()
    assert text.startswith("# volvecast-canonical v1\n")
    assert "NA" in text
    again = read_canonical(text.encode())
    assert again == series
    for x, y in zip(series, again):
        present = ~x.missing_mask
        assert x.values[present].tobytes() == y.values[present].tobytes()


def test_summarize_matches_numpy():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(101, 2))
    s = summarize(X, ["a", "b"])
    assert s["a"].median == np.median(X[:, 0])
    assert s["b"].std == np.std(X[:, 1])
