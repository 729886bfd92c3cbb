import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volvecast.errors import AlignmentError, DataError, FeatureError, FitError, ImputationError, SplitError
from volvecast.ingest import ATTRIBUTES, CorrMatrix, WellSeries, parse_production_csv, summarize, well_summary
from volvecast.preprocess import (
    TABLE_FEATURES,
    FeaturePolicy,
    FeatureSpec,
    SampleSet,
    apply_scaler,
    build_global_sets,
    chrono_split,
    curate,
    fit_scaler,
    impute_median,
    invert_scaler,
    load_curated,
    make_windows,
    save_curated,
    select_features,
    split_wells,
    window_starts,
)
from volvecast.synth import generate_csv


def series_from(columns, n=None, well="w", start="2020-01-01", dates=None, kind="producer"):
    n = n or len(next(iter(columns.values())))
    values = np.full((n, len(ATTRIBUTES)), np.nan)
    for a, col in columns.items():
        values[:, ATTRIBUTES.index(a)] = col
    if dates is None:
        dates = np.datetime64(start) + np.arange(n)
    return WellSeries(well, kind, np.asarray(dates, dtype="datetime64[D]"), values)


def gapless(n, well="w", seed=0, start="2020-01-01"):
    rng = np.random.default_rng(seed)
    return series_from({a: rng.normal(10, 2, n) for a in TABLE_FEATURES}, well=well, start=start)


SPEC = FeatureSpec(TABLE_FEATURES)


# ---------------------------------------------------------------- imputation


def test_impute_fills_with_median():
    s = series_from({"ADP": [1.0, np.nan, 3.0]})
    out = impute_median(s, well_summary(s, ["ADP"]))
    assert out.column("ADP").tolist() == [1.0, 2.0, 3.0]


def test_impute_noop_without_holes():
    s = series_from({"ADP": [1.0, 5.0, 3.0]})
    assert impute_median(s, well_summary(s, ["ADP"])) == s


def test_impute_skewed_column_uses_median_not_mean():
    s = series_from({"ADP": [1.0, 1.0, 1.0, 100.0, np.nan]})
    assert impute_median(s, well_summary(s, ["ADP"])).column("ADP")[4] == 1.0


def test_impute_entirely_missing_attribute_named():
    s = series_from({"ADP": [1.0, 2.0]})
    with pytest.raises(ImputationError) as exc:
        impute_median(s, well_summary(s, ["ADP", "ADT"]))
    assert exc.value.attribute == "ADT"


# ---------------------------------------------------------------- scaling


def test_scaler_hand_values():
    p = fit_scaler(np.array([[1.0], [2.0], [3.0]]), ["ADP"])
    assert p.of("ADP") == (2.0, pytest.approx(0.816496580927726))
    mu, sigma = p.of("ADP")
    assert apply_scaler(np.array([[mu], [mu + sigma]]), p).ravel().tolist() == pytest.approx([0.0, 1.0])


def test_scaled_training_column_standardised():
    rng = np.random.default_rng(1)
    X = rng.normal(50, 7, size=(200, 3))
    p = fit_scaler(X, ["ADP", "ADT", "O"])
    Z = apply_scaler(X, p)
    assert np.allclose(Z.mean(axis=0), 0, atol=1e-9)
    assert np.allclose(Z.std(axis=0), 1, atol=1e-9)


def test_scaler_zero_variance_rejected():
    with pytest.raises(FitError) as exc:
        fit_scaler(np.array([[1.0, 4.0], [2.0, 4.0]]), ["ADP", "ADT"])
    assert exc.value.feature == "ADT"


def test_scaler_unknown_feature():
    p = fit_scaler(np.array([[1.0], [2.0]]), ["ADP"])
    with pytest.raises(AlignmentError):
        invert_scaler([0.0], p, "ADT")
    with pytest.raises(AlignmentError):
        apply_scaler(np.zeros((2, 1)), p, ["ADT"])


def test_scaler_dict_round_trip():
    p = fit_scaler(np.random.default_rng(0).normal(size=(10, 2)), ["ADP", "O"])
    assert type(p).from_dict(p.to_dict()) == p


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(-1e4, 1e4), st.floats(1e-3, 1e4))
def test_inverse_of_apply_is_identity(seed, loc, scale):
    rng = np.random.default_rng(seed)
    X = rng.normal(loc, scale, size=(50, 2))
    p = fit_scaler(X, ["ADP", "O"])
    x = rng.normal(loc, scale, size=(1000, 2))
    back = invert_scaler(apply_scaler(x, p), p)
    assert np.allclose(back, x, rtol=1e-10, atol=1e-10 * max(1.0, abs(loc)))


def test_series_scaling_leaves_unfitted_columns():
    s = gapless(20)
    p = fit_scaler(s, ["ADP"])
    out = apply_scaler(s, p)
    assert np.array_equal(out.column("ADT"), s.column("ADT"))
    assert out.column("ADP").mean() == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------- features


def _corr(pairs, attrs=TABLE_FEATURES):
    m = np.eye(len(attrs))
    for (a, b), r in pairs.items():
        i, j = attrs.index(a), attrs.index(b)
        m[i, j] = m[j, i] = r
    return CorrMatrix(tuple(attrs), m, np.full(m.shape, 100))


def test_table_policy_is_twelve_wide():
    spec = select_features(None, "table")
    assert spec.inputs == ("OSH", "ADP", "ADT", "ADPT", "AAP", "ACP", "AWP", "AWT", "DPC", "O", "W", "G")
    assert spec.width == 12 and spec.target == "O"


def test_strict_policy_drops_adp_and_g():
    corr = _corr({("ADP", "ADT"): 0.97, ("O", "G"): 1.0, ("ADP", "AWP"): 0.95, ("W", "O"): 0.6})
    spec = select_features(corr, "strict")
    assert "ADP" not in spec.inputs and "G" not in spec.inputs
    assert "ADT" in spec.inputs and "AWP" in spec.inputs and "O" in spec.inputs
    assert spec.width == 10
    assert "0.97" in spec.exclusions["ADP"] or "0.95" in spec.exclusions["ADP"]
    assert "with O" in spec.exclusions["G"]


def test_threshold_above_one_drops_nothing():
    corr = _corr({("ADP", "ADT"): 0.97, ("O", "G"): 1.0})
    spec = select_features(corr, FeaturePolicy("lenient", threshold=1.01))
    assert spec.inputs == TABLE_FEATURES


def test_policy_excluding_target_rejected():
    with pytest.raises(FeatureError):
        select_features(None, FeaturePolicy("bad", exclude=("O",)))


def test_non_autoregressive_policy():
    spec = select_features(None, FeaturePolicy("exo", autoregressive=False))
    assert "O" not in spec.inputs and spec.scaled[-1] == "O"


def test_strict_on_synthetic_data_drops_gas():
    series = parse_production_csv(generate_csv(seed=0, days=200).encode())
    ds = curate(series, policy="strict")
    assert "G" not in ds.features.inputs
    assert ds.train.windows.shape[2] == ds.features.width


# ---------------------------------------------------------------- windows


def test_window_count_gapless():
    assert len(make_windows(gapless(10), 5, SPEC)) == 5
    assert len(make_windows(gapless(6), 5, SPEC)) == 1


def test_short_series_warns_and_is_empty():
    with pytest.warns(UserWarning):
        assert len(make_windows(gapless(5), 5, SPEC)) == 0


def test_windows_spanning_a_gap_are_dropped():
    # 12 calendar days with day index 6 absent
    days = [d for d in range(13) if d != 6]
    s = series_from({a: np.arange(12.0) + 1 for a in TABLE_FEATURES}, dates=np.datetime64("2020-01-01") + np.array(days))
    starts = window_starts(s.dates, 5)
    # valid windows + target need days d..d+5 all present: only start day 0 before the gap and 7 after
    assert [int(days[i]) for i in starts] == [0, 7]
    samples = make_windows(s, 5, SPEC)
    assert len(samples) == 2
    for i in range(len(samples)):
        wd = samples.window_dates(i)
        assert np.all(np.diff(wd.astype(int)) == 1)
        assert samples.target_dates[i] == wd[-1] + 1


def test_window_content_and_target():
    s = gapless(9)
    samples = make_windows(s, 3, SPEC)
    cols = [s.index(a) for a in SPEC.inputs]
    np.testing.assert_array_equal(samples.windows[2], s.values[2:5, cols])
    assert samples.targets[2] == s.column("O")[5]
    assert samples.target_dates[2] == s.dates[5]


def test_missing_values_must_be_imputed_first():
    s = series_from({a: np.r_[np.arange(10.0)] for a in TABLE_FEATURES})
    values = s.values.copy()
    values[3, s.index("ADP")] = np.nan
    with pytest.raises(DataError):
        make_windows(s.with_values(values), 3, SPEC)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(1, 10))
def test_window_count_property(n, seq_len):
    expected = max(0, n - seq_len)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert len(make_windows(gapless(n), seq_len, SPEC)) == expected


# ---------------------------------------------------------------- splits


def test_split_hundred_samples():
    samples = make_windows(gapless(105), 5, SPEC)
    assert len(samples) == 100
    train, test, info = chrono_split(samples)
    assert len(train) == 70 and info.n_train == 70
    assert len(test) <= 30
    assert info.n_train + info.n_test + info.n_purged == 100
    assert train.target_dates.max() < test.start_dates.min() + 1


def test_split_without_purge_keeps_thirty():
    train, test, info = chrono_split(make_windows(gapless(105), 5, SPEC), purge=False)
    assert (len(train), len(test), info.n_purged) == (70, 30, 0)


def test_split_too_small():
    with pytest.raises(SplitError):
        chrono_split(make_windows(gapless(6), 5, SPEC))


def test_manifest_totals_are_sums():
    per_well = {w: make_windows(gapless(15, well=w), 5, SPEC) for w in ("a", "b")}
    train, test, manifest = split_wells(per_well)
    assert manifest.train_total == sum(len(t) for t in train.values()) == 14
    assert manifest.test_total == sum(len(t) for t in test.values())


def test_global_sets_shuffle_train_keep_test_order():
    per_well = {w: make_windows(gapless(40, well=w, seed=i), 5, SPEC) for i, w in enumerate("abc")}
    train, test, _ = split_wells(per_well)
    g_train, g_test = build_global_sets(train, test, seed=3)
    again, _ = build_global_sets(train, test, seed=3)
    assert np.array_equal(g_train.targets, again.targets)
    assert not np.array_equal(g_train.well_codes, np.sort(g_train.well_codes))
    keys = list(zip(g_test.well_codes.tolist(), g_test.target_dates.astype(int).tolist()))
    assert keys == sorted(keys)


def test_global_sets_feature_mismatch():
    a = make_windows(gapless(20, well="a"), 5, SPEC)
    b = make_windows(gapless(20, well="b"), 5, FeatureSpec(TABLE_FEATURES[:-1]))
    with pytest.raises(FeatureError):
        SampleSet.concat([a, b])


@settings(max_examples=40, deadline=None)
@given(st.integers(8, 120), st.integers(1, 8), st.floats(0.3, 0.9))
def test_split_properties(n, seq_len, ratio):
    samples = make_windows(gapless(n + seq_len), seq_len, SPEC)
    train, test, info = chrono_split(samples, ratio)
    assert info.n_train == math.floor(round(ratio * n, 9))
    assert info.n_train + info.n_test + info.n_purged == n
    # no test window touches the training range
    if len(test):
        assert test.start_dates.min() > train.target_dates.max()


# ---------------------------------------------------------------- curation


@pytest.fixture(scope="module")
def synth_series():
    return parse_production_csv(generate_csv(seed=4, wells=3, days=200).encode())


def test_curate_shapes_and_provenance(synth_series):
    ds = curate(synth_series, seq_len=5)
    assert ds.train.windows.shape[1:] == (5, 12)
    assert set(ds.train.wells()) == {s.well_code for s in synth_series if s.is_producer}
    assert ds.manifest.train_total == len(ds.train)
    assert ds.manifest.test_total == len(ds.test)
    for w, info in ds.manifest.wells.items():
        test_dates = ds.test.target_dates[ds.test.well_codes == w]
        assert test_dates.min() > np.datetime64(info.boundary_date)


def test_curate_is_leakage_free(synth_series):
    ds = curate(synth_series, seq_len=5)
    s = next(x for x in synth_series if x.is_producer)
    boundary = np.datetime64(ds.manifest.wells[s.well_code].boundary_date)
    train_part = s.subset(s.dates <= boundary)
    test_part = s.subset(s.dates > boundary)
    p = ds.scalers[s.well_code]
    col = train_part.column("O")
    assert p.of("O") == (pytest.approx(np.nanmean(col)), pytest.approx(np.nanstd(col)))
    assert ds.medians[s.well_code]["ADP"] == np.nanmedian(train_part.column("ADP"))
    # refitting on the test rows would give different parameters
    assert np.nanmedian(test_part.column("ADP")) != ds.medians[s.well_code]["ADP"]


def test_curate_global_scope_shares_one_scaler(synth_series):
    ds = curate(synth_series, fit_scope="global")
    params = list(ds.scalers.values())
    assert all(p == params[0] for p in params)


def test_curated_round_trip(tmp_path, synth_series):
    ds = curate(synth_series, seq_len=4, seed=9)
    save_curated(ds, tmp_path / "c")
    back = load_curated(tmp_path / "c")
    assert back.features == ds.features and back.seq_len == 4 and back.seed == 9
    assert np.array_equal(back.train.windows, ds.train.windows)
    assert np.array_equal(back.test.target_dates, ds.test.target_dates)
    assert back.scalers == ds.scalers
    assert back.manifest == ds.manifest


def test_curate_no_producers():
    inj = gapless(30)
    inj = WellSeries("i", "injector", inj.dates, inj.values)
    with pytest.raises(SplitError):
        curate([inj])


def test_summarize_used_for_global_medians():
    X = np.array([[1.0, 2.0], [3.0, np.nan], [5.0, 6.0]])
    s = summarize(X, ["ADP", "ADT"])
    assert s["ADT"].median == 4.0 and s["ADT"].count == 2
