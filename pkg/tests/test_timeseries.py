import warnings

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from sdekit.timeseries import (DroughtWindow, WeatherYearSeries, aggregate, annual_cf, block_average,
                               concat_weather_years, daily_mean, month_of_hour, split_weather_years,
                               synth_weather, winter_load, winter_mask, year_label)

PROFILES = {"w": "wind", "s": "solar"}


def _raw(start, end, seed=0):
    idx = pd.date_range(start, end, freq="h")
    rng = np.random.default_rng(seed)
    return pd.DataFrame({"load:a": rng.uniform(500, 1500, len(idx)), "w": rng.uniform(0, 1, len(idx))},
                        index=idx)


def test_weather_year_runs_july_to_june():
    years = split_weather_years(_raw("1963-07-01", "1965-06-30 23:00"))
    assert [y.label for y in years] == ["1963/64", "1964/65"]
    assert all(y.n_hours == 8760 for y in years)


def test_leap_day_dropped():
    raw = _raw("1963-07-01", "1964-06-30 23:00")
    assert len(raw) == 8784
    (year,) = split_weather_years(raw)
    kept = raw[~((raw.index.month == 2) & (raw.index.day == 29))]
    np.testing.assert_array_equal(year.demand["a"], kept["load:a"].to_numpy())


def test_partial_year_dropped_with_warning(caplog):
    raw = _raw("1963-07-01", "1964-12-31 23:00")
    with pytest.warns(UserWarning, match="1964/65"):
        years = split_weather_years(raw)
    assert [y.label for y in years] == ["1963/64"]
    assert "partial" in caplog.text


def test_gap_names_first_missing_timestamp():
    raw = _raw("1963-07-01", "1964-06-30 23:00").drop(pd.Timestamp("1963-09-02 05:00"))
    with pytest.raises(ValueError, match="1963-09-02 05:00"):
        split_weather_years(raw)


def test_round_trip_through_calendar():
    years = [synth_weather({"a": 1000}, PROFILES, seed=s, label=str(s)) for s in (1, 2)]
    back = split_weather_years(concat_weather_years(years, 1979))
    assert [y.label for y in back] == ["1979/80", "1980/81"]
    for a, b in zip(years, back):
        np.testing.assert_array_equal(a.demand["a"], b.demand["a"])
        np.testing.assert_array_equal(a.cf["w"], b.cf["w"])


def test_year_label():
    assert year_label(1999) == "1999/00"
    assert year_label(1965) == "1965/66"


def test_winter_is_nov_to_feb():
    months = month_of_hour()
    mask = winter_mask()
    # July 1 start: Nov 1 is day 123, Mar 1 is day 243
    assert mask.sum() == (30 + 31 + 31 + 28) * 24
    assert np.flatnonzero(mask)[0] == 123 * 24
    assert np.flatnonzero(mask)[-1] == 243 * 24 - 1
    assert set(months[mask]) == {11, 12, 1, 2}


def test_cf_outside_unit_interval_rejected():
    with pytest.raises(ValueError, match="outside"):
        WeatherYearSeries("x", {"a": np.ones(24)}, {"w": np.full(24, 1.2)})


def test_negative_demand_rejected():
    with pytest.raises(ValueError, match="negative demand"):
        WeatherYearSeries("x", {"a": -np.ones(24)})


def test_series_is_read_only():
    d = np.ones(24)
    s = WeatherYearSeries("x", {"a": d})
    d[0] = 5.0
    assert s.demand["a"][0] == 1.0
    with pytest.raises(ValueError):
        s.demand["a"][0] = 2.0


def test_synth_is_deterministic():
    a = synth_weather({"a": 1000}, PROFILES, seed=4)
    b = synth_weather({"a": 1000}, PROFILES, seed=4)
    c = synth_weather({"a": 1000}, PROFILES, seed=5)
    np.testing.assert_array_equal(a.cf["w"], b.cf["w"])
    assert not np.array_equal(a.cf["w"], c.cf["w"])


def test_synth_seasonality():
    s = synth_weather({"a": 1000}, PROFILES, seed=0, noise=0.0)
    w = winter_mask()
    assert s.cf["w"][w].mean() > s.cf["w"][~w].mean()
    assert s.cf["s"][w].mean() < s.cf["s"][~w].mean()
    assert s.demand["a"][w].mean() > s.demand["a"][~w].mean()
    night = (np.arange(8760) % 24 < 6) | (np.arange(8760) % 24 >= 18)
    assert np.all(s.cf["s"][night] == 0.0)


def test_drought_window_scales_cf_and_demand():
    base = synth_weather({"a": 1000}, PROFILES, seed=3)
    dry = synth_weather({"a": 1000}, PROFILES, seed=3, drought_windows=[DroughtWindow(100, 24, 0.2, 1.1)])
    sl = slice(100, 124)
    np.testing.assert_allclose(dry.cf["w"][sl], base.cf["w"][sl] * 0.2)
    np.testing.assert_allclose(dry.demand["a"][sl], base.demand["a"][sl] * 1.1)
    np.testing.assert_array_equal(dry.cf["w"][:100], base.cf["w"][:100])


def test_overlapping_windows_rejected():
    with pytest.raises(ValueError):
        synth_weather({"a": 1}, PROFILES, drought_windows=[(10, 20, 0.5, 1.0), (25, 10, 0.5, 1.0)])


def test_annual_stats():
    s = WeatherYearSeries("x", {"a": np.where(winter_mask(), 2000.0, 1000.0)}, {"w": np.full(8760, 0.3)})
    assert annual_cf(s, "w") == pytest.approx(0.3)
    assert winter_load(s) == pytest.approx(2000.0)
    with pytest.raises(KeyError):
        annual_cf(s, "nope")


def test_daily_mean_and_blocks():
    x = np.arange(48, dtype=float)
    np.testing.assert_allclose(daily_mean(x), [11.5, 35.5])
    np.testing.assert_allclose(block_average(x, 3)[:2], [1.0, 4.0])
    with pytest.raises(ValueError):
        daily_mean(np.ones(25))


def test_aggregate_keeps_totals():
    s = synth_weather({"a": 1000}, PROFILES, seed=1, n_hours=240)
    agg = aggregate(s, 4)
    assert agg.n_hours == 240
    assert agg.demand["a"].sum() == pytest.approx(s.demand["a"].sum())
    assert np.all(agg.demand["a"][:4] == agg.demand["a"][0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 0.5), st.floats(0.0, 0.3))
def test_synth_always_valid(seed, amplitude, noise):
    s = synth_weather({"a": 500, "b": 100}, PROFILES, seed=seed, amplitude=amplitude, noise=noise,
                      n_hours=24 * 30)
    for v in s.cf.values():
        assert v.min() >= 0 and v.max() <= 1
    assert all(v.min() >= 0 for v in s.demand.values())
