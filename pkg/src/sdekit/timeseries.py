"""Hourly weather-year series: ingestion, splitting and synthesis.

A weather year runs from July 1 00:00 to June 30 23:00 and always has 8760
hours; February 29 is dropped. Hour ``h`` of a weather year therefore maps
to a fixed calendar position, see :func:`month_of_hour`.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

HOURS_PER_YEAR = 8760
DAYS_PER_YEAR = 365
WINTER_MONTHS = (11, 12, 1, 2)

# days per month in weather-year order (Jul..Jun, no leap day)
_MONTHS = (7, 8, 9, 10, 11, 12, 1, 2, 3, 4, 5, 6)
_MONTH_DAYS = (31, 31, 30, 31, 30, 31, 31, 28, 31, 30, 31, 30)

LOAD_PREFIX = "load:"
INFLOW_PREFIX = "inflow:"


def month_of_day() -> np.ndarray:
    return np.repeat(_MONTHS, _MONTH_DAYS)


def month_of_hour(n_hours: int = HOURS_PER_YEAR) -> np.ndarray:
    """Calendar month of each hour index in a weather year."""
    months = np.repeat(month_of_day(), 24)
    if n_hours > HOURS_PER_YEAR:
        raise ValueError("a weather year has at most 8760 hours")
    return months[:n_hours]


def winter_mask(n_hours: int = HOURS_PER_YEAR) -> np.ndarray:
    """Boolean mask of Nov-Feb hours."""
    return np.isin(month_of_hour(n_hours), WINTER_MONTHS)


def daily_mean(values: np.ndarray) -> np.ndarray:
    """Calendar-day means along the last axis (length must be a multiple of 24)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    if n % 24:
        raise ValueError(f"series length {n} is not a whole number of days")
    return values.reshape(*values.shape[:-1], n // 24, 24).mean(axis=-1)


def block_average(values: np.ndarray, resolution: int) -> np.ndarray:
    """Means over consecutive blocks of ``resolution`` entries along the last axis."""
    values = np.asarray(values, dtype=float)
    if resolution == 1:
        return values
    return values.reshape(*values.shape[:-1], -1, resolution).mean(axis=-1)


@dataclass(frozen=True, eq=False)
class WeatherYearSeries:
    """Demand (MW per bus), capacity factors and inflows (MW) for one year."""

    label: str
    demand: Mapping[str, np.ndarray]
    cf: Mapping[str, np.ndarray] = field(default_factory=dict)
    inflow: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        lengths = set()
        for name in ("demand", "cf", "inflow"):
            frozen = {}
            for k, v in getattr(self, name).items():
                arr = np.array(v, dtype=float)
                arr.setflags(write=False)
                frozen[k] = arr
                lengths.add(arr.shape)
            object.__setattr__(self, name, frozen)
        if len(lengths) > 1:
            raise ValueError(f"{self.label}: profiles have different shapes {sorted(lengths)}")
        for k, v in self.cf.items():
            if v.size and (v.min() < 0 or v.max() > 1):
                raise ValueError(f"{self.label}: capacity factor {k!r} outside [0, 1]")
        for k, v in self.demand.items():
            if v.size and v.min() < 0:
                raise ValueError(f"{self.label}: negative demand at bus {k!r}")

    @property
    def n_hours(self) -> int:
        for group in (self.demand, self.cf, self.inflow):
            for v in group.values():
                return len(v)
        return 0

    def total_demand(self) -> np.ndarray:
        return np.sum([v for v in self.demand.values()], axis=0)

    def profile(self, pid: str) -> np.ndarray:
        if pid in self.cf:
            return self.cf[pid]
        if pid in self.inflow:
            return self.inflow[pid]
        raise KeyError(f"{self.label}: unknown profile {pid!r}")

    def profile_ids(self) -> set[str]:
        return set(self.cf) | set(self.inflow)

    def to_frame(self) -> pd.DataFrame:
        cols = {LOAD_PREFIX + k: v for k, v in self.demand.items()}
        cols.update(self.cf)
        cols.update({INFLOW_PREFIX + k: v for k, v in self.inflow.items()})
        return pd.DataFrame(cols)


def aggregate(series: WeatherYearSeries, resolution: int) -> WeatherYearSeries:
    """Replace every profile by its block means, repeated back to hourly length."""
    if resolution == 1:
        return series
    smooth = lambda group: {k: np.repeat(block_average(v, resolution), resolution)
                            for k, v in group.items()}
    return WeatherYearSeries(series.label, smooth(series.demand), smooth(series.cf),
                             smooth(series.inflow))


def _from_columns(label: str, frame: pd.DataFrame) -> WeatherYearSeries:
    demand, cf, inflow = {}, {}, {}
    for col in frame.columns:
        values = frame[col].to_numpy(dtype=float)
        if col.startswith(LOAD_PREFIX):
            demand[col[len(LOAD_PREFIX):]] = values
        elif col.startswith(INFLOW_PREFIX):
            inflow[col[len(INFLOW_PREFIX):]] = values
        else:
            cf[col] = values
    return WeatherYearSeries(label, demand, cf, inflow)


def year_label(start_year: int) -> str:
    return f"{start_year}/{(start_year + 1) % 100:02d}"


def split_weather_years(raw: pd.DataFrame) -> list[WeatherYearSeries]:
    """Cut a multi-year hourly frame into July-June weather years.

    ``raw`` is indexed by naive hourly timestamps. Columns named ``load:<bus>``
    are demand, ``inflow:<store>`` are inflows, all others capacity factors.
    Feb 29 is removed; incomplete leading/trailing years are dropped with a
    warning.
    """
    if not isinstance(raw.index, pd.DatetimeIndex):
        raise TypeError("raw series must be indexed by timestamps")
    if raw.index.tz is not None:
        raise ValueError("timestamps must be timezone-free")
    raw = raw.sort_index()
    if raw.index.has_duplicates:
        raise ValueError(f"duplicate timestamp {raw.index[raw.index.duplicated()][0]}")
    expected = pd.date_range(raw.index[0], raw.index[-1], freq="h")
    missing = expected.difference(raw.index)
    if len(missing):
        raise ValueError(f"gap in hourly input: first missing timestamp {missing[0]}")
    if len(expected) != len(raw.index):
        raise ValueError("input is not on a whole-hour grid")

    idx = raw.index
    raw = raw[~((idx.month == 2) & (idx.day == 29))]
    idx = raw.index
    start_year = np.where(idx.month >= 7, idx.year, idx.year - 1)

    years = []
    for y in np.unique(start_year):
        chunk = raw[start_year == y]
        first, last = chunk.index[0], chunk.index[-1]
        complete = (
            len(chunk) == HOURS_PER_YEAR
            and first == pd.Timestamp(year=int(y), month=7, day=1)
            and last == pd.Timestamp(year=int(y) + 1, month=6, day=30, hour=23)
        )
        if not complete:
            msg = f"dropping partial weather year {year_label(int(y))} ({len(chunk)} hours)"
            logger.warning(msg)
            warnings.warn(msg, stacklevel=2)
            continue
        years.append(_from_columns(year_label(int(y)), chunk.reset_index(drop=True)))
    return years


def read_weather_csv(path: str | Path) -> pd.DataFrame:
    """Read a timestamp-indexed CSV (first column ISO-8601 timestamps)."""
    frame = pd.read_csv(path, index_col=0, parse_dates=[0], encoding="utf-8",
                        float_precision="round_trip")
    frame.index.name = "timestamp"
    return frame


def concat_weather_years(years: Sequence[WeatherYearSeries], first_year: int) -> pd.DataFrame:
    """Lay consecutive weather years back onto a real calendar.

    Feb 29 rows are re-inserted as copies of Feb 28 so that the output is a
    gap-free hourly series; :func:`split_weather_years` drops them again.
    """
    frames = []
    for i, wy in enumerate(years):
        y = first_year + i
        stamps = pd.date_range(f"{y}-07-01", f"{y + 1}-06-30 23:00", freq="h")
        keep = ~((stamps.month == 2) & (stamps.day == 29))
        frame = wy.to_frame()
        full = pd.DataFrame(index=stamps, columns=frame.columns, dtype=float)
        full.loc[keep] = frame.to_numpy()
        full = full.ffill(limit=24)
        frames.append(full)
    out = pd.concat(frames)
    out.index.name = "timestamp"
    return out


# -- synthetic weather ---------------------------------------------------------

@dataclass(frozen=True)
class DroughtWindow:
    start: int
    length: int
    cf_multiplier: float = 1.0
    demand_multiplier: float = 1.0


def _check_windows(windows: Sequence[DroughtWindow], n_hours: int) -> list[DroughtWindow]:
    windows = sorted((w if isinstance(w, DroughtWindow) else DroughtWindow(*w) for w in windows),
                     key=lambda w: w.start)
    for w in windows:
        if w.length < 1 or w.start < 0 or w.start + w.length > n_hours:
            raise ValueError(f"drought window {w} outside [0, {n_hours})")
        if w.cf_multiplier < 0 or w.demand_multiplier < 0:
            raise ValueError(f"drought window {w} has a negative multiplier")
    for a, b in zip(windows, windows[1:]):
        if b.start < a.start + a.length:
            raise ValueError(f"overlapping drought windows {a} and {b}")
    return windows


def _seasonal(day: np.ndarray, peak_day: float) -> np.ndarray:
    return np.cos(2 * np.pi * (day - peak_day) / DAYS_PER_YEAR)


# Jan 15 sits 198 days after July 1
_MIDWINTER = 198.0


def synth_weather(
    demand_base: Mapping[str, float],
    profiles: Mapping[str, str | Mapping],
    *,
    seed: int = 0,
    amplitude: float = 0.3,
    noise: float = 0.05,
    demand_amplitude: float = 0.15,
    drought_windows: Sequence[DroughtWindow | tuple] = (),
    label: str = "synthetic",
    n_hours: int = HOURS_PER_YEAR,
) -> WeatherYearSeries:
    """Generate a deterministic synthetic weather year.

    ``demand_base`` maps bus id to mean demand in MW. ``profiles`` maps
    profile id to a kind (``"wind"``, ``"solar"`` or ``"inflow"``) or to a
    dict ``{"kind": ..., "mean": ...}``; inflow means are MW.

    Wind and demand peak in midwinter, solar in midsummer. Solar follows a
    half-sine between 06:00 and 18:00 and is exactly zero at night. Inside
    each drought window all capacity factors are scaled by ``cf_multiplier``
    and demand by ``demand_multiplier``.
    """
    if n_hours % 24:
        raise ValueError("n_hours must be a whole number of days")
    windows = _check_windows(drought_windows, n_hours)
    rng = np.random.default_rng(seed)
    hours = np.arange(n_hours)
    day = hours // 24
    hod = hours % 24
    winter_wave = _seasonal(day, _MIDWINTER)
    diurnal = np.where((hod > 6) & (hod < 18), np.sin(np.pi * (hod - 6) / 12), 0.0)
    diurnal = diurnal / diurnal.mean()

    def ar1(scale):
        eps = rng.normal(0.0, scale, n_hours)
        out = np.empty(n_hours)
        acc = 0.0
        for i, e in enumerate(eps):
            acc = 0.9 * acc + np.sqrt(1 - 0.81) * e
            out[i] = acc
        return out

    cf, inflow = {}, {}
    for pid in sorted(profiles):
        spec = profiles[pid]
        if isinstance(spec, str):
            spec = {"kind": spec}
        kind = spec["kind"]
        if kind == "wind":
            mean = spec.get("mean", 0.35)
            values = np.clip(mean * (1 + amplitude * winter_wave) + ar1(noise), 0.0, 1.0)
            cf[pid] = values
        elif kind == "solar":
            mean = spec.get("mean", 0.12)
            seasonal = mean * (1 - amplitude * winter_wave)
            values = seasonal * diurnal * (1 + ar1(noise))
            cf[pid] = np.clip(values, 0.0, 1.0)
        elif kind == "inflow":
            mean = spec.get("mean", 100.0)
            inflow[pid] = np.clip(mean * (1 - 0.5 * amplitude * winter_wave) * (1 + ar1(noise)), 0.0, None)
        else:
            raise ValueError(f"profile {pid!r}: unknown kind {kind!r}")

    daily_shape = 1 + 0.1 * np.sin(np.pi * (hod - 8) / 12)
    demand = {}
    for bus in sorted(demand_base):
        base = float(demand_base[bus])
        d = base * (1 + demand_amplitude * winter_wave) * daily_shape * (1 + ar1(noise * 0.2))
        demand[bus] = np.clip(d, 0.0, None)

    for w in windows:
        sl = slice(w.start, w.start + w.length)
        for pid in cf:
            cf[pid][sl] *= w.cf_multiplier
            cf[pid] = np.clip(cf[pid], 0.0, 1.0)
        for bus in demand:
            demand[bus][sl] *= w.demand_multiplier

    return WeatherYearSeries(label, demand, cf, inflow)


# -- per-year statistics ---------------------------------------------------------

def annual_cf(series: WeatherYearSeries, profile_id: str) -> float:
    """Mean capacity factor of one profile over the year."""
    if profile_id not in series.cf:
        raise KeyError(f"{series.label}: unknown capacity-factor profile {profile_id!r}")
    return float(np.mean(series.cf[profile_id]))


def winter_load(series: WeatherYearSeries) -> float:
    """Mean system-wide demand (MW) over the Nov-Feb hours.

    Series too short to reach November fall back to the whole-series mean.
    """
    total = series.total_demand()
    mask = winter_mask(len(total))
    return float(total[mask].mean() if mask.any() else total.mean())
