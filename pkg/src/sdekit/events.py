"""System-defining event (SDE) detection and event characterisation.

An SDE is a period in which the load-weighted sum of nodal prices,
accumulated over a sliding window of ``window_T`` hours, reaches
``threshold_C``. Detection works on one weather year at a time.

Units: hourly quantities come in MW and EUR; event features are reported
in GW and TWh.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .model import FLEX_CATEGORIES, Network, StorageSystem, flex_category
from .optim import Solution
from .timeseries import WeatherYearSeries, winter_mask

FEATURE_NAMES = (
    "highest_net_load",
    "avg_net_load",
    "duration",
    "total_fc_discharge",
    "max_fc_discharge",
    "avg_relative_load",
    "wind_cf_anomaly",
)
FEATURE_UNITS = {
    "highest_net_load": "GW",
    "avg_net_load": "GW",
    "duration": "h",
    "total_fc_discharge": "TWh",
    "max_fc_discharge": "GW",
    "avg_relative_load": "-",
    "wind_cf_anomaly": "-",
}
QUANTITIES = ("net_load", "wind", "solar", "lambda") + tuple(f"flex:{c}" for c in FLEX_CATEGORIES)


@dataclass(frozen=True)
class SdeConfig:
    threshold_C: float = 1e11
    window_T: int = 336
    trim_quantile: float = 0.99

    def __post_init__(self):
        if not self.threshold_C > 0:
            raise ValueError("threshold_C must be positive")
        if self.window_T < 1:
            raise ValueError("window_T must be >= 1")
        if not 0.0 < self.trim_quantile < 1.0:
            raise ValueError("trim_quantile must lie in (0, 1)")


@dataclass(frozen=True)
class EventSpan:
    """Trimmed event hours ``start..end`` inside the raw exceedance span (inclusive)."""

    start: int
    end: int
    raw_start: int
    raw_end: int

    @property
    def hours(self) -> np.ndarray:
        return np.arange(self.start, self.end + 1)

    @property
    def duration(self) -> int:
        return self.end - self.start + 1

    def overlaps(self, other: "EventSpan", raw: bool = False) -> bool:
        a0, a1 = (self.raw_start, self.raw_end) if raw else (self.start, self.end)
        b0, b1 = (other.raw_start, other.raw_end) if raw else (other.start, other.end)
        return a0 <= b1 and b0 <= a1


@dataclass(frozen=True)
class EventFeatures:
    highest_net_load: float
    avg_net_load: float
    duration: int
    total_fc_discharge: float
    max_fc_discharge: float
    avg_relative_load: float
    wind_cf_anomaly: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FEATURE_NAMES], dtype=float)


@dataclass
class SdeEvent:
    id: str
    weather_year: str
    span: EventSpan
    features: EventFeatures
    cost: float = 0.0
    peak_hour: int = -1
    composites: pd.DataFrame | None = field(default=None, repr=False)

    @property
    def start(self) -> int:
        return self.span.start

    @property
    def end(self) -> int:
        return self.span.end

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "weather_year": self.weather_year,
            "start": self.span.start,
            "end": self.span.end,
            "raw_start": self.span.raw_start,
            "raw_end": self.span.raw_end,
            "cost_eur": self.cost,
            "peak_hour": self.peak_hour,
            "features": asdict(self.features),
        }


# -- hourly system series --------------------------------------------------------

def _renewables(network: Network, carrier: str | None = None):
    return [g for g in network.generators if g.category == "renewable"
            and (carrier is None or g.carrier == carrier)]


def net_load(series: WeatherYearSeries, solution: Solution, network: Network) -> np.ndarray:
    """System demand minus dispatched renewable generation, per hour (MW)."""
    demand = series.total_demand()
    ren = [g.id for g in _renewables(network)]
    if not ren:
        return demand.astype(float)
    return demand - solution.dispatch[ren].to_numpy().sum(axis=1)


def hourly_cost(series: WeatherYearSeries, solution: Solution) -> np.ndarray:
    """Load-weighted system cost per hour: sum over buses of demand times price (EUR)."""
    lam = solution.duals_balance
    return np.sum([np.asarray(series.demand[b]) * lam[b].to_numpy() for b in lam.columns], axis=0)


# -- detection -------------------------------------------------------------------

def window_sums(cost: np.ndarray, window: int) -> np.ndarray:
    """Sum of ``cost`` over each window ``[t0, t0 + window - 1]``."""
    csum = np.concatenate([[0.0], np.cumsum(np.asarray(cost, dtype=float))])
    return csum[window:] - csum[:-window]


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]


def raw_spans(cost: np.ndarray, threshold: float, window: int) -> list[tuple[int, int]]:
    """Maximal hour ranges covered by windows whose accumulated cost reaches ``threshold``."""
    cost = np.asarray(cost, dtype=float)
    if len(cost) < window:
        raise ValueError(f"series of {len(cost)} hours is shorter than the window of {window}")
    flagged = np.flatnonzero(window_sums(cost, window) >= threshold)
    covered = np.zeros(len(cost) + 1, dtype=np.int64)
    np.add.at(covered, flagged, 1)
    np.add.at(covered, flagged + window, -1)
    return _runs(np.cumsum(covered[:-1]) > 0)


def detect_sdes(cost: np.ndarray, config: SdeConfig = SdeConfig()) -> list[EventSpan]:
    """Find system-defining events in one year of hourly costs.

    Flagged windows are unioned into raw spans. Each raw span is trimmed to
    the smallest range holding all of its hours whose cost exceeds the
    ``trim_quantile`` of the year's hourly costs; if no hour qualifies, the
    span collapses to its peak-cost hour +/- 12 h.
    """
    cost = np.asarray(cost, dtype=float)
    spans = raw_spans(cost, config.threshold_C, config.window_T)
    if not spans:
        return []
    cutoff = np.quantile(cost, config.trim_quantile)
    out = []
    for r0, r1 in spans:
        seg = cost[r0:r1 + 1]
        hot = np.flatnonzero(seg > cutoff)
        if hot.size:
            s0, s1 = r0 + hot[0], r0 + hot[-1]
        else:
            peak = r0 + int(np.argmax(seg))
            s0, s1 = max(r0, peak - 12), min(r1, peak + 12)
        out.append(EventSpan(int(s0), int(s1), r0, r1))
    return out


# -- characterisation ----------------------------------------------------------

def backup_discharge(solution: Solution, network: Network) -> np.ndarray:
    """System-wide resilience back-up output per hour (MW): hydrogen
    discharge plus dispatch of resilience-backup generators."""
    total = np.zeros(len(solution.duals_balance))
    for g in network.generators:
        if g.category == "resilience-backup":
            total += solution.dispatch[g.id].to_numpy()
    for s in network.storage_systems:
        if flex_category(s) == "resilience-backup":
            total += solution.discharge[s.id].to_numpy()
    return total


def system_wind_cf(series: WeatherYearSeries, network: Network, solution: Solution | None = None) -> np.ndarray:
    """Hourly wind capacity factor, weighted by built wind capacity when known."""
    winds = [g for g in network.generators if g.carrier == "wind" and g.cf_profile]
    if not winds:
        return np.zeros(series.n_hours)
    profiles = np.vstack([series.cf[g.cf_profile] for g in winds])
    weights = np.ones(len(winds))
    if solution is not None and solution.capacities:
        built = np.array([solution.capacities.get((g.id, "p_nom"), 0.0) for g in winds])
        if built.sum() > 0:
            weights = built
    return weights @ profiles / weights.sum()


def event_features(span: EventSpan, series: WeatherYearSeries, solution: Solution,
                   network: Network) -> EventFeatures:
    """The seven clustering metrics of one event."""
    if span.end >= series.n_hours or span.start < 0:
        raise ValueError(f"event {span} outside the weather year")
    sl = slice(span.start, span.end + 1)
    nl = net_load(series, solution, network)[sl]
    backup = backup_discharge(solution, network)[sl]
    demand = series.total_demand()
    wind = system_wind_cf(series, network, solution)
    winter = winter_mask(series.n_hours)
    baseline = wind[winter].mean() if winter.any() else wind.mean()
    return EventFeatures(
        highest_net_load=float(nl.max() / 1e3),
        avg_net_load=float(nl.mean() / 1e3),
        duration=span.duration,
        total_fc_discharge=float(backup.sum() / 1e6),
        max_fc_discharge=float(backup.max() / 1e3),
        avg_relative_load=float(demand[sl].mean() / demand.mean()),
        wind_cf_anomaly=float(wind[sl].mean() - baseline),
    )


def peak_hour(span: EventSpan, series_values: np.ndarray) -> int:
    """Hour of maximal value inside the span; earliest hour on ties."""
    seg = np.asarray(series_values)[span.start:span.end + 1]
    if seg.size == 0:
        raise ValueError("empty span")
    return span.start + int(np.argmax(seg))


def duration_curve(values) -> np.ndarray:
    """Values sorted in descending order."""
    return -np.sort(-np.asarray(values, dtype=float))


def node_quantity(quantity: str, series: WeatherYearSeries, solution: Solution,
                  network: Network) -> pd.DataFrame:
    """Hourly per-bus values of one of :data:`QUANTITIES` (MW, or EUR/MWh for lambda)."""
    buses = network.bus_ids
    n = series.n_hours
    out = pd.DataFrame(np.zeros((n, len(buses))), columns=buses)
    if quantity == "lambda":
        return solution.duals_balance[buses].astype(float).reset_index(drop=True)
    if quantity == "net_load":
        for b in buses:
            out[b] = np.asarray(series.demand[b])
        for g in _renewables(network):
            out[g.bus] -= solution.dispatch[g.id].to_numpy()
        return out
    if quantity in ("wind", "solar"):
        for g in _renewables(network, quantity):
            out[g.bus] += solution.dispatch[g.id].to_numpy()
        return out
    if quantity.startswith("flex:"):
        cat = quantity[5:]
        if cat not in FLEX_CATEGORIES:
            raise ValueError(f"unknown flexibility category {cat!r}")
        for g in network.generators:
            if g.category == cat:
                out[g.bus] += solution.dispatch[g.id].to_numpy()
        for s in network.storage_systems:
            if flex_category(s) == cat:
                out[s.bus] += solution.discharge[s.id].to_numpy()
        return out
    raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")


def seasonal_average(values: pd.DataFrame) -> pd.Series:
    """Per-bus mean over the Nov-Feb hours of the weather year."""
    mask = winter_mask(len(values))
    if not mask.any():
        return values.mean()
    return values[mask].mean()


def anomalies(quantity: str, span: EventSpan, series: WeatherYearSeries, solution: Solution,
              network: Network) -> pd.DataFrame:
    """Daily per-bus anomaly of ``quantity`` over the days touched by ``span``.

    Anomaly = calendar-day mean minus the bus's Nov-Feb mean of the same
    weather year. Rows are indexed by day of the weather year.
    """
    values = node_quantity(quantity, series, solution, network)
    baseline = seasonal_average(values)
    d0, d1 = span.start // 24, span.end // 24
    days = values.iloc[d0 * 24:(d1 + 1) * 24]
    daily = days.groupby(np.arange(len(days)) // 24).mean()
    daily.index = pd.RangeIndex(d0, d1 + 1, name="day")
    return daily - baseline


def utilisation(series: WeatherYearSeries, solution: Solution, network: Network,
                category: str) -> pd.DataFrame:
    """Hourly dispatch over installed capacity of one flexibility category, per bus."""
    disp = node_quantity(f"flex:{category}", series, solution, network)
    cap = pd.Series(0.0, index=network.bus_ids)
    for g in network.generators:
        if g.category == category:
            cap[g.bus] += solution.capacities[(g.id, "p_nom")]
    for s in network.storage_systems:
        if flex_category(s) == category:
            cap[s.bus] += solution.capacities[(s.id, "discharger")]
    with np.errstate(divide="ignore", invalid="ignore"):
        util = disp / cap.replace(0.0, np.nan)
    return util


def event_composite(span: EventSpan, series: WeatherYearSeries, solution: Solution,
                    network: Network) -> pd.DataFrame:
    """Per-bus means over the event: anomalies of solar, wind and net load,
    price level and anomaly, load-weighted cost, and flexibility utilisation."""
    sl = slice(span.start, span.end + 1)
    cols = {}
    for q in ("solar", "wind", "net_load", "lambda"):
        values = node_quantity(q, series, solution, network)
        cols[f"{q}_anomaly"] = values.iloc[sl].mean() - seasonal_average(values)
    cols["lambda_mean"] = solution.duals_balance.iloc[sl].mean()
    demand = pd.DataFrame({b: np.asarray(series.demand[b]) for b in network.bus_ids})
    cols["hourly_cost_mean"] = (demand * solution.duals_balance[network.bus_ids]).iloc[sl].mean()
    for cat in FLEX_CATEGORIES:
        cols[f"utilisation_{cat}"] = utilisation(series, solution, network, cat).iloc[sl].mean()
    out = pd.DataFrame(cols)
    out.index.name = "bus"
    return out


def characterise(spans: list[EventSpan], series: WeatherYearSeries, solution: Solution,
                 network: Network, prefix: str = "") -> list[SdeEvent]:
    """Turn detected spans into :class:`SdeEvent` records with features and composites."""
    cost = hourly_cost(series, solution)
    nl = net_load(series, solution, network)
    events = []
    for i, span in enumerate(spans):
        events.append(SdeEvent(
            id=f"{prefix}{i}",
            weather_year=series.label,
            span=span,
            features=event_features(span, series, solution, network),
            cost=float(cost[span.start:span.end + 1].sum()),
            peak_hour=peak_hour(span, nl),
            composites=event_composite(span, series, solution, network),
        ))
    return events


def composite_mean(events: list[SdeEvent]) -> pd.DataFrame:
    """Average of per-event composites across events (same bus set)."""
    frames = [e.composites for e in events if e.composites is not None]
    if not frames:
        return pd.DataFrame()
    return sum(frames) / len(frames)


def features_frame(events: list[SdeEvent]) -> pd.DataFrame:
    rows = [{"event": e.id, "weather_year": e.weather_year, **asdict(e.features)} for e in events]
    return pd.DataFrame(rows, columns=["event", "weather_year", *FEATURE_NAMES])
