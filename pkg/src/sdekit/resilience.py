"""Resilience metrics across weather years.

Design years are the years a capacity layout was optimised for, operational
years are the years it is dispatched against. EENS is reported as a share
of annual demand, peak deficits in GW.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import pandas as pd

from .events import SdeEvent, hourly_cost, net_load, window_sums
from .model import Network
from .optim import HighsSolver, Solution, build_validation, revenue_ledger, solve
from .timeseries import WeatherYearSeries, annual_cf, daily_mean, winter_load

logger = logging.getLogger(__name__)

# Table 2 metrics; the flag says whether a larger value means a harder year
METRICS = {
    "shadow_prices": True,       # largest window cost (EUR)
    "net_load": True,            # highest hourly net load (GW)
    "prevents_peaks": True,      # mean peak deficit as design year (GW)
    "causes_peaks": True,        # mean peak deficit as operational year (GW)
    "system_cost": True,         # design objective (EUR)
    "solar_cf": False,           # annual solar capacity factor
    "wind_cf": False,            # annual wind capacity factor
    "winter_load": True,         # mean Nov-Feb load (GW)
    "prevents_deficits": True,   # mean EENS share as design year
    "causes_deficits": True,     # mean EENS share as operational year
}
METRIC_UNITS = {
    "shadow_prices": "EUR", "net_load": "GW", "prevents_peaks": "GW", "causes_peaks": "GW",
    "system_cost": "EUR", "solar_cf": "-", "wind_cf": "-", "winter_load": "GW",
    "prevents_deficits": "-", "causes_deficits": "-",
}
HORIZON = {
    "shadow_prices": "short-term", "net_load": "short-term", "prevents_peaks": "short-term",
    "causes_peaks": "short-term", "system_cost": "long-term", "solar_cf": "long-term",
    "wind_cf": "long-term", "winter_load": "long-term", "prevents_deficits": "long-term",
    "causes_deficits": "long-term",
}


# -- validation matrix -------------------------------------------------------------

@dataclass
class ValidationMatrix:
    """EENS share and peak unserved power (GW) for every (design, operational) pair.

    Entries whose validation solve was not optimal are NaN and their status
    is kept in ``status``; they are never read as zero.
    """

    eens: pd.DataFrame
    max_unserved: pd.DataFrame
    status: pd.DataFrame

    @property
    def labels(self) -> list[str]:
        return list(self.eens.index)

    @property
    def poisoned(self) -> list[tuple[str, str]]:
        bad = self.status.stack()
        return [k for k, v in bad.items() if v != "optimal"]

    def diagonal(self) -> pd.Series:
        return pd.Series(np.diag(self.eens.to_numpy()), index=self.labels)

    def long(self) -> pd.DataFrame:
        rows = []
        for d in self.labels:
            for o in self.labels:
                rows.append({"design_year": d, "operational_year": o, "diagonal": d == o,
                             "status": self.status.loc[d, o], "eens": self.eens.loc[d, o],
                             "max_unserved_gw": self.max_unserved.loc[d, o]})
        return pd.DataFrame(rows)


@dataclass
class EntryResult:
    design: str
    operational: str
    status: str
    eens: float
    max_unserved: float
    objective: float = np.nan


def validation_entry(network: Network, capacities: Mapping, series: WeatherYearSeries,
                     design_label: str, resolution: int = 1, tol: float = 1e-6,
                     solver=None) -> EntryResult:
    """One validation solve: dispatch ``capacities`` against ``series`` with load shedding."""
    model = build_validation(network, capacities, series, resolution=resolution)
    sol = solve(model, tol=tol, solver=solver or HighsSolver())
    if not sol.optimal:
        logger.warning("validation %s on %s: %s", design_label, series.label, sol.status)
        return EntryResult(design_label, series.label, sol.status, np.nan, np.nan)
    shed = sol.unserved.to_numpy()
    total_demand = float(series.total_demand().sum())
    # tiny negative values are solver noise around the bound
    eens = max(float(shed.sum()) / total_demand, 0.0) if total_demand > 0 else 0.0
    peak = max(float(shed.sum(axis=1).max()), 0.0) / 1e3
    return EntryResult(design_label, series.label, sol.status, eens, peak, sol.objective)


def assemble_matrix(entries: Sequence[EntryResult], labels: Sequence[str]) -> ValidationMatrix:
    labels = list(labels)
    eens = pd.DataFrame(np.nan, index=labels, columns=labels)
    peak = eens.copy()
    status = pd.DataFrame("missing", index=labels, columns=labels)
    for e in entries:
        eens.loc[e.design, e.operational] = e.eens
        peak.loc[e.design, e.operational] = e.max_unserved
        status.loc[e.design, e.operational] = e.status
    for f in (eens, peak, status):
        f.index.name, f.columns.name = "design_year", "operational_year"
    return ValidationMatrix(eens, peak, status)


def validation_matrix(designs: Sequence[Solution], years: Sequence[WeatherYearSeries],
                      network: Network, resolution: int = 1, tol: float = 1e-6,
                      solver=None, mapper: Callable = map) -> ValidationMatrix:
    """Validate every design against every weather year.

    ``designs[i]`` must be the design of ``years[i]``. ``mapper`` lets the
    caller run entries concurrently (e.g. ``executor.map``).
    """
    if len(designs) != len(years):
        raise ValueError(f"{len(designs)} designs for {len(years)} years")
    labels = [y.label for y in years]
    jobs = [(d, y) for d in range(len(designs)) for y in range(len(years))]

    def run(job):
        d, y = job
        design = designs[d]
        if not design.optimal:
            return EntryResult(labels[d], labels[y], f"design-{design.status}", np.nan, np.nan)
        return validation_entry(network, design.capacities, years[y], labels[d],
                                resolution, tol, solver)

    return assemble_matrix(list(mapper(run, jobs)), labels)


def aggregate_rows_cols(matrix: ValidationMatrix) -> pd.DataFrame:
    """Off-diagonal means per year: row means are the "prevents" metrics of a
    design year, column means the "causes" metrics of an operational year.

    Poisoned entries propagate as NaN.
    """
    labels = matrix.labels
    off = ~np.eye(len(labels), dtype=bool)
    out = {}
    for name, frame in (("deficits", matrix.eens), ("peaks", matrix.max_unserved)):
        v = frame.to_numpy(dtype=float)
        rows, cols, rows_max, cols_max = [], [], [], []
        for i in range(len(labels)):
            r = v[i, off[i]]
            c = v[off[:, i], i]
            rows.append(r.mean() if r.size else 0.0)
            cols.append(c.mean() if c.size else 0.0)
            rows_max.append(r.max() if r.size else 0.0)
            cols_max.append(c.max() if c.size else 0.0)
        out[f"prevents_{name}"] = rows
        out[f"causes_{name}"] = cols
        out[f"prevents_{name}_max"] = rows_max
        out[f"causes_{name}_max"] = cols_max
    frame = pd.DataFrame(out, index=pd.Index(labels, name="weather_year"))
    return frame


# -- similarity ------------------------------------------------------------------------

def wasserstein_1d(a, b) -> float:
    """First Wasserstein distance between two empirical distributions on the line.

    Equal lengths pair sorted values directly. Otherwise the quantile
    functions are integrated exactly over the merged breakpoints.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein_1d needs two non-empty samples")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("samples contain non-finite values")
    if a.size == b.size:
        return float(np.abs(a - b).mean())
    qa = np.arange(1, a.size + 1) / a.size
    qb = np.arange(1, b.size + 1) / b.size
    grid = np.unique(np.concatenate([[0.0], qa, qb]))
    widths = np.diff(grid)
    mids = grid[:-1] + widths / 2
    ia = np.minimum(np.searchsorted(qa, mids), a.size - 1)
    ib = np.minimum(np.searchsorted(qb, mids), b.size - 1)
    return float((np.abs(a[ia] - b[ib]) * widths).sum())


def daily_values(quantity: str, series: WeatherYearSeries, network: Network,
                 solution: Solution | None = None) -> np.ndarray:
    """Calendar-day means of system net load (GW) or wind capacity factor."""
    if quantity == "net_load":
        if solution is not None and solution.optimal:
            hourly = net_load(series, solution, network)
        else:
            # weather-only net load: demand minus installed renewables at nominal size
            hourly = series.total_demand().astype(float)
            for g in network.generators:
                if g.category == "renewable" and g.cf_profile:
                    hourly = hourly - g.p_nom_fixed * series.cf[g.cf_profile]
        return daily_mean(hourly / 1e3)
    if quantity == "wind_cf":
        winds = [g.cf_profile for g in network.generators if g.carrier == "wind" and g.cf_profile]
        if not winds:
            raise ValueError("network has no wind generators")
        return daily_mean(np.mean([series.cf[p] for p in winds], axis=0))
    raise ValueError(f"unknown similarity quantity {quantity!r}")


def similarity_matrix(samples: Mapping[str, np.ndarray]) -> pd.DataFrame:
    """Pairwise Wasserstein distances between named daily samples."""
    labels = list(samples)
    if len(labels) < 2:
        raise ValueError("similarity needs at least two years")
    n = len(labels)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = wasserstein_1d(samples[labels[i]], samples[labels[j]])
    frame = pd.DataFrame(out, index=labels, columns=labels)
    frame.index.name = "weather_year"
    return frame


# -- cost recovery during events ---------------------------------------------------

def event_hours(events: Sequence[SdeEvent], n_hours: int) -> np.ndarray:
    mask = np.zeros(n_hours, dtype=bool)
    for e in events:
        mask[e.span.start:e.span.end + 1] = True
    return mask


def sde_cost_share(solution: Solution, series: WeatherYearSeries, network: Network,
                   events: Sequence[SdeEvent]) -> dict:
    """Share of annual load-weighted cost, and of each category's market
    revenue, that falls within event hours.

    The total share lies in [0, 1] for non-negative prices. Category shares
    use net revenue, so storage that pays for charging outside events can
    exceed 1.
    """
    cost = hourly_cost(series, solution)
    mask = event_hours(events, len(cost))
    total = float(cost.sum())
    shares = {"total": float(cost[mask].sum()) / total if total else 0.0}
    full = revenue_ledger(solution, network)
    during = revenue_ledger(solution, network, hours=np.flatnonzero(mask))
    for cat, rev in full.groupby("category")["revenue"].sum().items():
        part = during.loc[during["category"] == cat, "revenue"].sum()
        shares[cat] = float(part / rev) if rev else 0.0
    return shares


# -- report --------------------------------------------------------------------------

@dataclass
class ResilienceReport:
    metrics: pd.DataFrame
    ranks: pd.DataFrame
    notes: list[str] = field(default_factory=list)

    def ranks_long(self) -> pd.DataFrame:
        long = self.ranks.reset_index().melt(id_vars="weather_year", var_name="metric", value_name="rank")
        long["value"] = [self.metrics.loc[y, m] for y, m in zip(long["weather_year"], long["metric"])]
        long["harder_if_larger"] = long["metric"].map(METRICS)
        long["horizon"] = long["metric"].map(HORIZON)
        return long


def dense_rank(values: pd.Series, descending: bool) -> pd.Series:
    """Rank 1 for the hardest year; equal values share a rank."""
    return values.rank(method="dense", ascending=not descending).astype("Int64")


def _carrier_cf(series: WeatherYearSeries, network: Network, carrier: str) -> float:
    pids = sorted({g.cf_profile for g in network.generators if g.carrier == carrier and g.cf_profile})
    if not pids:
        return np.nan
    return float(np.mean([annual_cf(series, p) for p in pids]))


def build_report(years: Sequence[WeatherYearSeries], designs: Sequence[Solution], network: Network,
                 events: Mapping[str, Sequence[SdeEvent]], matrix: ValidationMatrix,
                 window_T: int, event_tags: Mapping[str, str] | None = None) -> ResilienceReport:
    """One row per weather year with the ten resilience metrics and dense ranks.

    ``event_tags`` maps event id to its cluster tag (S/P/C/E); years without
    events get an empty tag.
    """
    missing = []
    if not years:
        missing.append("weather years")
    if len(designs) != len(years):
        missing.append(f"designs ({len(designs)} for {len(years)} years)")
    if matrix is None:
        missing.append("validation matrix")
    if events is None:
        missing.append("events")
    if missing:
        raise ValueError("report inputs missing: " + ", ".join(missing))
    event_tags = event_tags or {}
    agg = aggregate_rows_cols(matrix)
    rows, notes = [], []
    for series, sol in zip(years, designs):
        y = series.label
        row = {"weather_year": y}
        if sol.optimal:
            cost = hourly_cost(series, sol)
            row["shadow_prices"] = float(window_sums(cost, window_T).max())
            row["net_load"] = float(net_load(series, sol, network).max() / 1e3)
            row["system_cost"] = float(sol.objective)
        else:
            notes.append(f"{y}: design {sol.status}; solution-based metrics are NaN")
            row.update(shadow_prices=np.nan, net_load=np.nan, system_cost=np.nan)
        row["solar_cf"] = _carrier_cf(series, network, "solar")
        row["wind_cf"] = _carrier_cf(series, network, "wind")
        row["winter_load"] = winter_load(series) / 1e3
        for m in ("prevents_peaks", "causes_peaks", "prevents_deficits", "causes_deficits"):
            row[m] = float(agg.loc[y, m])
        evs = list(events.get(y, ()))
        row["n_sde"] = len(evs)
        row["sde_ids"] = " ".join(e.id for e in evs)
        row["sde_types"] = "".join(sorted({event_tags.get(e.id, "") for e in evs}))
        rows.append(row)
    metrics = pd.DataFrame(rows).set_index("weather_year")
    metrics = metrics[[*METRICS, "n_sde", "sde_ids", "sde_types"]]
    ranks = pd.DataFrame({m: dense_rank(metrics[m], harder) for m, harder in METRICS.items()})
    ranks.index.name = "weather_year"
    return ResilienceReport(metrics, ranks, notes)


# -- export ----------------------------------------------------------------------------

def _csv(frame: pd.DataFrame, path: Path, index=True):
    frame.to_csv(path, index=index, float_format="%.10g", lineterminator="\n")
    return path


def export_matrix(matrix: ValidationMatrix, directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    return [
        _csv(matrix.eens, d / "eens.csv"),
        _csv(matrix.max_unserved, d / "max_unserved_gw.csv"),
        _csv(matrix.status, d / "status.csv"),
        _csv(matrix.long(), d / "matrix_long.csv", index=False),
        _csv(aggregate_rows_cols(matrix), d / "aggregates.csv"),
    ]


def load_matrix(directory: str | Path) -> ValidationMatrix:
    d = Path(directory)
    read = lambda name, **kw: pd.read_csv(d / name, index_col=0, float_precision="round_trip", **kw)
    eens = read("eens.csv")
    status = read("status.csv", dtype=str)
    peak = read("max_unserved_gw.csv")
    for f in (eens, status, peak):
        f.index = f.index.astype(str)
        f.columns = f.columns.astype(str)
    return ValidationMatrix(eens, peak, status)


def export_report(report: ResilienceReport, directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = [
        _csv(report.metrics, d / "metrics.csv"),
        _csv(report.ranks, d / "ranks.csv"),
        _csv(report.ranks_long(), d / "ranks_long.csv", index=False),
    ]
    payload = {
        "metrics": {m: {"unit": METRIC_UNITS[m], "horizon": HORIZON[m], "harder_if_larger": METRICS[m]}
                    for m in METRICS},
        "years": json.loads(report.metrics.reset_index().to_json(orient="records", double_precision=10)),
        "notes": report.notes,
    }
    path = d / "report.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    paths.append(path)
    return paths
